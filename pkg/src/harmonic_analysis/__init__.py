# Rational Dunkl Harmonic Analysis Package 
