# Dunkl Hardy-Space Verification Project - Source Package 
