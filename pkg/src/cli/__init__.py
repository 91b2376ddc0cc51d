# Command-line interface for the Dunkl harmonic analysis experiments
