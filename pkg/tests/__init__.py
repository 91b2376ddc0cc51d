# Tests for the dunkl-hardy harmonic analysis package
