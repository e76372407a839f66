"""Process-matrix analysis of single-qubit noise under quantum error correction."""
