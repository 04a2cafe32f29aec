"""Sparse J-factorizer: sparse factorizations of the scaled all-ones matrix."""
