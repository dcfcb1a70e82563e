"""Quantum double models D(G) with gapped boundaries: anyons, boundaries,
defects, M-3j symbols, Wilson operators and a small lattice simulator."""

__version__ = "0.1.0"
