"""Iterative lattice-reduction-aided K-best soft MIMO detection with
fixed-point emulation."""

__version__ = "0.1.0"
