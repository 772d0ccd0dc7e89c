"""Entanglement induced between two qubits by a transverse-field Ising chain."""

__version__ = "0.1.0"
