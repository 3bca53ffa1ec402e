"""Causal compatibility tests for multi-network scenarios via postselected inflation LPs."""
__version__ = "0.1.0"
