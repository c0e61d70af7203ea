"""Fermionic 2-RDM representability toolkit."""

__version__ = "0.1.0"
