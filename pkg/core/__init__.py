"""Quantum state algebra package."""
