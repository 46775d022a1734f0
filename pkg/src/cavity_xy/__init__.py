"""Engineered XY spin chains in coupled cavity arrays."""
