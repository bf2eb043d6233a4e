"""Chaotic-parameter extreme learning machine over CKKS-encrypted data."""

__version__ = "0.1.0"
