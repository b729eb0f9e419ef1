"""Computable models of self-similar decomposition spaces of finite type."""

__version__ = "0.1.0"
