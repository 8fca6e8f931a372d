"""Synthesis of DSL programs that link entities in form-like documents."""

__version__ = "0.1.0"
