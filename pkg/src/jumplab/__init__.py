"""Infer platformer jump hybrid-automaton models from frame logs."""

__version__ = "0.1.0"
