"""Weak-selection pair-approximation replicator dynamics for multiplayer games on regular graphs."""

__version__ = "0.1.0"
