"""Reachability checking for updatable timed automata networks."""

__version__ = "0.1.0"
