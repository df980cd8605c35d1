"""Toolkit for certifying divisibility of quantum dynamical maps and
evaluating entropic and discrimination-based non-Markovianity witnesses."""

__version__ = "0.1.0"
