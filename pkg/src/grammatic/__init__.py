"""Safety verification of heap-manipulating programs by synthesizing run grammars."""

__version__ = "0.1.0"
