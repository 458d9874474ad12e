"""Multi-robot coordination under adversarial perception, simulated at the detection level."""

__version__ = "0.1.0"
