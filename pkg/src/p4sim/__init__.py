"""p4sim: interpreter, network simulator, and analysis tools for P4_14."""

__version__ = "0.1.0"
