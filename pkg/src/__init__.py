"""DID/LDV bracketing toolkit."""
__version__ = "1.0.0"
