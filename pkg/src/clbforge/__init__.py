"""clbforge: inject hash-obfuscated logic bombs with self-checksumming into C firmware."""

__version__ = "0.1.0"
