"""Soft-information DNA storage codec: encoder, channel simulator, decoder, analytics."""

__version__ = "0.1.0"
