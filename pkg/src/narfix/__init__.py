"""Non-autoregressive program repair on a toy language."""
__version__ = "0.1.0"
