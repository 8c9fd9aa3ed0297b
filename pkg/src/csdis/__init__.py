"""Content/style disentanglement metrics: distance correlation and information over bias."""

__version__ = "0.1.0"
