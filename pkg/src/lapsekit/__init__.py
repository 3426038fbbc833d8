"""Lapse prediction toolkit: synthetic portfolios, imbalance handling,
logit / elastic net / tree ensembles, ROC-PR evaluation and normalized
variable relevance."""

__version__ = "0.1.0"
