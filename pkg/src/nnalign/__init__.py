"""Unsupervised neural word alignment via window encoders and score
aggregation: training, decoding, symmetrization, and evaluation."""

__version__ = "0.1.0"
