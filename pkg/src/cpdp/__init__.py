"""Cross-project defect prediction: transfer-learning methods, benchmarking and
meta-learned method recommendation."""

__version__ = "0.1.0"
