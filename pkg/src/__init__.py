# Vertical Consensus Inference
__version__ = "1.0.0"
