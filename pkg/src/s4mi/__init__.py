"""s4mi: supervised, semi-, self- and unsupervised training for medical image analysis under label scarcity."""

__version__ = "0.1.0"
