"""Feature-level evaluation of reconstructed thumbnails over a file-based
interchange boundary: CNN feature distances and classification accuracy."""

from .harness import (BaselineTooWeak, FeatureLossReport, classify_accuracy,
                      feature_loss, train_classifier)
from .interchange import InterchangeError, load_directory, load_tensor, read_manifest
from .model import SmallCnn, load_model, save_model

__version__ = "0.1.0"
