"""Audio to KWPO posterior lattices via a pretrained phoneme-CTC model."""

from .extract import (ExtractionJob, Extractor, extract, load_label_map,
                      read_audio, verify_roundtrip)

__version__ = "0.1.0"

__all__ = ["ExtractionJob", "Extractor", "extract", "load_label_map",
           "read_audio", "verify_roundtrip", "__version__"]
