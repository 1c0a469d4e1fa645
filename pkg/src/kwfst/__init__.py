"""kwfst: verbatim phoneme transcription of disfluent child speech.

A similarity-weighted WFST decoder turns frame-level phoneme posterior
lattices into edit-annotated verbatim transcriptions, with PER evaluation,
rubric scoring against proctor references, and consolidated assessment
reports.
"""

from .decoder import DecodedToken, DecoderConfig, Transcription, decode, \
    greedy_decode, select_k
from .lattice import PosteriorLattice, read_posteriors, write_posteriors
from .phonology import PhonemeInventory, SimilarityMatrix, load_inventory

__version__ = "0.1.0"

__all__ = [
    "DecodedToken", "DecoderConfig", "Transcription", "decode",
    "greedy_decode", "select_k", "PosteriorLattice", "read_posteriors",
    "write_posteriors", "PhonemeInventory", "SimilarityMatrix",
    "load_inventory", "__version__",
]
