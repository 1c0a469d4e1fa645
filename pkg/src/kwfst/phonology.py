"""Phoneme inventory, phonological features and the heuristic similarity score.

A similarity between two phonemes is the weighted sum of the feature
dimensions on which they agree.  Weights are normalized per class pairing so
that sim(p, p) == 1; phonemes of different classes share nothing beyond the
(always differing) class dimension and score 0.
"""

from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import InventoryError

BLANK = "<blank>"
BLANK_ID = 0

CONSONANT_DIMS = ("voicing", "place", "manner")
VOWEL_DIMS = ("height", "backness", "rounding", "tenseness")

FEATURE_VALUES = {
    "class": {"consonant", "vowel"},
    "voicing": {"voiced", "voiceless"},
    "place": {"bilabial", "labiodental", "dental", "alveolar", "postalveolar",
              "palatal", "velar", "glottal"},
    "manner": {"stop", "fricative", "affricate", "nasal", "liquid", "glide"},
    "height": {"high", "mid", "low"},
    "backness": {"front", "central", "back"},
    "rounding": {"rounded", "unrounded"},
    "tenseness": {"tense", "lax"},
}


@dataclass(frozen=True)
class PhonemeFeatureVector:
    klass: str
    voicing: str = None
    place: str = None
    manner: str = None
    height: str = None
    backness: str = None
    rounding: str = None
    tenseness: str = None

    def __post_init__(self):
        if self.klass not in FEATURE_VALUES["class"]:
            raise InventoryError(f"unknown class {self.klass!r}")
        active = CONSONANT_DIMS if self.klass == "consonant" else VOWEL_DIMS
        inactive = VOWEL_DIMS if self.klass == "consonant" else CONSONANT_DIMS
        for dim in active:
            value = getattr(self, dim)
            if value is None:
                raise InventoryError(f"missing {dim} for a {self.klass}")
            if value not in FEATURE_VALUES[dim]:
                raise InventoryError(f"unknown {dim} value {value!r}")
        for dim in inactive:
            if getattr(self, dim) is not None:
                raise InventoryError(
                    f"{dim} must not be set on a {self.klass}")

    def value(self, dim):
        return self.klass if dim == "class" else getattr(self, dim)


@dataclass(frozen=True)
class FeatureWeights:
    """Per-dimension weights used by the similarity score.

    Each class pairing must sum to 1 so self-similarity is exactly 1.
    """
    consonant: dict = field(default_factory=lambda: {
        "class": 0.25, "manner": 0.30, "place": 0.25, "voicing": 0.20})
    vowel: dict = field(default_factory=lambda: {
        "class": 0.25, "height": 0.30, "backness": 0.25,
        "rounding": 0.10, "tenseness": 0.10})

    def __post_init__(self):
        for name, table in (("consonant", self.consonant), ("vowel", self.vowel)):
            if abs(sum(table.values()) - 1.0) > 1e-9:
                raise InventoryError(f"{name} weights must sum to 1")


class PhonemeInventory:
    """Symbol table: id 0 is the CTC blank, ids 1..n are phonemes."""

    def __init__(self, entries):
        labels = [label for label, _ in entries]
        if len(set(labels)) != len(labels):
            dup = sorted(l for l in set(labels) if labels.count(l) > 1)
            raise InventoryError(f"duplicate label(s): {', '.join(dup)}")
        if BLANK in labels:
            raise InventoryError(f"{BLANK} is reserved")
        self.labels = [BLANK] + labels
        self.features = {label: fv for label, fv in entries}
        self._ids = {label: i for i, label in enumerate(self.labels)}

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._ids

    @property
    def phonemes(self):
        return self.labels[1:]

    def symbol_id(self, label):
        if label not in self._ids:
            raise InventoryError(f"unknown phoneme {label!r}")
        return self._ids[label]

    def feature_vector(self, label):
        if label == BLANK:
            raise InventoryError("blank has no features")
        if label not in self.features:
            raise InventoryError(f"unknown phoneme {label!r}")
        return self.features[label]


def parse_inventory(text):
    entries = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        label = parts[0]
        fields = {}
        for part in parts[1:]:
            if "=" not in part:
                raise InventoryError(f"line {lineno}: malformed field {part!r}")
            key, value = part.split("=", 1)
            if key == "class":
                key = "klass"
            if key in fields:
                raise InventoryError(f"line {lineno}: repeated field {part!r}")
            fields[key] = value
        if "klass" not in fields:
            raise InventoryError(f"line {lineno}: missing class for {label}")
        try:
            fv = PhonemeFeatureVector(**fields)
        except TypeError:
            raise InventoryError(f"line {lineno}: unknown feature name")
        entries.append((label, fv))
    return PhonemeInventory(entries)


def load_inventory(path=None):
    """Load an inventory description document; default is the bundled ARPAbet set."""
    if path is None:
        text = resources.files("kwfst.data").joinpath(
            "arpabet_inventory.txt").read_text()
    else:
        with open(path) as f:
            text = f.read()
    return parse_inventory(text)


def similarity(inventory, p, q, weights=None):
    """Weighted fraction of shared feature dimensions, in [0, 1]."""
    weights = weights or FeatureWeights()
    fp = inventory.feature_vector(p)
    fq = inventory.feature_vector(q)
    if fp.klass != fq.klass:
        return 0.0
    table = weights.consonant if fp.klass == "consonant" else weights.vowel
    return sum(w for dim, w in table.items() if fp.value(dim) == fq.value(dim))


class SimilarityMatrix:
    """Dense similarity over the non-blank phonemes, indexed by symbol id - 1."""

    def __init__(self, inventory, weights=None):
        self.inventory = inventory
        self.weights = weights or FeatureWeights()
        n = len(inventory.phonemes)
        values = np.zeros((n, n))
        for i, p in enumerate(inventory.phonemes):
            for j, q in enumerate(inventory.phonemes):
                values[i, j] = similarity(inventory, p, q, self.weights)
        self.values = values

    def sim(self, p, q):
        i = self.inventory.symbol_id(p) - 1
        j = self.inventory.symbol_id(q) - 1
        return self.values[i, j]

    def top_k_neighbors(self, p, k):
        """The k most similar phonemes to p, p itself first; ties by symbol id."""
        phonemes = self.inventory.phonemes
        if not 1 <= k <= len(phonemes) - 1:
            raise InventoryError(
                f"k={k} out of range 1..{len(phonemes) - 1} for top-k neighbors")
        i = self.inventory.symbol_id(p) - 1
        order = sorted(range(len(phonemes)),
                       key=lambda j: (-self.values[i, j], j))
        return [phonemes[j] for j in order[:k]]


def top_k_neighbors(inventory, p, k, weights=None):
    return SimilarityMatrix(inventory, weights).top_k_neighbors(p, k)
