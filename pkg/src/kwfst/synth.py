"""Synthetic posterior lattices with controlled disfluency injection.

Stands in for recorded child speech: a base phoneme sequence plus an ordered
edit list is realized as a frame-level posterior lattice.  Confusion mass is
spread in proportion to phoneme similarity so substitution candidates are
acoustically plausible; planted substitutions keep a share of mass on the
prompted phoneme (children's mispronunciations are acoustically
intermediate); occasional "slip" frames and log-domain jitter model
articulatory variability, both scaled by (1 - confidence).
"""

from dataclasses import dataclass, field

import numpy as np

from .decoder import DELETION, INSERTION, MATCH, REPETITION, SUBSTITUTION
from .errors import DataError
from .lattice import PosteriorLattice, clamp_log_probs
from .phonology import BLANK

# share of a frame's confusion mass assigned to blank
_BLANK_SHARE = 0.35
# slip frames: transient mass excursions toward a similar phoneme
_SLIP_RATE = 0.4            # per-frame probability factor, times (1 - conf)
_SLIP_CONFUSION = 0.55      # mass on the confusion phoneme in a slip frame
_SLIP_TRUTH = 0.30          # mass retained on the intended symbol
_JITTER_SCALE = 2.0         # log-domain jitter sigma, times (1 - conf)


@dataclass(frozen=True)
class Substitute:
    position: int           # 1-based position in the current sequence
    phoneme: str


@dataclass(frozen=True)
class Insert:
    position: int           # insert before this 1-based position
    phoneme: str


@dataclass(frozen=True)
class Delete:
    position: int


@dataclass(frozen=True)
class Repeat:
    position: int
    times: int = 1


@dataclass
class SynthesisPlan:
    base_sequence: list
    edits: list = field(default_factory=list)
    frames_per_phoneme: int = 4
    blank_frames_between: int = 1
    confidence: float = 1.0
    seed: int = 0
    substitution_blend: float = 0.3   # confidence share kept on the prompt
    frame_duration_ms: float = 20.0

    def __post_init__(self):
        if not self.base_sequence:
            raise DataError("base sequence must be non-empty")
        if not 0 < self.confidence <= 1:
            raise DataError("confidence must be in (0, 1]")
        if self.frames_per_phoneme < 1 or self.blank_frames_between < 0:
            raise DataError("bad frame counts")
        if not 0 <= self.substitution_blend < 0.5:
            raise DataError("substitution_blend must be in [0, 0.5)")


def apply_edits(plan):
    """Realize the edit plan.

    Returns (realized phoneme sequence, ground-truth annotations); each
    annotation is a dict {edit, phoneme, expected} in realized order, with
    deletions interleaved at the positions they vacate.
    """
    items = [{"phoneme": p, "edit": MATCH, "expected": None}
             for p in plan.base_sequence]
    for edit in plan.edits:
        pos = edit.position
        live = [i for i, it in enumerate(items) if it["edit"] != DELETION]
        if isinstance(edit, Insert):
            if not 1 <= pos <= len(live) + 1:
                raise DataError(
                    f"insert position {pos} out of range after prior edits")
            at = live[pos - 1] if pos <= len(live) else len(items)
            items.insert(at, {"phoneme": edit.phoneme, "edit": INSERTION,
                              "expected": None})
            continue
        if not 1 <= pos <= len(live):
            raise DataError(
                f"position {pos} out of range after prior edits")
        at = live[pos - 1]
        if isinstance(edit, Substitute):
            items[at]["expected"] = items[at]["phoneme"]
            items[at]["phoneme"] = edit.phoneme
            items[at]["edit"] = SUBSTITUTION
        elif isinstance(edit, Delete):
            items[at]["expected"] = items[at]["phoneme"]
            items[at]["edit"] = DELETION
        elif isinstance(edit, Repeat):
            if edit.times < 1:
                raise DataError("repeat count must be >= 1")
            p = items[at]["phoneme"]
            for n in range(edit.times):
                items.insert(at + 1 + n, {"phoneme": p, "edit": REPETITION,
                                          "expected": None})
        else:
            raise DataError(f"unknown edit {edit!r}")
    realized = [it["phoneme"] for it in items if it["edit"] != DELETION]
    truth = [dict(it) for it in items]
    return realized, truth


def _spread(sim_row, blank_share=_BLANK_SHARE):
    """Confusion-mass profile over the full alphabet, blank included."""
    w = np.concatenate(([0.0], np.maximum(sim_row, 0.0) ** 2)) + 1e-6
    w[0] = 0.0
    w /= w.sum()
    w *= (1.0 - blank_share)
    w[0] = blank_share
    return w


def synthesize_posteriors(plan, inventory, similarity):
    """Generate a validated posterior lattice realizing the plan."""
    realized, truth = apply_edits(plan)
    rng = np.random.default_rng(plan.seed)
    symbols = list(inventory.labels)
    sym_id = inventory.symbol_id
    n = len(symbols)
    conf = plan.confidence

    frames = []

    def phoneme_frames(item):
        p = item["phoneme"]
        pid = sym_id(p)
        spread = _spread(similarity.values[pid - 1])
        for _ in range(plan.frames_per_phoneme):
            w = np.zeros(n)
            slip = conf < 1 and rng.random() < _SLIP_RATE * (1 - conf)
            if slip:
                cand = spread[1:].copy()
                cand[pid - 1] = 0.0
                cand /= cand.sum()
                r = 1 + rng.choice(n - 1, p=cand)
                w += (1 - _SLIP_CONFUSION - _SLIP_TRUTH) * spread
                w[r] += _SLIP_CONFUSION
                w[pid] += _SLIP_TRUTH
            else:
                w += (1 - conf) * spread
                if item["edit"] == SUBSTITUTION and plan.substitution_blend:
                    w[pid] += conf * (1 - plan.substitution_blend)
                    w[sym_id(item["expected"])] += conf * plan.substitution_blend
                else:
                    w[pid] += conf
            frames.append(w)

    def blank_frames():
        for _ in range(plan.blank_frames_between):
            w = np.zeros(n)
            w[0] = conf
            w[1:] = (1 - conf) / (n - 1)
            frames.append(w)

    emitted = [it for it in truth if it["edit"] != DELETION]
    for i, item in enumerate(emitted):
        phoneme_frames(item)
        if i < len(emitted) - 1:
            blank_frames()

    if frames:
        probs = np.stack(frames)
        if conf < 1:
            sigma = _JITTER_SCALE * (1 - conf)
            probs = probs * np.exp(sigma * rng.standard_normal(probs.shape))
        with np.errstate(divide="ignore"):
            logp = np.where(probs > 0, np.log(np.maximum(probs, 1e-300)),
                            -np.inf)
        logp = clamp_log_probs(logp)
    else:
        logp = np.zeros((0, n), dtype=np.float32)
    return PosteriorLattice(symbols, logp,
                            frame_duration_ms=plan.frame_duration_ms)
