"""Posterior lattices and the KWPO v1 binary file format.

A lattice stores per-frame natural-log probabilities over the CTC alphabet
(blank at index 0).  KWPO v1 layout, all little-endian:

    magic "KWPO" | version u16=1 | n_frames u32 | n_symbols u32
    | frame_duration_ms f32 | symbol table (u8 length + UTF-8 per symbol)
    | payload: n_frames * n_symbols f32 log-probs, frame-major
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import LatticeFormatError
from .phonology import BLANK

MAGIC = b"KWPO"
VERSION = 1
LOG_FLOOR = -1e4
NORM_TOL = 1e-3


@dataclass
class PosteriorLattice:
    symbols: list
    log_probs: np.ndarray
    frame_duration_ms: float = 20.0
    lattice_id: str = ""

    def __post_init__(self):
        self.log_probs = np.asarray(self.log_probs, dtype=np.float32)
        if self.log_probs.ndim != 2 and self.log_probs.size == 0:
            self.log_probs = self.log_probs.reshape(0, len(self.symbols))
        # storage is f32; keep the in-memory value identical to what a
        # round-trip through the file would produce
        self.frame_duration_ms = float(np.float32(self.frame_duration_ms))

    @property
    def n_frames(self):
        return self.log_probs.shape[0]

    @property
    def n_symbols(self):
        return len(self.symbols)

    def __eq__(self, other):
        return (isinstance(other, PosteriorLattice)
                and self.symbols == other.symbols
                and self.frame_duration_ms == other.frame_duration_ms
                and self.log_probs.shape == other.log_probs.shape
                and np.array_equal(self.log_probs, other.log_probs))


def clamp_log_probs(log_probs):
    """Clamp at the storage floor and renormalize each row to logsumexp 0."""
    lp = np.asarray(log_probs, dtype=np.float64)
    lp = np.where(np.isfinite(lp), np.maximum(lp, LOG_FLOOR), LOG_FLOOR)
    if lp.shape[0]:
        m = lp.max(axis=1, keepdims=True)
        lse = m + np.log(np.exp(lp - m).sum(axis=1, keepdims=True))
        lp = np.maximum(lp - lse, LOG_FLOOR)
    return lp.astype(np.float32)


def validate(lattice, inventory=None):
    """Check all lattice invariants; returns a list of violation strings."""
    violations = []
    if not lattice.symbols or lattice.symbols[0] != BLANK:
        violations.append(f"symbol 0 must be {BLANK}")
    if lattice.log_probs.ndim != 2 or (
            lattice.log_probs.size and
            lattice.log_probs.shape[1] != lattice.n_symbols):
        violations.append("log_probs shape does not match symbol count")
        return violations
    if not (math.isfinite(lattice.frame_duration_ms)
            and lattice.frame_duration_ms > 0):
        violations.append("frame_duration_ms must be finite and positive")
    lp = lattice.log_probs.astype(np.float64)
    bad = ~np.isfinite(lp)
    if bad.any():
        t = int(np.argwhere(bad)[0][0])
        violations.append(f"non-finite log-prob at frame {t}")
    else:
        for t in range(lattice.n_frames):
            row = lp[t]
            m = row.max()
            lse = m + math.log(np.exp(row - m).sum())
            if abs(lse) > NORM_TOL:
                violations.append(
                    f"frame {t} not normalized (logsumexp {lse:+.4g})")
    if inventory is not None:
        for s in lattice.symbols[1:]:
            if s not in inventory:
                violations.append(f"symbol {s!r} not in inventory")
    return violations


def write_posteriors(lattice, path, inventory=None):
    """Serialize to KWPO v1; refuses invalid lattices before writing."""
    problems = validate(lattice, inventory)
    if problems:
        raise LatticeFormatError("; ".join(problems))
    header = MAGIC + struct.pack(
        "<HIIf", VERSION, lattice.n_frames, lattice.n_symbols,
        lattice.frame_duration_ms)
    table = b""
    for s in lattice.symbols:
        enc = s.encode("utf-8")
        if len(enc) > 255:
            raise LatticeFormatError(f"symbol too long: {s!r}")
        table += struct.pack("B", len(enc)) + enc
    payload = np.ascontiguousarray(
        lattice.log_probs, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header + table + payload)


def read_posteriors(path, inventory=None):
    """Read and validate a KWPO v1 file."""
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 18:
        raise LatticeFormatError("file too short for KWPO header")
    if data[:4] != MAGIC:
        raise LatticeFormatError(f"bad magic {data[:4]!r}")
    version, n_frames, n_symbols, dur = struct.unpack("<HIIf", data[4:18])
    if version != VERSION:
        raise LatticeFormatError(f"unsupported KWPO version {version}")
    pos = 18
    symbols = []
    for _ in range(n_symbols):
        if pos >= len(data):
            raise LatticeFormatError("truncated symbol table")
        n = data[pos]
        pos += 1
        if pos + n > len(data):
            raise LatticeFormatError("truncated symbol table")
        try:
            symbols.append(data[pos:pos + n].decode("utf-8"))
        except UnicodeDecodeError:
            raise LatticeFormatError("symbol table is not valid UTF-8")
        pos += n
    want = n_frames * n_symbols * 4
    if len(data) - pos != want:
        raise LatticeFormatError(
            f"payload has {len(data) - pos} bytes, expected {want}")
    log_probs = np.frombuffer(
        data[pos:], dtype="<f4").reshape(n_frames, n_symbols).copy()
    lattice = PosteriorLattice(symbols, log_probs, frame_duration_ms=dur)
    problems = validate(lattice, inventory)
    if problems:
        raise LatticeFormatError("; ".join(problems))
    return lattice
