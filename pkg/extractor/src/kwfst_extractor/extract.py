"""Audio to KWPO posterior lattices.

Runs a pretrained phoneme-CTC acoustic model (Wav2Vec2-style, loaded with
transformers) over an audio file and writes the per-frame log-softmax as a
KWPO v1 lattice in inventory order.  Model labels are mapped onto inventory
labels through a plain-text map file because public checkpoints disagree on
phoneme spellings.
"""

import json
import logging
import tempfile
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from scipy.signal import resample_poly

from kwfst.errors import DataError
from kwfst.lattice import (PosteriorLattice, clamp_log_probs, read_posteriors,
                           validate, write_posteriors)
from kwfst.phonology import BLANK, load_inventory

log = logging.getLogger("kwfst_extractor")

DEFAULT_SAMPLE_RATE = 16000


@dataclass
class ExtractionJob:
    audio_path: str
    model: str                   # checkpoint id or local directory
    map_path: str                # model-label -> inventory-label map file
    output_path: str
    sample_rate: int = DEFAULT_SAMPLE_RATE   # rate the model expects


def load_label_map(path):
    """Parse `MODEL_LABEL INVENTORY_LABEL` lines; `#` comments allowed."""
    mapping = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected two labels per line")
        model_label, inv_label = parts
        if model_label in mapping:
            raise DataError(f"{path}:{lineno}: duplicate model label "
                            f"{model_label!r}")
        mapping[model_label] = inv_label
    targets = list(mapping.values())
    if len(set(targets)) != len(targets):
        dup = sorted(t for t in set(targets) if targets.count(t) > 1)
        raise DataError("label map is not injective; repeated targets: "
                        + ", ".join(dup))
    return mapping


def read_audio(path, target_rate):
    """Load a PCM wav file as float32 mono, resampled to the target rate."""
    try:
        with wave.open(str(path), "rb") as f:
            rate = f.getframerate()
            width = f.getsampwidth()
            channels = f.getnchannels()
            frames = f.readframes(f.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise DataError(f"cannot decode audio {path}: {exc}")
    if width == 2:
        samples = np.frombuffer(frames, dtype="<i2").astype(np.float32)
        samples /= 32768.0
    elif width == 1:
        samples = np.frombuffer(frames, dtype=np.uint8).astype(np.float32)
        samples = samples / 128.0 - 1.0
    else:
        raise DataError(f"unsupported sample width {width} in {path}")
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    if rate != target_rate:
        from math import gcd
        g = gcd(rate, target_rate)
        samples = resample_poly(samples, target_rate // g, rate // g)
    return samples.astype(np.float32)


def model_labels(model_dir_or_id):
    """id -> label for the checkpoint's CTC head, from its vocab file."""
    vocab_path = Path(model_dir_or_id) / "vocab.json"
    if not vocab_path.exists():
        try:
            from huggingface_hub import hf_hub_download
            vocab_path = Path(hf_hub_download(model_dir_or_id, "vocab.json"))
        except Exception as exc:
            raise DataError(f"cannot locate vocab.json for "
                            f"{model_dir_or_id}: {exc}")
    vocab = json.loads(vocab_path.read_text())
    labels = [None] * len(vocab)
    for label, idx in vocab.items():
        labels[idx] = label
    if any(label is None for label in labels):
        raise DataError("vocab ids are not contiguous")
    return labels


def _frame_duration_ms(config, sample_rate):
    stride = 1
    for s in config.conv_stride:
        stride *= s
    return 1000.0 * stride / sample_rate


class Extractor:
    """One loaded model instance; reusable across files, no shared state
    beyond the frozen weights."""

    def __init__(self, model, map_path, sample_rate=DEFAULT_SAMPLE_RATE,
                 inventory=None):
        from transformers import Wav2Vec2ForCTC

        self.inventory = inventory or load_inventory()
        self.sample_rate = sample_rate
        self.model = Wav2Vec2ForCTC.from_pretrained(model)
        self.model.eval()
        self.labels = model_labels(model)
        self.frame_duration_ms = _frame_duration_ms(self.model.config,
                                                    sample_rate)
        mapping = load_label_map(map_path)
        blank_id = self.model.config.pad_token_id
        self.targets = []
        missing = []
        for idx, label in enumerate(self.labels):
            if idx == blank_id:
                self.targets.append(0)
                continue
            target = mapping.get(label)
            if target is None:
                missing.append(label)
            elif target == BLANK or target not in self.inventory:
                raise DataError(f"map target {target!r} for model label "
                                f"{label!r} is not an inventory phoneme")
            else:
                self.targets.append(self.inventory.symbol_id(target))
        if missing:
            raise DataError("unmappable model label(s): "
                            + ", ".join(sorted(missing)))

    def lattice(self, audio_path):
        samples = read_audio(audio_path, self.sample_rate)
        x = torch.from_numpy(samples)[None, :]
        if samples.size and samples.std() > 0:
            x = (x - x.mean()) / (x.std() + 1e-7)
        with torch.inference_mode():
            logits = self.model(x).logits[0]
        logp = torch.log_softmax(logits.double(), dim=-1).numpy()
        n_frames = logp.shape[0]
        n_inv = len(self.inventory)
        out = np.full((n_frames, n_inv), -np.inf)
        # inventory order; symbols absent from the model keep zero mass
        for idx, target in enumerate(self.targets):
            out[:, target] = logp[:, idx]
        lat = PosteriorLattice(list(self.inventory.labels),
                               clamp_log_probs(out),
                               frame_duration_ms=self.frame_duration_ms)
        problems = validate(lat, self.inventory)
        if problems:
            raise DataError("extracted lattice is invalid: "
                            + "; ".join(problems))
        return lat


def extract(job, extractor=None):
    """Run the job and write the KWPO file; returns the lattice."""
    if extractor is None:
        extractor = Extractor(job.model, job.map_path, job.sample_rate)
    lat = extractor.lattice(job.audio_path)
    write_posteriors(lat, job.output_path, extractor.inventory)
    return lat


def verify_roundtrip(path, inventory=None):
    """True iff the primary reader accepts the file and re-serialization is
    byte-identical; false (never raises) with a logged diagnostic."""
    inventory = inventory or load_inventory()
    try:
        lat = read_posteriors(path, inventory)
        with tempfile.NamedTemporaryFile(suffix=".kwpo") as tmp:
            write_posteriors(lat, tmp.name, inventory)
            rewritten = Path(tmp.name).read_bytes()
    except Exception as exc:
        log.warning("round-trip failed for %s: %s", path, exc)
        return False
    if rewritten != Path(path).read_bytes():
        log.warning("re-serialization of %s is not byte-identical", path)
        return False
    return True
