"""Session fixtures: a tiny deterministic phoneme-CTC checkpoint saved
locally (no network) plus sample wav clips."""

import json
import wave

import numpy as np
import pytest
import torch

VOCAB = {"<pad>": 0, "B": 1, "P": 2, "ER": 3, "D": 4,
         "S": 5, "IY": 6, "AH": 7, "T": 8, "K": 9}


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    from transformers import Wav2Vec2Config, Wav2Vec2ForCTC

    torch.manual_seed(1234)
    config = Wav2Vec2Config(
        vocab_size=len(VOCAB), hidden_size=32, num_hidden_layers=1,
        num_attention_heads=2, intermediate_size=64,
        conv_dim=(16, 16, 16), conv_kernel=(10, 8, 8), conv_stride=(5, 4, 4),
        num_conv_pos_embeddings=16, num_conv_pos_embedding_groups=4,
        pad_token_id=0)
    model = Wav2Vec2ForCTC(config)
    with torch.no_grad():
        # a CTC model spends most frames on blank; bias the random head the
        # same way so the silent-clip fixture is meaningful
        model.lm_head.bias[0] += 6.0
    outdir = tmp_path_factory.mktemp("ckpt") / "tiny-ctc"
    model.save_pretrained(outdir)
    (outdir / "vocab.json").write_text(json.dumps(VOCAB))
    return outdir


@pytest.fixture(scope="session")
def label_map(tmp_path_factory):
    path = tmp_path_factory.mktemp("maps") / "labels.map"
    lines = ["# model label -> inventory label"]
    lines += [f"{label} {label}" for label in VOCAB if label != "<pad>"]
    path.write_text("\n".join(lines) + "\n")
    return path


def write_wav(path, samples, rate, channels=1):
    pcm = np.clip(samples, -1.0, 1.0)
    pcm = (pcm * 32767).astype("<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(channels)
        f.setsampwidth(2)
        f.setframerate(rate)
        f.writeframes(pcm.tobytes())


@pytest.fixture(scope="session")
def sample_clips(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("clips")
    rng = np.random.default_rng(77)
    clips = []

    def add(name, samples, rate, channels=1):
        path = outdir / name
        write_wav(path, samples, rate, channels)
        clips.append(path)

    t16 = np.arange(16000) / 16000
    add("tone.wav", 0.4 * np.sin(2 * np.pi * 220 * t16), 16000)
    add("noise.wav", 0.2 * rng.normal(size=16000).astype(np.float32), 16000)
    add("chirp.wav", 0.3 * np.sin(2 * np.pi * (100 + 400 * t16) * t16), 16000)
    t8 = np.arange(8000) / 8000
    add("low_rate.wav", 0.3 * np.sin(2 * np.pi * 330 * t8), 8000)
    stereo = np.stack([0.2 * np.sin(2 * np.pi * 440 * t16),
                       0.1 * rng.normal(size=16000)], axis=1).ravel()
    add("stereo.wav", stereo, 16000, channels=2)
    return clips


@pytest.fixture(scope="session")
def silent_clip(tmp_path_factory):
    path = tmp_path_factory.mktemp("silence") / "silent.wav"
    write_wav(path, np.zeros(16000), 16000)
    return path
