import numpy as np
import pytest

from kwfst.errors import LatticeFormatError
from kwfst.lattice import (LOG_FLOOR, PosteriorLattice, clamp_log_probs,
                           read_posteriors, validate, write_posteriors)
from kwfst.phonology import load_inventory

INV = load_inventory()


def one_hot(labels, symbols=None):
    symbols = list(symbols or INV.labels)
    probs = np.full((len(labels), len(symbols)), 1e-9)
    for t, label in enumerate(labels):
        probs[t, symbols.index(label)] = 1.0
    return PosteriorLattice(symbols, clamp_log_probs(np.log(probs)))


def random_lattice(rng, n_frames=None, symbols=None):
    symbols = list(symbols or INV.labels)
    if n_frames is None:
        n_frames = int(rng.integers(0, 12))
    raw = rng.normal(0, 3, size=(n_frames, len(symbols)))
    return PosteriorLattice(symbols, clamp_log_probs(raw),
                            frame_duration_ms=float(rng.uniform(5, 40)))


def test_valid_lattice_no_violations():
    lat = one_hot(["B", "<blank>", "ER"])
    assert validate(lat, INV) == []


def test_blank_must_lead():
    lat = one_hot(["B"])
    lat.symbols = list(reversed(lat.symbols))
    assert any("symbol 0" in v for v in validate(lat, INV))


def test_unnormalized_row_reported_with_frame():
    lat = one_hot(["B", "ER"])
    lat.log_probs[1] += 0.5
    problems = validate(lat, INV)
    assert len(problems) == 1 and "frame 1" in problems[0]


def test_unknown_symbol_reported():
    lat = one_hot(["B"])
    lat.symbols[-1] = "ZH2"
    assert any("ZH2" in v for v in validate(lat, INV))


def test_clamp_floors_and_normalizes():
    lp = clamp_log_probs(np.array([[0.0, -np.inf, -2e4]]))
    assert lp.min() >= LOG_FLOOR
    assert abs(np.logaddexp.reduce(lp[0].astype(np.float64))) < 1e-3


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(7)
    for _ in range(20):
        lat = random_lattice(rng)
        path = tmp_path / "lat.kwpo"
        write_posteriors(lat, path, INV)
        assert read_posteriors(path, INV) == lat


def test_empty_lattice_legal(tmp_path):
    lat = PosteriorLattice(list(INV.labels), np.zeros((0, 40), np.float32))
    path = tmp_path / "empty.kwpo"
    write_posteriors(lat, path, INV)
    back = read_posteriors(path, INV)
    assert back.n_frames == 0 and back == lat


def test_one_hot_byte_count(tmp_path):
    lat = one_hot(["B"])
    path = tmp_path / "b.kwpo"
    write_posteriors(lat, path, INV)
    table = sum(1 + len(s.encode()) for s in lat.symbols)
    assert path.stat().st_size == 18 + table + 40 * 4


def test_write_refuses_invalid(tmp_path):
    lat = one_hot(["B"])
    lat.log_probs = lat.log_probs + 2.0
    path = tmp_path / "bad.kwpo"
    with pytest.raises(LatticeFormatError):
        write_posteriors(lat, path, INV)
    assert not path.exists()


def test_bad_magic(tmp_path):
    lat = one_hot(["B"])
    path = tmp_path / "x.kwpo"
    write_posteriors(lat, path, INV)
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(LatticeFormatError, match="magic"):
        read_posteriors(path, INV)


def test_bad_version(tmp_path):
    lat = one_hot(["B"])
    path = tmp_path / "x.kwpo"
    write_posteriors(lat, path, INV)
    data = bytearray(path.read_bytes())
    data[4] = 9
    path.write_bytes(bytes(data))
    with pytest.raises(LatticeFormatError, match="version"):
        read_posteriors(path, INV)


def test_truncated_payload(tmp_path):
    lat = one_hot(["B", "ER", "D"])
    path = tmp_path / "x.kwpo"
    write_posteriors(lat, path, INV)
    path.write_bytes(path.read_bytes()[:-80])
    with pytest.raises(LatticeFormatError, match="payload"):
        read_posteriors(path, INV)


def test_declared_frames_exceed_payload(tmp_path):
    lat = one_hot(["B", "ER", "D"])
    path = tmp_path / "x.kwpo"
    write_posteriors(lat, path, INV)
    data = bytearray(path.read_bytes())
    data[6] = 5  # n_frames u32 little-endian low byte
    path.write_bytes(bytes(data))
    with pytest.raises(LatticeFormatError):
        read_posteriors(path, INV)


def test_frame_duration_survives_round_trip(tmp_path):
    lat = one_hot(["B"])
    lat.frame_duration_ms = float(np.float32(12.5))
    path = tmp_path / "x.kwpo"
    write_posteriors(lat, path, INV)
    assert read_posteriors(path, INV).frame_duration_ms == 12.5
