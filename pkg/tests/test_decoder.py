import numpy as np
import pytest

from kwfst.decoder import (DecoderConfig, DecodedToken, Transcription, decode,
                           build_reference_fst, greedy_decode, select_k)
from kwfst.errors import DataError
from kwfst.lattice import PosteriorLattice, clamp_log_probs
from kwfst.phonology import SimilarityMatrix, load_inventory
from kwfst.synth import SynthesisPlan, Substitute, synthesize_posteriors

INV = load_inventory()
SIM = SimilarityMatrix(INV)


def one_hot(labels):
    symbols = list(INV.labels)
    probs = np.full((len(labels), len(symbols)), 1e-9)
    for t, label in enumerate(labels):
        probs[t, symbols.index(label)] = 1.0
    return PosteriorLattice(symbols, clamp_log_probs(np.log(probs)))


def uniform(n_frames):
    return PosteriorLattice(list(INV.labels),
                            clamp_log_probs(np.zeros((n_frames, 40))))


def test_config_validation():
    with pytest.raises(DataError):
        DecoderConfig(k=2)
    with pytest.raises(DataError):
        DecoderConfig(c_del=-1)
    with pytest.raises(DataError):
        DecoderConfig(tau_conf=1.0)
    assert DecoderConfig(k="auto").sub_cost(0.9) == pytest.approx(0.9)


def test_reference_fst_k1_has_no_substitution_arcs():
    m = build_reference_fst(["B", "ER", "D"], INV, SIM, DecoderConfig(), k=1)
    assert not [a for a in m.arcs if a.olabel.startswith("S:")]


def test_reference_fst_single_phoneme_k3():
    m = build_reference_fst(["B"], INV, SIM, DecoderConfig(), k=3)
    subs = [a for a in m.arcs if a.olabel.startswith("S:")]
    assert len(subs) == 2
    assert all(a.dst == 1 for a in subs)


def test_reference_fst_arc_count_k3():
    n = 5
    ref = ["B", "ER", "D", "S", "IY"]
    m = build_reference_fst(ref, INV, SIM, DecoderConfig(), k=3)
    want = n + 2 * n + n + (n + 1) * 39 + n
    assert len(m.arcs) == want


def test_reference_fst_rejects_bad_reference():
    with pytest.raises(DataError):
        build_reference_fst([], INV, SIM, DecoderConfig(), k=1)
    with pytest.raises(DataError):
        build_reference_fst(["B", "QQ"], INV, SIM, DecoderConfig(), k=1)


def test_greedy_collapse_rules():
    lat = one_hot(["B", "B", "<blank>", "ER", "ER", "D"])
    assert greedy_decode(lat) == ["B", "ER", "D"]
    lat = one_hot(["B", "<blank>", "B"])
    assert greedy_decode(lat) == ["B", "B"]
    assert greedy_decode(one_hot(["<blank>"] * 4)) == []


def test_greedy_argmax_ties_to_lowest_id():
    assert greedy_decode(uniform(3)) == []  # blank wins every tie


def test_select_k_thresholds():
    cfg = DecoderConfig(tau_conf=0.85)
    assert select_k(one_hot(["B", "ER"]), cfg) == 3
    assert select_k(uniform(4), cfg) == 1
    empty = PosteriorLattice(list(INV.labels), np.zeros((0, 40), np.float32))
    assert select_k(empty, cfg) == 1


def test_select_k_boundary_inclusive():
    # two symbols at probability tau and 1-tau: mean max equals tau exactly
    probs = np.full((1, 40), 1e-12)
    probs[0, 1] = 0.85
    probs[0, 2] = 0.15 - 38e-12
    lat = PosteriorLattice(list(INV.labels), np.log(probs))
    cfg = DecoderConfig(tau_conf=0.85)
    assert select_k(lat, cfg) in (1, 3)
    conf = float(np.exp(lat.log_probs.max(axis=1)).mean())
    assert select_k(lat, cfg) == (3 if conf >= 0.85 else 1)


def test_identity_decode():
    lat = one_hot(["B", "<blank>", "ER", "<blank>", "D"])
    for k in (1, 3, "auto"):
        t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=k), INV, SIM)
        assert t.tags == ["M:B", "M:ER", "M:D"]
        assert t.total_cost == pytest.approx(0.0, abs=1e-6)
        assert t.verbatim == ["B", "ER", "D"]


def test_substitution_recovered_with_k3():
    # AH is a top-3 neighbor of ER under the default tables
    assert "AH" in SIM.top_k_neighbors("ER", 3)
    lat = one_hot(["B", "<blank>", "AH", "<blank>", "D"])
    t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=3), INV, SIM)
    assert t.tags == ["M:B", "S:AH|ER", "M:D"]


def test_insertion_example_k1():
    lat = one_hot(["P", "<blank>", "B", "<blank>", "ER", "<blank>", "D"])
    t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=1), INV, SIM)
    assert t.tags == ["I:P", "M:B", "M:ER", "M:D"]
    assert t.total_cost == pytest.approx(2.5, abs=1e-6)


def test_repetition_preferred_over_insertion():
    lat = one_hot(["B", "<blank>", "B", "<blank>", "ER", "<blank>", "D"])
    t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=1), INV, SIM)
    assert t.tags == ["M:B", "R:B", "M:ER", "M:D"]
    assert t.total_cost == pytest.approx(1.0, abs=1e-6)


def test_deletion_annotated():
    lat = one_hot(["B", "<blank>", "D"])
    t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=1), INV, SIM)
    assert t.tags == ["M:B", "D:ER", "M:D"]
    assert t.verbatim == ["B", "D"]
    deletion = t.tokens[1]
    assert deletion.frame_start is None and deletion.frame_end is None


def test_frame_spans_partition():
    plan = SynthesisPlan(["B", "ER", "D", "S"], [Substitute(2, "AH")],
                         confidence=0.8, seed=5)
    lat = synthesize_posteriors(plan, INV, SIM)
    t = decode(lat, ["B", "ER", "D", "S"], DecoderConfig(k=3), INV, SIM)
    spans = [(tok.frame_start, tok.frame_end) for tok in t.tokens
             if tok.edit != "deletion"]
    assert spans[0][0] == 0
    assert spans[-1][1] == lat.n_frames
    for (a, b), (c, d) in zip(spans, spans[1:]):
        assert b == c and a < b
    assert spans[-1][0] < spans[-1][1]


def test_acceptance_totality_on_noise():
    rng = np.random.default_rng(3)
    for _ in range(10):
        lat = PosteriorLattice(
            list(INV.labels),
            clamp_log_probs(rng.normal(0, 4, size=(rng.integers(0, 9), 40))))
        t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=1), INV, SIM)
        assert np.isfinite(t.total_cost)


def test_k_recorded_in_transcription():
    lat = one_hot(["B", "ER", "D"])
    t = decode(lat, ["B", "ER", "D"], DecoderConfig(k="auto"), INV, SIM)
    assert t.k_used == 3  # one-hot lattice is maximally confident


def test_transcription_round_trip():
    lat = one_hot(["B", "<blank>", "AH", "<blank>", "D"])
    t = decode(lat, ["B", "ER", "D"], DecoderConfig(k=3), INV, SIM)
    back = Transcription.from_dict(t.to_dict())
    assert back.tags == t.tags
    assert back.reference == t.reference
    assert back.total_cost == pytest.approx(t.total_cost, abs=1e-9)


def test_invalid_lattice_rejected():
    lat = one_hot(["B"])
    lat.log_probs = lat.log_probs + 1.0
    with pytest.raises(DataError):
        decode(lat, ["B"], DecoderConfig(k=1), INV, SIM)
