import numpy as np
import pytest

from kwfst.decoder import DecoderConfig, decode, greedy_decode
from kwfst.errors import DataError
from kwfst.lattice import validate
from kwfst.phonology import SimilarityMatrix, load_inventory
from kwfst.synth import (Delete, Insert, Repeat, Substitute, SynthesisPlan,
                         apply_edits, synthesize_posteriors)

INV = load_inventory()
SIM = SimilarityMatrix(INV)


def test_substitute():
    plan = SynthesisPlan(["B", "ER", "D"], [Substitute(2, "EH")])
    realized, truth = apply_edits(plan)
    assert realized == ["B", "EH", "D"]
    assert [t["edit"] for t in truth] == ["match", "substitution", "match"]
    assert truth[1]["expected"] == "ER"


def test_insert():
    plan = SynthesisPlan(["B", "ER", "D"], [Insert(1, "P")])
    realized, truth = apply_edits(plan)
    assert realized == ["P", "B", "ER", "D"]
    assert truth[0]["edit"] == "insertion"


def test_repeat():
    plan = SynthesisPlan(["B", "ER", "D"], [Repeat(1, 2)])
    realized, truth = apply_edits(plan)
    assert realized == ["B", "B", "B", "ER", "D"]
    assert [t["edit"] for t in truth][:3] == ["match", "repetition",
                                              "repetition"]


def test_delete():
    plan = SynthesisPlan(["B", "ER", "D"], [Delete(2)])
    realized, truth = apply_edits(plan)
    assert realized == ["B", "D"]
    assert truth[1]["edit"] == "deletion" and truth[1]["expected"] == "ER"


def test_sequential_edit_positions():
    # positions are interpreted against the live sequence after prior edits
    plan = SynthesisPlan(["B", "ER", "D"], [Delete(1), Substitute(1, "AH")])
    realized, _ = apply_edits(plan)
    assert realized == ["AH", "D"]


def test_position_out_of_range():
    with pytest.raises(DataError):
        apply_edits(SynthesisPlan(["B"], [Delete(1), Substitute(1, "P")]))
    with pytest.raises(DataError):
        apply_edits(SynthesisPlan(["B"], [Substitute(5, "P")]))


def test_plan_validation():
    with pytest.raises(DataError):
        SynthesisPlan([])
    with pytest.raises(DataError):
        SynthesisPlan(["B"], confidence=0.0)
    with pytest.raises(DataError):
        SynthesisPlan(["B"], confidence=1.5)


def test_confidence_one_argmax_equals_realized():
    plan = SynthesisPlan(["B", "ER", "D"], [Insert(1, "P")], confidence=1.0)
    lat = synthesize_posteriors(plan, INV, SIM)
    assert greedy_decode(lat) == ["P", "B", "ER", "D"]


def test_pipeline_identity():
    plan = SynthesisPlan(["S", "IY", "T"], confidence=1.0)
    lat = synthesize_posteriors(plan, INV, SIM)
    assert greedy_decode(lat) == ["S", "IY", "T"]


def test_determinism():
    plan = SynthesisPlan(["B", "ER", "D"], [Substitute(2, "AH")],
                         confidence=0.7, seed=42)
    a = synthesize_posteriors(plan, INV, SIM)
    b = synthesize_posteriors(plan, INV, SIM)
    assert a == b


def test_different_seeds_differ():
    lat = {}
    for seed in (1, 2):
        plan = SynthesisPlan(["B", "ER", "D"], confidence=0.7, seed=seed)
        lat[seed] = synthesize_posteriors(plan, INV, SIM)
    assert lat[1] != lat[2]


def test_rows_validate():
    rng = np.random.default_rng(0)
    for conf in (1.0, 0.9, 0.5, 0.2):
        plan = SynthesisPlan(["B", "ER", "D", "S"],
                             [Substitute(1, "P"), Repeat(3, 1)],
                             confidence=conf, seed=int(rng.integers(1e6)))
        lat = synthesize_posteriors(plan, INV, SIM)
        assert validate(lat, INV) == []


def test_frame_layout():
    plan = SynthesisPlan(["B", "ER"], frames_per_phoneme=4,
                         blank_frames_between=1, confidence=1.0)
    lat = synthesize_posteriors(plan, INV, SIM)
    # 4 frames per phoneme with a single separating blank frame
    assert lat.n_frames == 4 + 1 + 4


def test_truth_chain_recovered_by_decode():
    # confidence 1.0: decode must reproduce the ground-truth annotations
    cases = [
        (["B", "ER", "D"], [Substitute(2, "AH")], 3),
        (["B", "ER", "D"], [Insert(1, "P")], 1),
        (["B", "ER", "D"], [Repeat(1, 1)], 1),
        (["B", "ER", "D", "S"], [Delete(2)], 1),
        (["S", "IY", "T"], [], 1),
    ]
    for base, edits, k in cases:
        plan = SynthesisPlan(base, edits, confidence=1.0)
        lat = synthesize_posteriors(plan, INV, SIM)
        _, truth = apply_edits(plan)
        t = decode(lat, base, DecoderConfig(k=k), INV, SIM)
        want = [(it["edit"], it["phoneme"], it["expected"]) for it in truth]
        got = [(tok.edit, tok.phoneme, tok.expected) for tok in t.tokens]
        # deletions record the expected phoneme in both views
        got = [(e, p if e != "deletion" else p, x) for e, p, x in got]
        assert [w[0] for w in want] == [g[0] for g in got], (base, edits)
