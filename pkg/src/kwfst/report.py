"""Consolidated assessment reports: verbatim transcription, error list,
articulator hints for the phonemes involved in errors, the quality score and
advice text."""

import json
from dataclasses import dataclass

from .decoder import DELETION
from .errors import DataError, InventoryError
from .evaluate import categorize_errors
from .phonology import BLANK

_PLACE_DESC = {
    "bilabial": "both lips pressed together",
    "labiodental": "lower lip against the upper teeth",
    "dental": "tongue tip against the teeth",
    "alveolar": "tongue tip on the ridge behind the teeth",
    "postalveolar": "tongue blade just behind the ridge",
    "palatal": "tongue body raised to the hard palate",
    "velar": "back of the tongue against the soft palate",
    "glottal": "airflow shaped at the vocal folds",
}
_MANNER_DESC = {
    "stop": "fully block the air, then release it",
    "fricative": "let air hiss through a narrow gap",
    "affricate": "block the air, then release into a hiss",
    "nasal": "let the air flow through the nose",
    "liquid": "let air flow around the tongue",
    "glide": "move smoothly into the next sound",
}
_HEIGHT_DESC = {
    "high": "tongue held high in the mouth",
    "mid": "tongue at mid height",
    "low": "tongue low, jaw open",
}
_BACKNESS_DESC = {
    "front": "tongue toward the front of the mouth",
    "central": "tongue centered in the mouth",
    "back": "tongue pulled toward the back",
}


@dataclass
class ArticulatorHint:
    phoneme: str
    place_description: str
    manner_description: str
    corrective_cue: str

    def to_dict(self):
        return {"phoneme": self.phoneme, "place": self.place_description,
                "manner": self.manner_description,
                "cue": self.corrective_cue}


def articulator_hint(inventory, phoneme):
    """Static articulator hint derived from the phoneme's feature vector."""
    if phoneme == BLANK:
        raise InventoryError("blank has no articulator hint")
    fv = inventory.feature_vector(phoneme)
    if fv.klass == "consonant":
        place = _PLACE_DESC[fv.place]
        manner = _MANNER_DESC[fv.manner]
        voice = ("switch your voice on" if fv.voicing == "voiced"
                 else "keep your voice off")
        cue = f"For {phoneme}: {place}; {manner}; {voice}."
    else:
        place = _BACKNESS_DESC[fv.backness]
        manner = _HEIGHT_DESC[fv.height]
        lips = ("round your lips" if fv.rounding == "rounded"
                else "relax your lips")
        cue = f"For {phoneme}: {manner}; {place}; {lips}."
    return ArticulatorHint(phoneme, place, manner, cue)


def error_phonemes(errors):
    """Phonemes appearing in an error summary, expected and produced sides."""
    out = set()
    for e in errors:
        for side in ("expected", "produced"):
            if e.get(side):
                out.add(e[side])
    return sorted(out)


def default_advice(errors):
    """Deterministic advice template over the top error-histogram entries."""
    if not errors:
        return ("Great reading: every phoneme matched the passage. "
                "Keep practicing at this pace.")
    parts = []
    for e in errors[:3]:
        kind = e["type"]
        if kind == "substitution":
            parts.append(f"saying {e['produced']} in place of {e['expected']} "
                         f"({e['count']}x)")
        elif kind == "deletion":
            parts.append(f"dropping {e['expected']} ({e['count']}x)")
        elif kind == "insertion":
            parts.append(f"adding an extra {e['produced']} ({e['count']}x)")
        else:
            parts.append(f"repeating {e['produced']} ({e['count']}x)")
    return ("Focus areas: " + "; ".join(parts) +
            ". Practice the cued articulator positions slowly, then at "
            "normal reading speed.")


def generate_report(transcription, errors, per_result, score=None,
                    advice="", inventory=None, utterance_id=""):
    """Assemble the five-part assessment report as a structured document.

    `errors` must be exactly the histogram derivable from the transcription.
    """
    from .phonology import load_inventory

    if inventory is None:
        inventory = load_inventory()
    if errors != categorize_errors(transcription):
        raise DataError("error summary is not reproducible from the "
                        "transcription")
    hints = [articulator_hint(inventory, p).to_dict()
             for p in error_phonemes(errors)]
    score_doc = None
    if score is not None:
        if isinstance(score, dict):
            score_doc = score
        else:
            score_doc = {"predicted": score.predicted_score,
                         "reference": score.reference_score,
                         "error_rate": round(score.error_rate, 9)}
    return {
        "utterance_id": utterance_id,
        "reference": list(transcription.reference),
        "transcription": {
            "tokens": [t.to_dict() for t in transcription.tokens],
            "total_cost": round(float(transcription.total_cost), 9),
            "k_used": transcription.k_used,
        },
        "per": per_result.to_dict(),
        "errors": errors,
        "hints": hints,
        "score": score_doc,
        "advice": advice,
    }


def render_text(report):
    """Human-readable rendering of a structured report."""
    lines = [f"Assessment report for {report['utterance_id'] or 'utterance'}",
             "",
             "Verbatim transcription:"]
    verbatim = [t["phoneme"] for t in report["transcription"]["tokens"]
                if t["edit"] != DELETION]
    lines.append("  " + (" ".join(verbatim) if verbatim else "(empty)"))
    lines.append(f"  reference: {' '.join(report['reference'])}")
    lines.append("")
    lines.append("Identified errors:")
    if report["errors"]:
        for e in report["errors"]:
            exp = e["expected"] or "-"
            prod = e["produced"] or "-"
            lines.append(f"  {e['type']}: expected {exp}, produced {prod} "
                         f"(x{e['count']})")
    else:
        lines.append("  none")
    lines.append("")
    lines.append("Articulator hints:")
    if report["hints"]:
        for h in report["hints"]:
            lines.append(f"  {h['phoneme']}: {h['cue']}")
    else:
        lines.append("  none needed")
    lines.append("")
    per_doc = report["per"]
    lines.append(f"Score: PER {per_doc['per']:.2f}% "
                 f"(S={per_doc['S']} D={per_doc['D']} I={per_doc['I']} "
                 f"N={per_doc['N']})")
    if report["score"]:
        s = report["score"]
        line = f"  predicted quality score: {s['predicted']:g}"
        if s.get("reference") is not None:
            line += (f" (proctor {s['reference']:g}, "
                     f"error rate {s['error_rate']:.4f})")
        lines.append(line)
    lines.append("")
    lines.append("Advice:")
    lines.append(f"  {report['advice']}")
    return "\n".join(lines) + "\n"


def dumps(report):
    """Stable serialization; serialize -> parse -> serialize is the identity."""
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def loads(text):
    return json.loads(text)
