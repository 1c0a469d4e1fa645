"""Phoneme Error Rate: alignment, per-utterance and pooled corpus metrics,
and error-pattern summaries of decoded transcriptions."""

from dataclasses import dataclass

from .decoder import DELETION, INSERTION, MATCH, REPETITION, SUBSTITUTION
from .errors import DataError


@dataclass
class PerResult:
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def edits(self):
        return self.substitutions + self.deletions + self.insertions

    @property
    def per(self):
        return 100.0 * self.edits / self.reference_length

    def to_dict(self):
        return {"S": self.substitutions, "D": self.deletions,
                "I": self.insertions, "N": self.reference_length,
                "per": round(self.per, 6)}


@dataclass
class CorpusResult:
    utterances: dict   # id -> PerResult, insertion-ordered by id

    @property
    def pooled_per(self):
        edits = sum(r.edits for r in self.utterances.values())
        n = sum(r.reference_length for r in self.utterances.values())
        return 100.0 * edits / n

    @property
    def macro_per(self):
        pers = [r.per for r in self.utterances.values()]
        return sum(pers) / len(pers)


def align(reference, hypothesis):
    """Minimum-edit alignment with unit costs.

    Returns a list of ops "M", "S", "D", "I" in reference/hypothesis order;
    the backtrace prefers match > substitution > deletion > insertion at
    equal cost.
    """
    nr, nh = len(reference), len(hypothesis)
    d = [[0] * (nh + 1) for _ in range(nr + 1)]
    for i in range(1, nr + 1):
        d[i][0] = i
    for j in range(1, nh + 1):
        d[0][j] = j
    for i in range(1, nr + 1):
        for j in range(1, nh + 1):
            same = reference[i - 1] == hypothesis[j - 1]
            d[i][j] = min(d[i - 1][j - 1] + (0 if same else 1),
                          d[i - 1][j] + 1,
                          d[i][j - 1] + 1)
    ops = []
    i, j = nr, nh
    while i > 0 or j > 0:
        if i > 0 and j > 0 and reference[i - 1] == hypothesis[j - 1] \
                and d[i][j] == d[i - 1][j - 1]:
            ops.append("M")
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + 1:
            ops.append("S")
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            ops.append("D")
            i -= 1
        else:
            ops.append("I")
            j -= 1
    ops.reverse()
    return ops


def per(reference, hypothesis):
    """PER as 100 * (S + D + I) / N over a non-empty reference."""
    if not reference:
        raise DataError("PER needs a non-empty reference")
    ops = align(reference, hypothesis)
    return PerResult(ops.count("S"), ops.count("D"), ops.count("I"),
                     len(reference))


def corpus_per(pairs):
    """Pooled corpus PER over (utterance_id, reference, hypothesis) triples
    or (reference, hypothesis) pairs."""
    if not pairs:
        raise DataError("empty corpus")
    results = {}
    for i, item in enumerate(pairs):
        if len(item) == 3:
            utt, ref, hyp = item
        else:
            ref, hyp = item
            utt = f"utt{i:04d}"
        results[utt] = per(ref, hyp)
    return CorpusResult(results)


def categorize_errors(transcription):
    """Histogram of non-match edits keyed by (type, expected, produced),
    sorted by descending count, then lexicographic key."""
    counts = {}
    for tok in transcription.tokens:
        if tok.edit == MATCH:
            continue
        if tok.edit == SUBSTITUTION:
            key = (SUBSTITUTION, tok.expected, tok.phoneme)
        elif tok.edit == DELETION:
            key = (DELETION, tok.expected, None)
        elif tok.edit == INSERTION:
            key = (INSERTION, None, tok.phoneme)
        elif tok.edit == REPETITION:
            key = (REPETITION, None, tok.phoneme)
        else:
            raise DataError(f"unknown edit type {tok.edit!r}")
        counts[key] = counts.get(key, 0) + 1
    entries = [{"type": k[0], "expected": k[1], "produced": k[2], "count": c}
               for k, c in counts.items()]
    entries.sort(key=lambda e: (-e["count"], e["type"], e["expected"] or "",
                                e["produced"] or ""))
    return entries
