"""Similarity-weighted WFST decoding of posterior lattices.

The reference machine admits, per reference position, a zero-cost match, a
penalized substitution arc for each top-k similar phoneme, a deletion arc,
generic insertion self-loops and a repetition self-loop.  Decoding is the
tropical shortest path of emission o collapse o reference; the implementation
fuses the three machines into a frame-synchronous dynamic program whose
result provably matches the explicit composition (tested against it).

Output tags follow the composed machine's output alphabet: "M:p", "S:q|p",
"D:p", "I:q", "R:p".  Ties are broken by the lexicographically smallest tag
sequence, then deterministically on the consumed frame symbols.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import fst
from .errors import DataError, InternalError
from .lattice import validate as validate_lattice
from .phonology import BLANK

_INF = float("inf")
_TOL = 1e-9

MATCH = "match"
SUBSTITUTION = "substitution"
INSERTION = "insertion"
DELETION = "deletion"
REPETITION = "repetition"


@dataclass(frozen=True)
class DecoderConfig:
    k: object = "auto"            # 1, 3 or "auto"
    lambda_sub: float = 4.0       # similarity cost scale
    beta_sub: float = 0.5         # substitution floor cost
    c_del: float = 3.0
    c_ins: float = 2.5
    c_rep: float = 1.0
    tau_conf: float = 0.85        # mean-max-posterior threshold for auto k

    def __post_init__(self):
        if self.k not in (1, 3, "auto"):
            raise DataError(f"k must be 1, 3 or 'auto', got {self.k!r}")
        for name in ("lambda_sub", "beta_sub", "c_del", "c_ins", "c_rep"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be >= 0")
        if not 0 < self.tau_conf < 1:
            raise DataError("tau_conf must be in (0, 1)")

    def sub_cost(self, sim):
        return self.lambda_sub * (1.0 - sim) + self.beta_sub


@dataclass
class DecodedToken:
    phoneme: str
    edit: str
    expected: str = None
    frame_start: int = None
    frame_end: int = None
    cost: float = 0.0

    @property
    def tag(self):
        if self.edit == MATCH:
            return f"M:{self.phoneme}"
        if self.edit == SUBSTITUTION:
            return f"S:{self.phoneme}|{self.expected}"
        if self.edit == INSERTION:
            return f"I:{self.phoneme}"
        if self.edit == DELETION:
            return f"D:{self.phoneme}"
        return f"R:{self.phoneme}"

    def to_dict(self):
        return {
            "phoneme": self.phoneme,
            "edit": self.edit,
            "expected": self.expected,
            "frame_start": self.frame_start,
            "frame_end": self.frame_end,
            "cost": round(float(self.cost), 9),
        }


@dataclass
class Transcription:
    tokens: list
    total_cost: float
    reference: list
    k_used: int
    lattice_id: str = ""

    @property
    def verbatim(self):
        return [t.phoneme for t in self.tokens if t.edit != DELETION]

    @property
    def tags(self):
        return [t.tag for t in self.tokens]

    def to_dict(self):
        return {
            "reference": list(self.reference),
            "tokens": [t.to_dict() for t in self.tokens],
            "total_cost": round(float(self.total_cost), 9),
            "k_used": self.k_used,
            "lattice_id": self.lattice_id,
        }

    @classmethod
    def from_dict(cls, d):
        tokens = [DecodedToken(t["phoneme"], t["edit"], t.get("expected"),
                               t.get("frame_start"), t.get("frame_end"),
                               t.get("cost", 0.0))
                  for t in d["tokens"]]
        return cls(tokens, d["total_cost"], d["reference"], d["k_used"],
                   d.get("lattice_id", ""))


def _substitutions(reference, similarity, config, k):
    """Per position: list of (phoneme, cost) substitution candidates."""
    subs = []
    # tiny test inventories may have fewer than k candidates
    k = min(k, len(similarity.inventory.phonemes) - 1)
    for p in reference:
        cands = []
        if k > 1:
            for q in similarity.top_k_neighbors(p, k):
                if q != p:
                    cands.append((q, config.sub_cost(similarity.sim(q, p))))
        subs.append(sorted(cands))
    return subs


def build_reference_fst(reference, inventory, similarity, config, k=None):
    """Explicit reference transducer; the oracle form of the decoder."""
    if not reference:
        raise DataError("reference must be non-empty")
    for p in reference:
        if p == BLANK or p not in inventory:
            raise DataError(f"reference phoneme {p!r} not in inventory")
    if k is None:
        k = config.k
    if k == "auto":
        raise DataError("k must be resolved before building the machine")
    subs = _substitutions(reference, similarity, config, k)
    n = len(reference)
    m = fst.Wfst()
    for _ in range(n + 1):
        m.add_state()
    m.start = 0
    m.set_final(n, 0.0)
    for i, p in enumerate(reference):
        m.add_arc(i, i + 1, p, f"M:{p}", 0.0)
        for q, cost in subs[i]:
            m.add_arc(i, i + 1, q, f"S:{q}|{p}", cost)
        m.add_arc(i, i + 1, fst.EPSILON, f"D:{p}", config.c_del)
        m.add_arc(i + 1, i + 1, p, f"R:{p}", config.c_rep)
    for s in range(n + 1):
        for q in inventory.phonemes:
            m.add_arc(s, s, q, f"I:{q}", config.c_ins)
    return m


def greedy_decode(lattice):
    """Per-frame argmax (ties to the lowest symbol id) then CTC collapse."""
    out = []
    prev = 0
    for t in range(lattice.n_frames):
        s = int(np.argmax(lattice.log_probs[t]))
        if s != 0 and s != prev:
            out.append(lattice.symbols[s])
        prev = s
    return out


def select_k(lattice, config):
    """Auto k: 3 when mean max-symbol posterior clears the threshold, else 1."""
    if lattice.n_frames == 0:
        return 1
    conf = float(np.mean(np.exp(lattice.log_probs.max(axis=1))))
    return 3 if conf >= config.tau_conf else 1


def _backward_tables(emission, ref_ids, subs, config):
    """B[t][c, r]: min remaining cost at frame t, collapse state c (last
    consumed symbol, 0 = fresh/blank), reference position r."""
    T, S = emission.shape
    N = len(ref_ids)
    c_del, c_ins, c_rep = config.c_del, config.c_ins, config.c_rep
    tables = [None] * (T + 1)
    B = np.tile((np.arange(N, -1, -1) * c_del)[None, :], (S, 1)).astype(float)
    tables[T] = B
    cols = np.arange(N + 1)
    for t in range(T - 1, -1, -1):
        e = emission[t]
        B1 = tables[t + 1]
        cand = e[:, None] + B1                      # merge (c==symbol) / blank
        cand = np.minimum(cand, (e[0] + B1[0])[None, :])
        # match and substitution advance r (new emission, forbidden when the
        # emitted symbol equals the collapse state c)
        extra = np.full((S, N + 1), _INF)
        for r in range(N):
            l = ref_ids[r]
            col = np.full(S, e[l] + B1[l, r + 1])
            col[l] = _INF
            for q, pen in subs[r]:
                v = e[q] + pen + B1[q, r + 1]
                other = col[q]
                np.minimum(col, v, out=col)
                col[q] = other
            extra[:, r] = col
        cand = np.minimum(cand, extra)
        rep = np.full((S, N + 1), _INF)
        for r in range(1, N + 1):
            l = ref_ids[r - 1]
            rep[:, r] = e[l] + c_rep + B1[l, r]
            rep[l, r] = _INF
        cand = np.minimum(cand, rep)
        # generic insertion: best non-blank symbol not equal to c
        M = e[1:, None] + B1[1:]
        a1 = M.argmin(axis=0)
        m1 = M[a1, cols]
        M[a1, cols] = _INF
        m2 = M.min(axis=0)
        ins = np.tile(m1[None, :], (S, 1))
        ins[a1 + 1, cols] = m2
        cand = np.minimum(cand, ins + c_ins)
        for r in range(N - 1, -1, -1):
            np.minimum(cand[:, r], c_del + cand[:, r + 1], out=cand[:, r])
        tables[t] = cand
    return tables


def _moves(t, c, r, state_cost, emission, symbols, ref_ids, subs, config,
           tables):
    """Optimal moves out of (t, c, r); yields (tag, next, cost, consumed)."""
    T = emission.shape[0]
    N = len(ref_ids)
    here = tables[t][c, r]

    def ok(cost, nxt):
        return cost + tables[nxt[0]][nxt[1], nxt[2]] <= here + _TOL

    out = []
    if r < N:
        p = symbols[ref_ids[r]]
        nxt = (t, c, r + 1)
        if ok(config.c_del, nxt):
            out.append((f"D:{p}", nxt, config.c_del, None))
    if t < T:
        e = emission[t]
        nxt = (t + 1, 0, r)
        if ok(e[0], nxt):
            out.append((None, nxt, e[0], 0))
        if c != 0:
            nxt = (t + 1, c, r)
            if ok(e[c], nxt):
                out.append((None, nxt, e[c], c))
        if r < N:
            l = ref_ids[r]
            p = symbols[l]
            if l != c:
                nxt = (t + 1, l, r + 1)
                if ok(e[l], nxt):
                    out.append((f"M:{p}", nxt, e[l], l))
            for q, pen in subs[r]:
                if q != c:
                    nxt = (t + 1, q, r + 1)
                    if ok(e[q] + pen, nxt):
                        out.append((f"S:{symbols[q]}|{p}", nxt, e[q] + pen, q))
        if r >= 1:
            l = ref_ids[r - 1]
            if l != c:
                nxt = (t + 1, l, r)
                if ok(e[l] + config.c_rep, nxt):
                    out.append((f"R:{symbols[l]}", nxt,
                                e[l] + config.c_rep, l))
        for q in range(1, len(symbols)):
            if q != c:
                nxt = (t + 1, q, r)
                if ok(e[q] + config.c_ins, nxt):
                    out.append((f"I:{symbols[q]}", nxt, e[q] + config.c_ins, q))
    return out


def _walk(emission, symbols, ref_ids, subs, config, tables):
    """Greedy frontier walk over optimal moves; returns the move list of the
    path with the lexicographically smallest tag sequence."""
    T = emission.shape[0]
    N = len(ref_ids)

    def closure(items):
        frontier = dict(items)
        queue = list(items)
        while queue:
            state, path = queue.pop(0)
            for tag, nxt, cost, consumed in sorted(
                    _moves(*state, None, emission, symbols, ref_ids, subs,
                           config, tables),
                    key=lambda mv: (mv[3] is None, mv[3] if mv[3] is not None
                                    else 0, mv[1])):
                if tag is not None:
                    continue
                if nxt not in frontier:
                    entry = path + [(tag, nxt, cost, consumed)]
                    frontier[nxt] = entry
                    queue.append((nxt, entry))
        return frontier

    frontier = closure([((0, 0, 0), [])])
    guard = 0
    while True:
        guard += 1
        if guard > 4 * (T + 2) * (N + 2):
            raise InternalError("decoder walk failed to terminate")
        for state in sorted(frontier):
            if state[0] == T and state[2] == N:
                return frontier[state]
        best = None
        for state in frontier:
            for mv in _moves(*state, None, emission, symbols, ref_ids, subs,
                             config, tables):
                if mv[0] is not None and (best is None or mv[0] < best):
                    best = mv[0]
        if best is None:
            raise InternalError("decoder ran out of optimal moves")
        items = []
        reached = set()
        for state in sorted(frontier):
            for mv in sorted(
                    _moves(*state, None, emission, symbols, ref_ids, subs,
                           config, tables),
                    key=lambda mv: (mv[3] if mv[3] is not None else -1,
                                    mv[1])):
                if mv[0] != best:
                    continue
                if mv[1] not in reached:
                    reached.add(mv[1])
                    items.append((mv[1], frontier[state] + [mv]))
        frontier = closure(items)


def _tokens_from_moves(moves, n_frames):
    tokens = []
    pending = 0.0
    current = None
    for tag, nxt, cost, consumed in moves:
        if tag is None:
            if current is not None:
                current.cost += cost
            else:
                pending += cost
            continue
        kind = tag[0]
        t_emit = nxt[0] - 1 if consumed is not None else None
        if kind == "D":
            p = tag[2:]
            tokens.append(DecodedToken(p, DELETION, expected=p, cost=cost))
            continue
        if kind == "M":
            tok = DecodedToken(tag[2:], MATCH, frame_start=t_emit, cost=cost)
        elif kind == "S":
            produced, expected = tag[2:].split("|")
            tok = DecodedToken(produced, SUBSTITUTION, expected=expected,
                               frame_start=t_emit, cost=cost)
        elif kind == "I":
            tok = DecodedToken(tag[2:], INSERTION, frame_start=t_emit,
                               cost=cost)
        else:
            tok = DecodedToken(tag[2:], REPETITION, frame_start=t_emit,
                               cost=cost)
        tok.cost += pending
        pending = 0.0
        tokens.append(tok)
        current = tok
    spanned = [t for t in tokens if t.edit != DELETION]
    if spanned:
        spanned[0].frame_start = 0
        for a, b in zip(spanned, spanned[1:]):
            a.frame_end = b.frame_start
        spanned[-1].frame_end = n_frames
    return tokens


def decode(lattice, reference, config=None, inventory=None, similarity=None,
           substitutions_enabled=True, lattice_id=None):
    """Full decode: shortest path of emission o collapse o reference.

    Returns a Transcription whose tokens carry edit annotations and frame
    spans; blank frames are attached to the preceding token so non-deletion
    spans partition the frame range.
    """
    from .phonology import SimilarityMatrix, load_inventory

    config = config or DecoderConfig()
    if inventory is None:
        inventory = load_inventory()
    if similarity is None:
        similarity = SimilarityMatrix(inventory)
    problems = validate_lattice(lattice, inventory)
    if problems:
        raise DataError("invalid lattice: " + "; ".join(problems))
    if not reference:
        raise DataError("reference must be non-empty")
    for p in reference:
        if p == BLANK or p not in inventory:
            raise DataError(f"reference phoneme {p!r} not in inventory")

    k = config.k if config.k != "auto" else select_k(lattice, config)
    symbols = lattice.symbols
    sym_id = {s: i for i, s in enumerate(symbols)}
    ref_ids = [sym_id[p] for p in reference]
    subs_lbl = (_substitutions(reference, similarity, config, k)
                if substitutions_enabled else [[] for _ in reference])
    subs = [sorted((sym_id[q], pen) for q, pen in cands if q in sym_id)
            for cands in subs_lbl]

    emission = -lattice.log_probs.astype(np.float64)
    tables = _backward_tables(emission, ref_ids, subs, config)
    total = float(tables[0][0, 0])
    if not np.isfinite(total):
        raise InternalError("no accepting path; deletion arcs should "
                            "guarantee acceptance")
    moves = _walk(emission, symbols, ref_ids, subs, config, tables)
    tokens = _tokens_from_moves(moves, lattice.n_frames)
    tr = Transcription(tokens, total, list(reference), k,
                       lattice_id if lattice_id is not None
                       else lattice.lattice_id)
    if abs(sum(m[2] for m in moves) - total) > 1e-6:
        raise InternalError("path cost does not match shortest-path cost")
    return tr
