"""Weighted finite-state machinery over the tropical semiring (min, +).

Symbols are plain strings; EPSILON is the distinguished empty symbol usable
on either side of an arc.  These machines define the decoding semantics
(shortest path of emission o collapse o reference) and serve as the exact
oracle for the fused decoder.
"""

import heapq
from dataclasses import dataclass, field

from .errors import KwfstError, NoPathError
from .phonology import BLANK

EPSILON = "<eps>"
_TOL = 1e-9


@dataclass(frozen=True)
class Arc:
    src: int
    dst: int
    ilabel: str
    olabel: str
    weight: float


@dataclass
class Wfst:
    num_states: int = 0
    start: int = 0
    finals: dict = field(default_factory=dict)
    arcs: list = field(default_factory=list)

    def add_state(self):
        self.num_states += 1
        return self.num_states - 1

    def add_arc(self, src, dst, ilabel, olabel, weight=0.0):
        if not (0 <= src < self.num_states and 0 <= dst < self.num_states):
            raise KwfstError(f"arc endpoint out of range: {src}->{dst}")
        self.arcs.append(Arc(src, dst, ilabel, olabel, float(weight)))

    def set_final(self, state, weight=0.0):
        self.finals[state] = float(weight)

    def input_symbols(self):
        return {a.ilabel for a in self.arcs} - {EPSILON}

    def output_symbols(self):
        return {a.olabel for a in self.arcs} - {EPSILON}

    def arcs_from(self):
        out = [[] for _ in range(self.num_states)]
        for a in self.arcs:
            out[a.src].append(a)
        return out

    def to_text(self):
        """Conventional textual arc format: `src dst in out weight` plus
        `state weight` lines for finals."""
        lines = []
        for a in self.arcs:
            lines.append(f"{a.src} {a.dst} {a.ilabel} {a.olabel} {a.weight:g}")
        for s in sorted(self.finals):
            lines.append(f"{s} {self.finals[s]:g}")
        return "\n".join(lines) + "\n"


@dataclass
class Path:
    arcs: list
    total_cost: float

    @property
    def inputs(self):
        return [a.ilabel for a in self.arcs if a.ilabel != EPSILON]

    @property
    def outputs(self):
        return [a.olabel for a in self.arcs if a.olabel != EPSILON]


def compose(a, b):
    """Composition with the standard three-state epsilon filter.

    Filter state 0 admits everything, 1 only a-side epsilon moves, 2 only
    b-side epsilon moves; a matched symbol resets to 0.  This keeps every
    valid pairing reachable without duplicating epsilon interleavings.
    """
    missing = a.output_symbols() - b.input_symbols()
    if missing:
        raise KwfstError(
            "composition alphabet mismatch; a emits symbols unknown to b: "
            + ", ".join(sorted(missing)))
    a_out = a.arcs_from()
    b_out = b.arcs_from()
    b_by_in = []
    for arcs in b_out:
        idx = {}
        for arc in arcs:
            idx.setdefault(arc.ilabel, []).append(arc)
        b_by_in.append(idx)

    out = Wfst()
    states = {}

    def state_of(key):
        if key not in states:
            states[key] = out.add_state()
        return states[key]

    start = (a.start, b.start, 0)
    state_of(start)
    stack = [start]
    seen = {start}
    while stack:
        key = stack.pop()
        qa, qb, f = key
        src = states[key]
        if qa in a.finals and qb in b.finals:
            out.set_final(src, a.finals[qa] + b.finals[qb])

        def push(nkey, ilabel, olabel, weight):
            dst = state_of(nkey)
            out.add_arc(src, dst, ilabel, olabel, weight)
            if nkey not in seen:
                seen.add(nkey)
                stack.append(nkey)

        for arc_a in a_out[qa]:
            if arc_a.olabel == EPSILON:
                if f in (0, 1):
                    push((arc_a.dst, qb, 1), arc_a.ilabel, EPSILON,
                         arc_a.weight)
                if f == 0:
                    # paired epsilon move: both sides advance at once
                    for arc_b in b_by_in[qb].get(EPSILON, ()):
                        push((arc_a.dst, arc_b.dst, 0), arc_a.ilabel,
                             arc_b.olabel, arc_a.weight + arc_b.weight)
            else:
                for arc_b in b_by_in[qb].get(arc_a.olabel, ()):
                    push((arc_a.dst, arc_b.dst, 0), arc_a.ilabel,
                         arc_b.olabel, arc_a.weight + arc_b.weight)
        if f in (0, 2):
            for arc_b in b_by_in[qb].get(EPSILON, ()):
                push((qa, arc_b.dst, 2), EPSILON, arc_b.olabel, arc_b.weight)
    return out


def _backward_costs(m):
    """Min cost from each state to acceptance (tropical shortest distance)."""
    inf = float("inf")
    dist = [inf] * m.num_states
    rev = [[] for _ in range(m.num_states)]
    for a in m.arcs:
        rev[a.dst].append(a)
    heap = []
    for s, w in m.finals.items():
        if w < dist[s]:
            dist[s] = w
            heapq.heappush(heap, (w, s))
    # weights may be epsilon-negative from lattice normalization slack, so
    # keep relaxing instead of assuming settled Dijkstra order
    while heap:
        d, s = heapq.heappop(heap)
        if d > dist[s] + _TOL:
            continue
        for a in rev[s]:
            nd = a.weight + dist[s]
            if nd < dist[a.src] - 1e-15:
                dist[a.src] = nd
                heapq.heappush(heap, (nd, a.src))
    return dist


def shortest_path(m):
    """Minimum-cost accepting path.

    Ties are broken by the lexicographically smallest output-label sequence
    (string order, a shorter sequence preceding its extensions), found by a
    greedy frontier walk over the subgraph of optimal arcs.
    """
    dist = _backward_costs(m)
    total = dist[m.start]
    if total == float("inf"):
        raise NoPathError("machine has no accepting path")
    fwd = m.arcs_from()

    def optimal(arc):
        return abs(arc.weight + dist[arc.dst] - dist[arc.src]) <= _TOL

    def closure(items):
        # follow optimal arcs that emit no output; deterministic first-reach
        frontier = dict(items)
        queue = list(items)
        while queue:
            state, path = queue.pop(0)
            for arc in sorted(fwd[state],
                              key=lambda a: (a.ilabel, a.dst)):
                if arc.olabel != EPSILON or not optimal(arc):
                    continue
                if arc.dst not in frontier:
                    frontier[arc.dst] = path + [arc]
                    queue.append((arc.dst, frontier[arc.dst]))
        return frontier

    frontier = closure([(m.start, [])])
    guard = 0
    while True:
        guard += 1
        if guard > 10 * (m.num_states + len(m.arcs) + 1):
            raise KwfstError("shortest-path walk failed to terminate")
        done = [s for s in frontier
                if s in m.finals and abs(dist[s] - m.finals[s]) <= _TOL]
        if done:
            s = min(done)
            return Path(frontier[s], total)
        best_label = None
        for state in frontier:
            for arc in fwd[state]:
                if arc.olabel == EPSILON or not optimal(arc):
                    continue
                if best_label is None or arc.olabel < best_label:
                    best_label = arc.olabel
        if best_label is None:
            raise KwfstError("optimal subgraph is dead-ended")
        items = []
        reached = set()
        for state in sorted(frontier):
            for arc in sorted(fwd[state], key=lambda a: (a.ilabel, a.dst)):
                if arc.olabel != best_label or not optimal(arc):
                    continue
                if arc.dst not in reached:
                    reached.add(arc.dst)
                    items.append((arc.dst, frontier[state] + [arc]))
        frontier = closure(items)


def build_emission_fst(lattice):
    """Frame-synchronous linear acceptor: arc weight is -log P(symbol|frame)."""
    m = Wfst()
    for _ in range(lattice.n_frames + 1):
        m.add_state()
    m.start = 0
    m.set_final(lattice.n_frames, 0.0)
    for t in range(lattice.n_frames):
        for i, sym in enumerate(lattice.symbols):
            w = -float(lattice.log_probs[t, i])
            m.add_arc(t, t + 1, sym, sym, w)
    return m


def build_collapse_fst(inventory, n=None):
    """CTC collapse transducer: drops blanks, merges runs of one label.

    State 0 means "just started or just saw blank"; state i > 0 means the
    last real symbol was inventory label i.  A label is emitted on entering
    its run.  `n` restricts the machine to the first n alphabet symbols.
    """
    labels = inventory.labels if n is None else inventory.labels[:n]
    if labels[0] != BLANK:
        raise KwfstError("inventory must put blank at id 0")
    m = Wfst()
    for _ in range(len(labels)):
        m.add_state()
    m.start = 0
    for s in range(len(labels)):
        m.set_final(s, 0.0)
        m.add_arc(s, 0, BLANK, EPSILON, 0.0)
        for i, label in enumerate(labels[1:], 1):
            if i == s:
                m.add_arc(s, s, label, EPSILON, 0.0)
            else:
                m.add_arc(s, i, label, label, 0.0)
    return m
