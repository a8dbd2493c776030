"""Binary energy minimization with an s/t graph cut.

Energies are built term by term with :meth:`EnergyGraph.add_term1` and
:meth:`EnergyGraph.add_term2` (the construction of Kolmogorov and Zabih) and
minimized exactly by a max-flow computation. Label 0 is the source side and
label 1 the sink side of the cut, so inliers end up on the sink side.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import Labeling
from .errors import ContractViolationError, InvalidInputError, OracleScaleExceededError

SUBMODULAR_SLACK = 1e-12
BRUTE_FORCE_LIMIT = 20


@dataclass(frozen=True, eq=False)
class CutResult:
    labeling: Labeling
    energy: float


class EnergyGraph:
    """Flow network encoding a submodular binary energy.

    Each node keeps a single signed terminal capacity ``tr``: positive values
    are the capacity of the source edge (paid when the node takes label 1),
    negative ones the capacity of the sink edge (paid for label 0). The part
    of every term that no labeling can avoid goes into ``constant_offset``.
    """

    def __init__(self, node_count: int):
        if node_count < 0:
            raise InvalidInputError("node_count must be >= 0")
        self.node_count = int(node_count)
        self.constant_offset = 0.0
        self._tr = [0.0] * self.node_count
        self._edges: dict[tuple[int, int], list[float]] = {}
        self._finalized = False

    # construction

    def _check_node(self, p):
        if not 0 <= p < self.node_count:
            raise InvalidInputError(f"node {p} out of range [0, {self.node_count})")

    def _check_open(self):
        if self._finalized:
            raise ContractViolationError("graph already solved; no further terms may be added")

    def add_tweights(self, p: int, cap_source: float, cap_sink: float):
        delta = self._tr[p]
        if delta > 0:
            cap_source += delta
        else:
            cap_sink -= delta
        self.constant_offset += min(cap_source, cap_sink)
        self._tr[p] = cap_source - cap_sink

    def add_edge(self, p: int, q: int, cap: float, rev_cap: float):
        if p > q:
            p, q, cap, rev_cap = q, p, rev_cap, cap
        slot = self._edges.get((p, q))
        if slot is None:
            self._edges[(p, q)] = [cap, rev_cap]
        else:
            slot[0] += cap
            slot[1] += rev_cap

    def add_term1(self, p: int, c0: float, c1: float):
        """Add ``c0`` to the energy when ``L_p = 0`` and ``c1`` when ``L_p = 1``."""
        self._check_open()
        self._check_node(p)
        if not (np.isfinite(c0) and np.isfinite(c1)):
            raise InvalidInputError("unary costs must be finite")
        self.add_tweights(p, float(c1), float(c0))

    def add_term2(self, p: int, q: int, c00: float, c01: float, c10: float, c11: float):
        """Add the pairwise cost ``c_{L_p L_q}``; must satisfy c00 + c11 <= c01 + c10."""
        self._check_open()
        self._check_node(p)
        self._check_node(q)
        if p == q:
            raise InvalidInputError("pairwise term needs two distinct nodes")
        if c00 + c11 > c01 + c10 + SUBMODULAR_SLACK:
            raise ContractViolationError(
                f"non-submodular term: c00 + c11 = {c00 + c11} > c01 + c10 = {c01 + c10}"
            )
        a, b, c, d = float(c00), float(c01), float(c10), float(c11)
        self.add_tweights(p, d, a)
        b -= a
        c -= d
        if b < 0:
            self.add_tweights(p, 0.0, b)
            self.add_tweights(q, 0.0, -b)
            self.add_edge(p, q, 0.0, max(b + c, 0.0))
        elif c < 0:
            self.add_tweights(p, 0.0, -c)
            self.add_tweights(q, 0.0, c)
            self.add_edge(p, q, max(b + c, 0.0), 0.0)
        else:
            self.add_edge(p, q, b, c)

    # inspection

    @property
    def terminal_caps(self) -> np.ndarray:
        """``(node_count, 2)`` array of (cap_to_source, cap_to_sink)."""
        tr = np.asarray(self._tr, dtype=float)
        return np.column_stack([np.maximum(tr, 0.0), np.maximum(-tr, 0.0)])

    @property
    def edges(self) -> list[tuple[int, int, float, float]]:
        return [(p, q, caps[0], caps[1]) for (p, q), caps in self._edges.items()]

    def evaluate(self, labels) -> float:
        """Energy of a labeling as encoded by the graph (cut cost + constant)."""
        lab = np.asarray(labels, dtype=bool)
        if lab.size != self.node_count:
            raise InvalidInputError("labeling length does not match node count")
        tr = np.asarray(self._tr, dtype=float)
        energy = self.constant_offset
        energy += float(np.sum(np.where(lab, np.maximum(tr, 0.0), np.maximum(-tr, 0.0))))
        for (p, q), (cap, rev) in self._edges.items():
            if not lab[p] and lab[q]:
                energy += cap
            elif lab[p] and not lab[q]:
                energy += rev
        return energy


def min_cut(graph: EnergyGraph) -> CutResult:
    """Globally minimal labeling of the energy encoded in ``graph``.

    Solved with Dinic's blocking-flow algorithm. Nodes still reachable from
    the source in the final residual network take label 0, all others label 1.
    """
    graph._finalized = True
    n = graph.node_count
    if n == 0:
        return CutResult(Labeling(np.zeros(0, dtype=bool)), graph.constant_offset)

    source, sink = n, n + 1
    adj: list[list[int]] = [[] for _ in range(n + 2)]
    head: list[int] = []
    cap: list[float] = []

    def arc(u, v, c, rc):
        adj[u].append(len(head))
        head.append(v)
        cap.append(c)
        adj[v].append(len(head))
        head.append(u)
        cap.append(rc)

    for p, t in enumerate(graph._tr):
        if t > 0:
            arc(source, p, t, 0.0)
        elif t < 0:
            arc(p, sink, -t, 0.0)
    for (p, q), (c, rc) in graph._edges.items():
        if c > 0 or rc > 0:
            arc(p, q, c, rc)

    flow = _dinic(adj, head, cap, source, sink, n + 2)
    reachable = _reachable(adj, head, cap, source, n + 2)
    labels = ~np.asarray(reachable[:n], dtype=bool)
    return CutResult(Labeling(labels), graph.constant_offset + flow)


def _dinic(adj, head, cap, source, sink, size) -> float:
    total = 0.0
    while True:
        level = [-1] * size
        level[source] = 0
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for a in adj[u]:
                v = head[a]
                if cap[a] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[sink] < 0:
            return total

        ptr = [0] * size
        path: list[int] = []
        u = source
        while True:
            if u == sink:
                push = min(cap[a] for a in path)
                cut_at = len(path)
                for i, a in enumerate(path):
                    cap[a] -= push
                    cap[a ^ 1] += push
                    if cap[a] <= 0 and i < cut_at:
                        cut_at = i
                total += push
                del path[cut_at:]
                u = head[path[-1]] if path else source
                continue
            arcs = adj[u]
            i = ptr[u]
            next_level = level[u] + 1
            while i < len(arcs):
                a = arcs[i]
                if cap[a] > 0 and level[head[a]] == next_level:
                    break
                i += 1
            ptr[u] = i
            if i < len(arcs):
                path.append(arcs[i])
                u = head[arcs[i]]
                continue
            if u == source:
                break
            level[u] = -1
            a = path.pop()
            u = head[a ^ 1]
            ptr[u] += 1


def _reachable(adj, head, cap, source, size) -> list[bool]:
    seen = [False] * size
    seen[source] = True
    stack = [source]
    while stack:
        u = stack.pop()
        for a in adj[u]:
            v = head[a]
            if cap[a] > 0 and not seen[v]:
                seen[v] = True
                stack.append(v)
    return seen


def brute_force_min_energy(graph: EnergyGraph) -> CutResult:
    """Exhaustive minimum over all ``2**n`` labelings (test oracle).

    Ties resolve to the lexicographically smallest labeling, node 0 first.
    """
    n = graph.node_count
    if n > BRUTE_FORCE_LIMIT:
        raise OracleScaleExceededError(
            f"brute force limited to {BRUTE_FORCE_LIMIT} nodes, graph has {n}"
        )
    if n == 0:
        return CutResult(Labeling(np.zeros(0, dtype=bool)), graph.constant_offset)
    # rows enumerate labelings in lexicographic order
    codes = np.arange(2 ** n, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(bool)
    caps = graph.terminal_caps
    energy = np.full(len(codes), graph.constant_offset)
    energy += np.where(bits, caps[:, 0], caps[:, 1]).sum(axis=1)
    for p, q, c, rc in graph.edges:
        lp, lq = bits[:, p], bits[:, q]
        energy += np.where(~lp & lq, c, 0.0) + np.where(lp & ~lq, rc, 0.0)
    best = int(np.argmin(energy))
    return CutResult(Labeling(bits[best]), float(energy[best]))


def enumerate_energies(graph: EnergyGraph):
    """Yield ``(labels, energy)`` for every labeling; small graphs only."""
    for labels in itertools.product((False, True), repeat=graph.node_count):
        yield np.array(labels, dtype=bool), graph.evaluate(labels)
