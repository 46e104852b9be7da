"""The graph chain complex and its encoding by polynomials in t_i, t_ij.

An oriented graph is a vertex order (labels 1..n) plus a direction on every
edge.  Relabeling by a permutation with k edge flips multiplies the class by
``(-1)^k sgn(sigma)``; classes equal to their own negatives vanish.  The
polynomial of a graph uses odd ``t_i`` (degree -1) per vertex and even
``t_ij = -t_ji`` (degree 0) per edge.
"""
from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Mapping, Sequence

from .errors import CapExceededError, ValidationError
from .graded_poly import Generator, GradedPoly, format_rational, parse_rational

DEFAULT_MAX_VERTICES = 8


@dataclass(frozen=True)
class LabelledGraph:
    n: int
    edges: tuple = ()

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ValidationError("a graph needs a positive number of vertices")
        edges = []
        for e in self.edges:
            if len(e) != 2:
                raise ValidationError(f"edge {e!r} is not a pair")
            a, b = int(e[0]), int(e[1])
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise ValidationError(f"edge {e!r} has a label outside 1..{self.n}")
            edges.append((a, b))
        object.__setattr__(self, "edges", tuple(sorted(edges)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_loop(self) -> bool:
        return any(a == b for a, b in self.edges)

    def valences(self) -> list[int]:
        val = [0] * self.n
        for a, b in self.edges:
            val[a - 1] += 1
            val[b - 1] += 1
        return val

    def multiplicities(self) -> Counter:
        """Unordered edge multiplicities keyed by (min, max)."""
        return Counter((min(a, b), max(a, b)) for a, b in self.edges)

    def relabel(self, perm: Sequence[int]) -> "LabelledGraph":
        """Relabel vertex v as perm[v-1] (perm is a permutation of 1..n)."""
        return LabelledGraph(self.n, tuple((perm[a - 1], perm[b - 1]) for a, b in self.edges))

    def to_json(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, doc) -> "LabelledGraph":
        if not isinstance(doc, dict) or "n" not in doc:
            raise ValidationError("graph document needs 'n' and 'edges'")
        return cls(doc["n"], tuple(tuple(e) for e in doc.get("edges", [])))


def graph(n: int, *edges) -> LabelledGraph:
    return LabelledGraph(n, tuple(edges))


@dataclass(frozen=True)
class GraphClass:
    canonical: LabelledGraph
    is_zero: bool = False

    @property
    def n(self) -> int:
        return self.canonical.n

    @property
    def n_edges(self) -> int:
        return self.canonical.n_edges


def _perm_sign(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j] - 1
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def _vertex_cells(g: LabelledGraph, colors: Sequence | None) -> list[list[int]]:
    """Partition vertices into cells of equal isomorphism invariant, ordered."""
    adj: list[Counter] = [Counter() for _ in range(g.n)]
    for a, b in g.edges:
        adj[a - 1][b - 1] += 1
        if a != b:
            adj[b - 1][a - 1] += 1
    inv = [(colors[v] if colors else 0, sum(adj[v].values()), adj[v][v]) for v in range(g.n)]
    rank = _ranks(inv)
    for _ in range(g.n):
        nxt = [(rank[v], tuple(sorted((rank[u], m) for u, m in adj[v].items() if u != v)))
               for v in range(g.n)]
        new_rank = _ranks(nxt)
        if len(set(new_rank)) == len(set(rank)):
            break
        rank = new_rank
    cells: dict[int, list[int]] = {}
    for v in range(g.n):
        cells.setdefault(rank[v], []).append(v)
    return [cells[r] for r in sorted(cells)]


def _ranks(items: list) -> list[int]:
    order = {v: i for i, v in enumerate(sorted(set(items)))}
    return [order[x] for x in items]


def _candidate_perms(g: LabelledGraph, colors):
    """Relabelings respecting the invariant ordering of vertices (perm[v] = new label)."""
    cells = _vertex_cells(g, colors)
    offsets = []
    start = 1
    for cell in cells:
        offsets.append(start)
        start += len(cell)
    for choice in itertools.product(*(itertools.permutations(c) for c in cells)):
        perm = [0] * g.n
        for cell_order, off in zip(choice, offsets):
            for k, v in enumerate(cell_order):
                perm[v] = off + k
        yield perm


def _check_cap(n: int, cap: int | None):
    cap = DEFAULT_MAX_VERTICES if cap is None else cap
    if n > cap:
        raise CapExceededError(f"graph has {n} vertices; the vertex cap is {cap}")


def _scan(g: LabelledGraph, colors=None):
    """Minimum normalized edge tuple, signs reaching it, and how many relabelings do."""
    best = None
    signs = set()
    hits = 0
    best_perm = None
    for perm in _candidate_perms(g, colors):
        flips = 0
        es = []
        for a, b in g.edges:
            pa, pb = perm[a - 1], perm[b - 1]
            if pa > pb:
                flips += 1
                pa, pb = pb, pa
            es.append((pa, pb))
        es.sort()
        key = tuple(es)
        sign = _perm_sign(perm) * (-1 if flips % 2 else 1)
        if best is None or key < best:
            best, signs, hits, best_perm = key, {sign}, 1, perm
        elif key == best:
            signs.add(sign)
            hits += 1
    return best, signs, hits, best_perm


@lru_cache(maxsize=1 << 16)
def _canonical_cached(g: LabelledGraph):
    best, signs, _, _ = _scan(g)
    canon = LabelledGraph(g.n, best)
    zero = g.has_loop() or len(signs) > 1
    return GraphClass(canon, zero), (0 if zero else signs.pop())


def canonical_form(g: LabelledGraph, max_vertices: int | None = None) -> tuple[GraphClass, int]:
    """Canonical class of ``g`` and the sign s with ``g = s * class``.

    The sign is 0 exactly when the class vanishes (an orientation-reversing
    automorphism exists, which includes every graph with a loop).
    """
    _check_cap(g.n, max_vertices)
    return _canonical_cached(g)


def unoriented_key(g: LabelledGraph, colors: Sequence | None = None) -> tuple:
    """Isomorphism key ignoring orientation; ``colors`` restricts relabelings."""
    best, _, _, perm = _scan(g, colors)
    new_colors = None
    if colors:
        new_colors = [None] * g.n
        for v in range(g.n):
            new_colors[perm[v] - 1] = colors[v]
        new_colors = tuple(new_colors)
    return (g.n, best, new_colors)


def automorphism_count(g: LabelledGraph, colors: Sequence | None = None) -> int:
    """#V: vertex permutations (respecting colors) preserving the unoriented multigraph."""
    return _scan(g, colors)[2]


def edge_symmetry(g: LabelledGraph) -> int:
    """#P: product of factorials of edge multiplicities (loops at one vertex included)."""
    out = 1
    for m in g.multiplicities().values():
        out *= factorial(m)
    return out


class GraphChain:
    """Finite formal sum of nonzero graph classes with rational coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[GraphClass, object] | None = None):
        self.terms = {}
        for cls, c in (terms or {}).items():
            c = Fraction(c)
            if c and not cls.is_zero:
                self.terms[cls] = c

    @classmethod
    def of(cls, g: LabelledGraph | GraphClass, coeff=1) -> "GraphChain":
        out = cls()
        out.add_graph(g, coeff)
        return out

    def add_graph(self, g: LabelledGraph | GraphClass, coeff=1) -> None:
        if isinstance(g, GraphClass):
            cls, s = g, (0 if g.is_zero else 1)
        else:
            cls, s = canonical_form(g)
        if not s:
            return
        v = self.terms.get(cls, 0) + Fraction(coeff) * s
        if v:
            self.terms[cls] = v
        else:
            self.terms.pop(cls, None)

    def __add__(self, other: "GraphChain") -> "GraphChain":
        out = GraphChain(self.terms)
        for cls, c in other.terms.items():
            out.add_graph(cls, c)
        return out

    def __sub__(self, other):
        return self + other * -1

    def __mul__(self, c) -> "GraphChain":
        return GraphChain({k: v * Fraction(c) for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, GraphChain):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __bool__(self):
        return bool(self.terms)

    def __len__(self):
        return len(self.terms)

    def coefficient(self, g: LabelledGraph | GraphClass) -> Fraction:
        if isinstance(g, GraphClass):
            return self.terms.get(g, Fraction(0))
        cls, s = canonical_form(g)
        return self.terms.get(cls, Fraction(0)) * s

    def degrees(self) -> set[int]:
        return {cls.n for cls in self.terms}

    def items(self):
        return sorted(self.terms.items(), key=lambda kv: (kv[0].n, kv[0].canonical.edges))

    def to_json(self) -> list:
        return [{"coeff": format_rational(c), "graph": cls.canonical.to_json()} for cls, c in self.items()]

    @classmethod
    def from_json(cls, doc) -> "GraphChain":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, list):
            raise ValidationError("a chain document is a list of {coeff, graph} terms")
        out = cls()
        for t in doc:
            if not isinstance(t, dict) or "graph" not in t:
                raise ValidationError("each chain term needs 'coeff' and 'graph'")
            out.add_graph(LabelledGraph.from_json(t["graph"]), parse_rational(t.get("coeff", "1")))
        return out

    def __repr__(self):
        body = ", ".join(f"{format_rational(c)}*{cls.canonical.edges}@{cls.n}" for cls, c in self.items())
        return f"GraphChain({body})"


GraphCochain = Mapping[GraphClass, object]


def contract_edge(g: LabelledGraph, index: int) -> tuple[int, LabelledGraph | None]:
    """Contract the ``index``-th edge; returns (sign, graph) or (0, None) for a loop."""
    a, b = g.edges[index]
    if a == b:
        return 0, None
    i, j = min(a, b), max(a, b)
    sign = -1 if j % 2 else 1
    if a > b:
        sign = -sign

    def move(v):
        if v == j:
            return i
        return v - 1 if v > j else v

    rest = g.edges[:index] + g.edges[index + 1:]
    return sign, LabelledGraph(g.n - 1, tuple((move(u), move(w)) for u, w in rest))


@lru_cache(maxsize=1 << 15)
def _boundary_of_class(cls: GraphClass) -> GraphChain:
    out = GraphChain()
    g = cls.canonical
    if g.n < 2:
        return out
    for idx in range(g.n_edges):
        sign, h = contract_edge(g, idx)
        if sign:
            out.add_graph(h, sign)
    return out


def boundary(c: GraphChain | LabelledGraph | GraphClass) -> GraphChain:
    """Sum over edges of the signed contractions."""
    if not isinstance(c, GraphChain):
        c = GraphChain.of(c)
    out = GraphChain()
    for cls, coeff in c.terms.items():
        _check_cap(cls.n, None)
        for k, v in _boundary_of_class(cls).terms.items():
            out.add_graph(k, v * coeff)
    return out


def pair(cochain: GraphCochain, chain: GraphChain, strict: bool = False) -> Fraction:
    """<cochain, chain>; terms of different vertex degree pair to zero."""
    if strict:
        cdeg = {k.n for k, v in cochain.items() if v}
        if chain.terms and cdeg and not (cdeg & chain.degrees()):
            raise ValidationError("cochain and chain have no vertex degree in common")
    total = Fraction(0)
    for cls, c in chain.terms.items():
        v = cochain.get(cls)
        if v:
            total += Fraction(v) * c
    return total


def dual(g: LabelledGraph | GraphClass) -> dict:
    """The cochain Gamma* with <Gamma*, Gamma> = 1 for the given oriented graph."""
    if isinstance(g, GraphClass):
        return {g: Fraction(1)}
    cls, s = canonical_form(g)
    return {cls: Fraction(s)} if s else {}


# polynomial encoding

@lru_cache(maxsize=None)
def t_vertex(i: int) -> Generator:
    return Generator(f"t_{i}", -1)


@lru_cache(maxsize=None)
def t_edge_gen(i: int, j: int) -> Generator:
    if not i < j:
        raise ValidationError("edge generators are stored with i < j")
    return Generator(f"t_{i}_{j}", 0)


def t_edge(i: int, j: int) -> GradedPoly:
    """t_ij as a polynomial: t_ji = -t_ij and t_ii = 0."""
    if i == j:
        return GradedPoly()
    if i < j:
        return GradedPoly.gen(t_edge_gen(i, j))
    return -GradedPoly.gen(t_edge_gen(j, i))


def _parse_t(g: Generator):
    parts = g.name.split("_")
    if parts[0] != "t" or len(parts) not in (2, 3):
        raise ValidationError(f"{g.name!r} is not a graph generator")
    labels = tuple(int(p) for p in parts[1:])
    if len(labels) == 1 and g.degree != -1 or len(labels) == 2 and g.degree != 0:
        raise ValidationError(f"{g.name!r} has the wrong degree")
    return labels


def _split_mono(m):
    verts, edges = [], {}
    for g, e in m:
        labels = _parse_t(g)
        if len(labels) == 1:
            verts.append(labels[0])
        else:
            edges[labels] = e
    return verts, edges


def _build_mono(verts: Sequence[int], edges: Mapping[tuple, int]):
    """Monomial for t_{verts...} (already sorted) times edge powers."""
    return tuple((t_vertex(v), 1) for v in verts) + tuple(
        (t_edge_gen(*e), k) for e, k in sorted(edges.items()) if k)


def labelled_monomial(g: LabelledGraph, labels: Sequence[int]):
    """(sign, monomial) for t_{l1}...t_{ln} prod t_{l_a l_b}; sign 0 if it vanishes."""
    if len(set(labels)) != len(labels):
        return 0, None
    sign = _perm_sign_of_sequence(labels)
    edges: Counter = Counter()
    for a, b in g.edges:
        la, lb = labels[a - 1], labels[b - 1]
        if la == lb:
            return 0, None
        if la > lb:
            sign = -sign
            la, lb = lb, la
        edges[(la, lb)] += 1
    return sign, _build_mono(sorted(labels), edges)


def _perm_sign_of_sequence(seq: Sequence[int]) -> int:
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return -1 if inv % 2 else 1


def to_polynomial(g: LabelledGraph | GraphClass | GraphChain, N: int | None = None) -> GradedPoly:
    """Sum over label assignments l in [N]^n of t_{l1}..t_{ln} prod_edges t_{l_a l_b}.

    ``N`` defaults to the vertex count of each graph.
    """
    if isinstance(g, GraphChain):
        out = GradedPoly()
        for cls, c in g.terms.items():
            out = out + to_polynomial(cls, N) * c
        return out
    if isinstance(g, GraphClass):
        if g.is_zero:
            return GradedPoly()
        g = g.canonical
    N = g.n if N is None else N
    if N < g.n:
        raise ValidationError("label range N must be at least the vertex count")
    terms: dict = {}
    for labels in itertools.permutations(range(1, N + 1), g.n):
        s, mono = labelled_monomial(g, labels)
        if s:
            v = terms.get(mono, 0) + s
            if v:
                terms[mono] = v
            else:
                del terms[mono]
    return GradedPoly(terms)


def extract_coefficient(g: LabelledGraph | GraphClass, p: GradedPoly) -> Fraction:
    """Coefficient of the oriented graph ``g`` in the graph polynomial ``p``.

    Equivalent to applying d/dt_n ... d/dt_1 prod d/dt_ij for ``g`` (with
    d/dt_1 acting first), evaluating at 0 and dividing by #V #P.
    """
    if isinstance(g, GraphClass):
        g = g.canonical
    s, mono = labelled_monomial(g, range(1, g.n + 1))
    if not s:
        return Fraction(0)
    return Fraction(p.coefficient(mono)) * s / automorphism_count(g)


def from_polynomial(p: GradedPoly) -> GraphChain:
    """Inverse of to_polynomial on polynomials in the span of graph polynomials."""
    out = GraphChain()
    for m, c in p.terms.items():
        verts, edges = _split_mono(m)
        if verts != list(range(1, len(verts) + 1)):
            continue
        if not verts:
            raise ValidationError("polynomial term without vertex generators")
        g = LabelledGraph(len(verts), tuple(e for e, k in edges.items() for _ in range(k)))
        out.add_graph(g, Fraction(c) / factorial(len(verts)))
    return out


def vertex_degree(p: GradedPoly) -> int | None:
    """Number of vertex generators per term, if constant."""
    ds = {sum(1 for g, _ in m if g.degree == -1) for m in p.terms}
    return ds.pop() if len(ds) == 1 else None


def max_label(p: GradedPoly) -> int:
    out = 0
    for m in p.terms:
        for g, _ in m:
            out = max(out, *_parse_t(g))
    return out


def boundary_operator_poly(p: GradedPoly, N: int | None = None, l: int | None = None) -> GradedPoly:
    """-1/(2(N-l+1)) sum_{k != p} R^p_k d/dt_kp d/dt_p, with R renaming p to k.

    ``l`` defaults to the vertex degree of ``p`` and ``N`` to the largest
    label occurring in ``p`` (which is ``l`` for polynomials built with
    ``to_polynomial`` at the default range).
    """
    if not p:
        return GradedPoly()
    lp = vertex_degree(p)
    if lp is None:
        raise ValidationError("polynomial is not homogeneous in the number of vertices")
    l = lp if l is None else l
    N = max(max_label(p), l) if N is None else N
    if N - l + 1 <= 0:
        raise ValidationError("need N >= l")
    factor = Fraction(-1, 2 * (N - l + 1))
    out: dict = {}
    for m, c in p.terms.items():
        verts, edges = _split_mono(m)
        for pos, q in enumerate(verts):
            s_vert = -1 if pos % 2 else 1
            rest_verts = verts[:pos] + verts[pos + 1:]
            for k in range(1, N + 1):
                if k == q:
                    continue
                e = (min(k, q), max(k, q))
                mult = edges.get(e, 0)
                if not mult:
                    continue
                sign = s_vert * (-1 if k > q else 1) * mult
                new_edges: Counter = Counter()
                for (a, b), cnt in edges.items():
                    if (a, b) == e:
                        cnt -= 1
                        if not cnt:
                            continue
                    a2 = k if a == q else a
                    b2 = k if b == q else b
                    if a2 == b2:
                        sign = 0
                        break
                    if a2 > b2:
                        a2, b2 = b2, a2
                        if cnt % 2:
                            sign = -sign
                    new_edges[(a2, b2)] += cnt
                if not sign:
                    continue
                mono = _build_mono(rest_verts, new_edges)
                v = out.get(mono, 0) + sign * c * factor
                if v:
                    out[mono] = v
                else:
                    del out[mono]
    return GradedPoly(out)


def enumerate_classes(n: int, max_edges: int, include_zero: bool = False) -> list[GraphClass]:
    """All loopless graph classes with ``n`` vertices and at most ``max_edges`` edges."""
    layer = {canonical_form(LabelledGraph(n))[0]}
    seen = set(layer)
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    for _ in range(max_edges):
        nxt = set()
        for cls in layer:
            for e in pairs:
                h = LabelledGraph(n, cls.canonical.edges + (e,))
                k, _ = canonical_form(h)
                if k not in seen:
                    seen.add(k)
                    nxt.add(k)
        layer = nxt
    out = sorted(seen, key=lambda c: (c.n_edges, c.canonical.edges))
    return out if include_zero else [c for c in out if not c.is_zero]
