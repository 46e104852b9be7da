"""Gaussian moments, vertex correlators and Feynman-diagram bookkeeping.

Two independent evaluation routes are provided: exhaustive enumeration of
perfect matchings (the brute-force oracle) and the recursive Isserlis rule
``E[g M] = sum_h <g h> E[dM/dh]`` with memoization (used for larger
products).  Both handle odd legs, whose matchings carry the Pfaffian sign.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Iterator, Sequence

from .errors import CapExceededError, ValidationError
from .graded_poly import Generator, GradedPoly, lift
from .graph_complex import (
    LabelledGraph,
    automorphism_count,
    canonical_form,
    edge_symmetry,
    t_edge,
    unoriented_key,
)
from .linalg import inverse

DEFAULT_MAX_LEGS = 16


def _mul(a, b):
    if isinstance(a, GradedPoly) or isinstance(b, GradedPoly):
        return lift(a) * lift(b)
    return a * b


def _simplify(v):
    if isinstance(v, GradedPoly):
        if not v.terms:
            return 0
        if set(v.terms) == {()}:
            return v.terms[()]
    return v


class QuadraticKernel:
    """Symmetric propagator ``<x^mu x^nu> = scale * inverse_pairing[mu][nu]``.

    ``scale`` may be a number or a polynomial (for instance a generator
    standing for 1/alpha).
    """

    def __init__(self, coords: Sequence[Generator], inverse_pairing, scale=1):
        self.coords = list(coords)
        n = len(self.coords)
        M = [[Fraction(v) for v in row] for row in inverse_pairing]
        if len(M) != n or any(len(r) != n for r in M):
            raise ValidationError(f"inverse pairing must be {n}x{n}")
        if any(M[i][j] != M[j][i] for i in range(n) for j in range(n)):
            raise ValidationError("inverse pairing must be symmetric")
        if any(g.odd for g in self.coords):
            raise ValidationError("a symmetric kernel needs even coordinates")
        self.matrix = M
        self.scale = scale
        self.index = {g: i for i, g in enumerate(self.coords)}

    @classmethod
    def from_quadratic_form(cls, coords, Q, alpha=1) -> "QuadraticKernel":
        """Kernel of exp(-alpha/2 x^T Q x): <x x> = Q^-1 / alpha."""
        inv = inverse(Q)
        scale = Fraction(1) / Fraction(alpha) if not isinstance(alpha, GradedPoly) else alpha
        return cls(coords, inv, scale)

    def legs(self):
        return self.index.keys()

    def entry(self, i: int, j: int):
        v = self.matrix[i][j]
        return _simplify(_mul(self.scale, v)) if v else 0

    def pair(self, g: Generator, h: Generator):
        i, j = self.index.get(g), self.index.get(h)
        if i is None or j is None:
            return 0
        return self.entry(i, j)


class FactoredKernel:
    """Lattice propagator ``<x_i^mu x_j^nu> = (Omega^-1)^{mu nu} t_ij`` (and odd analogue).

    ``copies[i]`` lists the even coordinates of copy ``i + 1``;
    ``odd_copies[i]`` the odd ones, with ``<psi_i^a psi_j^b> = eta_inv[a][b] t_ij``.
    Same-copy contractions vanish because ``t_ii = 0``.
    """

    def __init__(self, omega_inv, copies, eta_inv=None, odd_copies=None):
        self.omega_inv = [[Fraction(v) for v in row] for row in omega_inv]
        self.eta_inv = [[Fraction(v) for v in row] for row in (eta_inv or [])]
        self.index: dict[Generator, tuple] = {}
        for i, cs in enumerate(copies, start=1):
            for mu, g in enumerate(cs):
                self.index[g] = (0, i, mu)
        for i, cs in enumerate(odd_copies or [], start=1):
            for a, g in enumerate(cs):
                self.index[g] = (1, i, a)

    def legs(self):
        return self.index.keys()

    def pair(self, g: Generator, h: Generator):
        a, b = self.index.get(g), self.index.get(h)
        if a is None or b is None or a[0] != b[0] or a[1] == b[1]:
            return 0
        M = self.eta_inv if a[0] else self.omega_inv
        v = M[a[2]][b[2]]
        return t_edge(a[1], b[1]) * v if v else 0


def perfect_matchings(items: Sequence) -> Iterator[list[tuple]]:
    """All perfect matchings of ``items`` as lists of pairs (positions preserved)."""
    items = list(items)
    if not items:
        yield []
        return
    if len(items) % 2:
        return
    first, rest = items[0], items[1:]
    for k, partner in enumerate(rest):
        remaining = rest[:k] + rest[k + 1:]
        for m in perfect_matchings(remaining):
            yield [(first, partner)] + m


def count_matchings(n_legs: int) -> int:
    if n_legs % 2:
        return 0
    out = 1
    for k in range(n_legs - 1, 0, -2):
        out *= k
    return out


def _check_legs(n: int, max_legs: int | None):
    cap = DEFAULT_MAX_LEGS if max_legs is None else max_legs
    if n > cap:
        raise CapExceededError(f"{n} legs exceed the leg cap of {cap}")


def gaussian_moment(indices: Sequence[int], kernel: QuadraticKernel, max_legs: int | None = None):
    """<x^{i1} ... x^{ik}> by summing over all perfect matchings."""
    n = len(kernel.coords)
    for i in indices:
        if not (isinstance(i, int) and 0 <= i < n):
            raise ValidationError(f"coordinate index {i!r} out of range 0..{n - 1}")
    if len(indices) % 2:
        return 0
    _check_legs(len(indices), max_legs)
    total = 0
    for m in perfect_matchings(list(indices)):
        term = 1
        for a, b in m:
            term = _mul(term, kernel.entry(a, b))
            if not term:
                break
        total = total + term if term else total
    return _simplify(total)


def _split_legs(mono, kernel):
    """(sign, rest monomial, leg monomial) with the legs moved to the right."""
    known = kernel.legs()
    rest, legs = [], []
    flips = 0
    odd_legs_seen = 0
    for g, e in mono:
        if g in known:
            legs.append((g, e))
            if g.odd:
                odd_legs_seen += e
        else:
            rest.append((g, e))
            if g.odd:
                flips += odd_legs_seen * e
    return (-1 if flips % 2 else 1), tuple(rest), tuple(legs)


def _legs_list(legs_mono) -> list[Generator]:
    out = []
    for g, e in legs_mono:
        out.extend([g] * e)
    return out


def _matching_sign(pairs: list[tuple[int, int]], odd: Sequence[bool]) -> int:
    """Pfaffian sign of a matching given by position pairs: (-1)^(crossings of odd pairs)."""
    op = [tuple(sorted(p)) for p in pairs if odd[p[0]]]
    crossings = 0
    for x in range(len(op)):
        a, b = op[x]
        for y in range(x + 1, len(op)):
            c, d = op[y]
            if a < c < b < d or c < a < d < b:
                crossings += 1
    return -1 if crossings % 2 else 1


def expectation_by_matchings(poly, kernel, max_legs: int | None = None):
    """Gaussian expectation of ``poly`` by brute-force matching enumeration."""
    total = GradedPoly()
    for mono, c in lift(poly).terms.items():
        sign, rest, legs_mono = _split_legs(mono, kernel)
        legs = _legs_list(legs_mono)
        if len(legs) % 2:
            continue
        _check_legs(len(legs), max_legs)
        odd = [g.odd for g in legs]
        value = 0
        for m in perfect_matchings(list(range(len(legs)))):
            term = _matching_sign(m, odd)
            for a, b in m:
                term = _mul(term, kernel.pair(legs[a], legs[b]))
                if not term:
                    break
            if term:
                value = value + term
        if value:
            total = total + GradedPoly._raw({rest: 1}) * lift(value) * (c * sign)
    return _simplify(total)


def _drop_one(mono, idx):
    g, e = mono[idx]
    if e == 1:
        return mono[:idx] + mono[idx + 1:]
    return mono[:idx] + ((g, e - 1),) + mono[idx + 1:]


def wick_expectation(poly, kernel, max_legs: int | None = None):
    """Gaussian expectation of ``poly`` via the recursive Isserlis rule.

    Generators unknown to the kernel are treated as constants and kept to
    the left of the contracted legs.
    """
    memo: dict = {(): 1}

    def E(legs):
        if legs in memo:
            return memo[legs]
        g, _ = legs[0]
        rest = _drop_one(legs, 0)
        total = 0
        odd_before = 0
        for idx, (h, e) in enumerate(rest):
            p = kernel.pair(g, h)
            if p:
                coeff = e * (-1 if (h.odd and odd_before % 2) else 1)
                sub = E(_drop_one(rest, idx))
                if sub:
                    total = total + _mul(_mul(p, sub), coeff)
            if h.odd:
                odd_before += e
        memo[legs] = _simplify(total) if not isinstance(total, int) else total
        return memo[legs]

    out = GradedPoly()
    for mono, c in lift(poly).terms.items():
        sign, rest, legs = _split_legs(mono, kernel)
        n = sum(e for _, e in legs)
        if n % 2:
            continue
        _check_legs(n, max_legs)
        v = E(legs)
        if v:
            out = out + GradedPoly._raw({rest: 1}) * lift(v) * (c * sign)
    return _simplify(out)


@dataclass(frozen=True)
class Vertex:
    """A homogeneous vertex polynomial living on one copy of the coordinates."""

    poly: GradedPoly
    copy_index: int = 0

    @property
    def valence(self) -> int:
        orders = self.poly.orders()
        if len(orders) != 1:
            raise ValidationError("vertex polynomial must be homogeneous")
        return orders.pop()


def _as_vertex(v) -> Vertex:
    return v if isinstance(v, Vertex) else Vertex(lift(v))


def _identical_prefactor(vertices, groups) -> Fraction:
    if groups is None:
        return Fraction(1)
    seen = set()
    out = Fraction(1)
    for grp in groups:
        for k in grp:
            if k in seen or not (0 <= k < len(vertices)):
                raise ValidationError("identical_groups must partition the vertex indices")
            seen.add(k)
        out /= factorial(len(grp))
    return out


def correlator(vertices, kernel, identical_groups=None, max_legs: int | None = None,
               method: str = "matchings"):
    """Wick sum of the product of vertices, with 1/p! per group of p identical vertices."""
    vs = [_as_vertex(v) for v in vertices]
    prod = GradedPoly.const(1)
    for v in vs:
        prod = prod * v.poly
    if method == "matchings":
        value = expectation_by_matchings(prod, kernel, max_legs)
    elif method == "recursive":
        value = wick_expectation(prod, kernel, max_legs)
    else:
        raise ValidationError(f"unknown method {method!r}")
    pre = _identical_prefactor(vs, identical_groups)
    return _simplify(_mul(value, pre))


def symmetry_factor(g: LabelledGraph, colors: Sequence | None = None) -> tuple[int, int, int]:
    """(#P, #V, #L); |Aut| = P * V * L."""
    loops = sum(1 for a, b in g.edges if a == b)
    return edge_symmetry(g), automorphism_count(g, colors), 2 ** loops


def _colors(n: int, groups) -> tuple:
    if groups is None:
        return tuple(range(n))
    col = [None] * n
    for gi, grp in enumerate(groups):
        for k in grp:
            col[k] = gi
    if any(c is None for c in col):
        raise ValidationError("identical_groups must cover every vertex")
    return tuple(col)


def diagram_weight(g: LabelledGraph, vertices, kernel):
    """W(Gamma): contract vertex Taylor tensors along the edges of ``g``.

    Each edge (a, b) applies sum_{mu,nu} <x^mu x^nu> d_mu^(a) d_nu^(b); the
    result is read off at x = 0.
    """
    vs = [_as_vertex(v) for v in vertices]
    coords = list(kernel.coords)
    state: dict = {}
    prod_terms = [((), 1)]
    for v in vs:
        prod_terms = [(key + (m,), _mul(c, cv)) for key, c in prod_terms for m, cv in v.poly.terms.items()]
    for key, c in prod_terms:
        state[key] = state.get(key, 0) + c

    def d(mono, gen):
        for idx, (h, e) in enumerate(mono):
            if h == gen:
                return e, _drop_one(mono, idx)
        return 0, None

    for a, b in g.edges:
        a -= 1
        b -= 1
        nxt: dict = {}
        for key, c in state.items():
            for mu, gm in enumerate(coords):
                e1, ma = d(key[a], gm)
                if not e1:
                    continue
                key1 = key[:a] + (ma,) + key[a + 1:]
                for nu, gn in enumerate(coords):
                    p = kernel.entry(mu, nu)
                    if not p:
                        continue
                    e2, mb = d(key1[b], gn)
                    if not e2:
                        continue
                    key2 = key1[:b] + (mb,) + key1[b + 1:]
                    nxt[key2] = _mul(p, c * e1 * e2) + nxt.get(key2, 0)
        state = nxt
    total = 0
    for key, c in state.items():
        if all(m == () for m in key):
            total = total + c
    return _simplify(total)


@dataclass(frozen=True)
class Diagram:
    graph: LabelledGraph
    colors: tuple
    multiplicity: int
    weight: object
    inverse_aut: Fraction
    symmetry: tuple

    @property
    def aut(self) -> int:
        p, v, l = self.symmetry
        return p * v * l

    @property
    def graph_class(self):
        return canonical_form(self.graph)[0]


def diagram_expansion(vertices, kernel, identical_groups=None, max_legs: int | None = None
                      ) -> list[Diagram]:
    """Group all leg matchings by the isomorphism class of their contraction graph."""
    vs = [_as_vertex(v) for v in vertices]
    vals = [v.valence for v in vs]
    legs = [(k, a) for k, n in enumerate(vals) for a in range(n)]
    _check_legs(len(legs), max_legs)
    colors = _colors(len(vs), identical_groups)
    counts: Counter = Counter()
    reps: dict = {}
    for m in perfect_matchings(legs):
        g = LabelledGraph(len(vs), tuple((p[0] + 1, q[0] + 1) for p, q in m))
        key = unoriented_key(g, colors)
        counts[key] += 1
        reps.setdefault(key, g)
    leg_perms = 1
    for n in vals:
        leg_perms *= factorial(n)
    if identical_groups is not None:
        for grp in identical_groups:
            leg_perms *= factorial(len(grp))
    out = []
    for key in sorted(counts, key=lambda k: (-counts[k], k[1])):
        rep = reps[key]
        canon = LabelledGraph(key[0], key[1])
        out.append(Diagram(
            graph=canon,
            colors=key[2] or (),
            multiplicity=counts[key],
            weight=diagram_weight(rep, vs, kernel),
            inverse_aut=Fraction(counts[key], leg_perms),
            symmetry=symmetry_factor(rep, colors),
        ))
    return out


def resum(diagrams: Sequence[Diagram], vertices, identical_groups=None):
    """sum multiplicity * W / prod(valence!) with the identical-vertex prefactor."""
    vs = [_as_vertex(v) for v in vertices]
    denom = 1
    for v in vs:
        denom *= factorial(v.valence)
    total = 0
    for d in diagrams:
        total = total + _mul(d.weight, Fraction(d.multiplicity, denom))
    return _simplify(_mul(total, _identical_prefactor(vs, identical_groups)))


def lattice_coordinates(n_copies: int, dim: int, prefix: str = "x") -> list[list[Generator]]:
    return [[Generator(f"{prefix}_{i}_{mu}", 0) for mu in range(1, dim + 1)]
            for i in range(1, n_copies + 1)]


def lattice_correlator(fs: Sequence, coords: Sequence[Generator], omega, method: str = "recursive",
                       max_legs: int | None = None):
    """<f_1(x_1) ... f_N(x_N)> with <x_i^mu x_j^nu> = (Omega^-1)^{mu nu} t_ij."""
    dim = len(coords)
    omega_inv = inverse(omega)
    if any(omega[i][j] != -omega[j][i] for i in range(dim) for j in range(dim)):
        raise ValidationError("Omega must be antisymmetric")
    copies = lattice_coordinates(len(fs), dim)
    kernel = FactoredKernel(omega_inv, copies)
    prod = GradedPoly.const(1)
    for i, f in enumerate(fs):
        moved = lift(f).substitute({c: GradedPoly.gen(copies[i][mu]) for mu, c in enumerate(coords)})
        prod = prod * moved
    if method == "recursive":
        return wick_expectation(prod, kernel, max_legs)
    if method == "matchings":
        return expectation_by_matchings(prod, kernel, max_legs)
    raise ValidationError(f"unknown method {method!r}")
