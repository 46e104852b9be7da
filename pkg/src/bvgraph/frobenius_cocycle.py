"""Graph cochains from a finite acyclic differential graded Frobenius algebra.

Edges carry the propagator K (a homotopy inverse of d built by Hodge theory),
vertices carry the integral.  The numbers b_Gamma form a graph cocycle whose
class does not depend on the Hodge metric.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import ValidationError
from .graded_poly import Generator, GradedPoly, derive, format_rational, parse_rational
from .graph_complex import GraphChain, GraphClass, LabelledGraph, boundary, enumerate_classes
from .linalg import det, identity, inverse, matmul, nullspace, rank, transpose

Element = dict  # basis index -> Fraction


def _frac_matrix(M, name) -> list[list[Fraction]]:
    try:
        return [[parse_rational(v) if isinstance(v, str) else Fraction(v) for v in row] for row in M]
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a matrix of rationals") from None


@dataclass
class DGFrobeniusAlgebra:
    """Finite graded commutative algebra with differential and odd integral.

    ``product[I][J]`` maps K to the coefficient of e^K in e^I e^J,
    ``D[I][J]`` is defined by d e^I = D^I_J e^J and ``integral[I]`` = int e^I.
    """

    names: list[str]
    degrees: list[int]
    product: list[list[dict]]
    D: list[list[Fraction]]
    integral: list[Fraction]
    p: int
    unit: int = 0

    @property
    def dim(self) -> int:
        return len(self.names)

    def mul(self, a: Element, b: Element) -> Element:
        out: dict = {}
        for i, x in a.items():
            for j, y in b.items():
                for k, z in self.product[i][j].items():
                    v = out.get(k, 0) + x * y * z
                    if v:
                        out[k] = v
                    else:
                        out.pop(k, None)
        return out

    def basis(self, i: int) -> Element:
        return {i: Fraction(1)}

    def d(self, a: Element) -> Element:
        out: dict = {}
        for i, x in a.items():
            for j, v in enumerate(self.D[i]):
                if v:
                    out[j] = out.get(j, 0) + x * v
        return {k: v for k, v in out.items() if v}

    def integrate(self, a: Element) -> Fraction:
        return sum((x * self.integral[i] for i, x in a.items()), Fraction(0))

    def pairing_matrix(self) -> list[list[Fraction]]:
        """m^{IJ} = int e^I e^J."""
        n = self.dim
        return [[self.integrate(self.mul(self.basis(i), self.basis(j))) for j in range(n)] for i in range(n)]

    def to_json(self) -> dict:
        return {
            "basis": list(self.names),
            "degrees": list(self.degrees),
            "product": [[{str(k): format_rational(v) for k, v in self.product[i][j].items()}
                         for j in range(self.dim)] for i in range(self.dim)],
            "D": [[format_rational(v) for v in row] for row in self.D],
            "integral": [format_rational(v) for v in self.integral],
            "p": self.p,
        }

    @classmethod
    def from_json(cls, doc) -> "DGFrobeniusAlgebra":
        if isinstance(doc, str):
            doc = json.loads(doc)
        try:
            names = [str(x) for x in doc["basis"]]
            degrees = [int(x) for x in doc["degrees"]]
            n = len(names)
            product = [[{int(k): parse_rational(v) if isinstance(v, str) else Fraction(v)
                         for k, v in doc["product"][i][j].items()} for j in range(n)] for i in range(n)]
            D = _frac_matrix(doc["D"], "D")
            integral = [parse_rational(v) if isinstance(v, str) else Fraction(v) for v in doc["integral"]]
            p = int(doc["p"])
        except (KeyError, TypeError, IndexError, AttributeError) as exc:
            raise ValidationError(f"malformed algebra document: {exc}") from None
        if len(degrees) != n or len(D) != n or any(len(r) != n for r in D) or len(integral) != n:
            raise ValidationError("algebra document has inconsistent sizes")
        units = [i for i in range(n) if degrees[i] == 0 and all(
            product[i][j] == {j: 1} for j in range(n))]
        return cls(names, degrees, product, D, integral, p, units[0] if units else 0)


def build_su2() -> DGFrobeniusAlgebra:
    """Chevalley-Eilenberg algebra of su(2): exterior algebra on e1, e2, e3, int e1e2e3 = 1."""
    e = [Generator(f"e{a}", 1) for a in (1, 2, 3)]
    monos = [()] + [(a,) for a in range(3)] + [(0, 1), (0, 2), (1, 2), (0, 1, 2)]

    def poly(mono):
        out = GradedPoly.const(1)
        for a in mono:
            out = out * GradedPoly.gen(e[a])
        return out

    polys = [poly(m) for m in monos]
    index = {next(iter(pp.terms)): k for k, pp in enumerate(polys)}

    def coords(pp: GradedPoly) -> dict:
        out = {}
        for m, c in pp.terms.items():
            out[index[m]] = Fraction(c)
        return out

    n = len(monos)
    product = [[coords(polys[i] * polys[j]) for j in range(n)] for i in range(n)]
    # d e^c = -1/2 eps_{abc} e^a e^b
    de = [-(GradedPoly.gen(e[1]) * GradedPoly.gen(e[2])),
          GradedPoly.gen(e[0]) * GradedPoly.gen(e[2]),
          -(GradedPoly.gen(e[0]) * GradedPoly.gen(e[1]))]

    def d_poly(pp: GradedPoly) -> GradedPoly:
        out = GradedPoly()
        for c in range(3):
            out = out + de[c] * derive(pp, e[c])
        return out

    D = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for k, v in coords(d_poly(polys[i])).items():
            D[i][k] = v
    integral = [Fraction(0)] * n
    integral[7] = Fraction(1)
    names = ["1", "e1", "e2", "e3", "e1e2", "e1e3", "e2e3", "e1e2e3"]
    return DGFrobeniusAlgebra(names, [len(m) for m in monos], product, D, integral, 3, 0)


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def cohomology_dims(a: DGFrobeniusAlgebra) -> dict[int, int]:
    out = {}
    degs = sorted(set(a.degrees))
    for k in degs:
        src = [i for i in range(a.dim) if a.degrees[i] == k]
        nxt = [j for j in range(a.dim) if a.degrees[j] == k + 1]
        prev = [i for i in range(a.dim) if a.degrees[i] == k - 1]
        rank_out = rank([[a.D[i][j] for j in nxt] for i in src]) if src and nxt else 0
        rank_in = rank([[a.D[i][j] for j in src] for i in prev]) if prev and src else 0
        out[k] = len(src) - rank_out - rank_in
    return out


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks)}


def validate(a: DGFrobeniusAlgebra) -> ValidationReport:
    n = a.dim
    E = [a.basis(i) for i in range(n)]
    rep = ValidationReport()
    rep.checks["degrees_respected"] = all(
        a.degrees[k] == a.degrees[i] + a.degrees[j]
        for i in range(n) for j in range(n) for k in a.product[i][j]
    ) and all(a.degrees[j] == a.degrees[i] + 1 for i in range(n) for j in range(n) if a.D[i][j])
    rep.checks["integral_degree"] = all(a.degrees[i] == a.p for i in range(n) if a.integral[i])
    rep.checks["associative"] = all(
        a.mul(a.mul(E[i], E[j]), E[k]) == a.mul(E[i], a.mul(E[j], E[k]))
        for i in range(n) for j in range(n) for k in range(n)
    )
    rep.checks["graded_commutative"] = all(
        a.mul(E[i], E[j]) == {k: v * _sign(a.degrees[i] * a.degrees[j]) for k, v in a.mul(E[j], E[i]).items()}
        for i in range(n) for j in range(n)
    )
    rep.checks["unit"] = all(a.mul(E[a.unit], E[j]) == E[j] for j in range(n))
    rep.checks["d_squared_zero"] = all(not a.d(a.d(E[i])) for i in range(n))

    def leibniz(i, j):
        lhs = a.d(a.mul(E[i], E[j]))
        rhs = a.mul(a.d(E[i]), E[j])
        for k, v in a.mul(E[i], a.d(E[j])).items():
            rhs[k] = rhs.get(k, 0) + _sign(a.degrees[i]) * v
        return lhs == {k: v for k, v in rhs.items() if v}

    rep.checks["leibniz"] = all(leibniz(i, j) for i in range(n) for j in range(n))
    rep.checks["stokes"] = all(a.integrate(a.d(E[i])) == 0 for i in range(n))
    m = a.pairing_matrix()
    rep.checks["stokes_pairing_symmetry"] = all(
        sum(a.D[i][k] * m[k][j] for k in range(n)) + _sign(a.degrees[i]) * sum(m[i][k] * a.D[j][k] for k in range(n)) == 0
        for i in range(n) for j in range(n)
    )
    rep.checks["pairing_compatible"] = all(
        a.integrate(a.mul(a.mul(E[i], E[j]), E[k])) == a.integrate(a.mul(E[i], a.mul(E[j], E[k])))
        for i in range(n) for j in range(n) for k in range(n)
    )
    rep.checks["nondegenerate"] = rank(m) == n if n else True
    coh = cohomology_dims(a)
    lo, hi = min(a.degrees), max(a.degrees)
    rep.checks["acyclic"] = all(v == 0 for k, v in coh.items() if k not in (lo, hi))
    rep.checks["p_odd"] = a.p % 2 == 1
    return rep


@dataclass
class Propagator:
    K: list[list[Fraction]]
    metric: list[list[Fraction]] | None = None
    d_inverse: list[list[Fraction]] | None = None  # (D^-1)^K_J in the row convention

    def to_json(self) -> dict:
        return {"K": [[format_rational(v) for v in row] for row in self.K]}


def harmonic_projector(a: DGFrobeniusAlgebra, metric) -> tuple[list, list, list]:
    """Return (M, M_dagger, Pi_h) as column-convention matrices for the given metric."""
    n = a.dim
    G = _frac_matrix(metric, "metric")
    if len(G) != n or any(len(r) != n for r in G):
        raise ValidationError("metric must be a square matrix matching the algebra dimension")
    if any(G[i][j] != G[j][i] for i in range(n) for j in range(n)):
        raise ValidationError("metric must be symmetric")
    if any(G[i][j] and a.degrees[i] != a.degrees[j] for i in range(n) for j in range(n)):
        raise ValidationError("metric must not pair elements of different degree")
    for k in range(1, n + 1):
        if det([row[:k] for row in G[:k]]) <= 0:
            raise ValidationError("metric must be positive definite")
    M = transpose(a.D)
    Ginv = inverse(G)
    Mdag = matmul(matmul(Ginv, transpose(M)), G)
    box = _add(matmul(M, Mdag), matmul(Mdag, M))
    V = nullspace(box)
    lo, hi = min(a.degrees), max(a.degrees)
    Pi = [[Fraction(0)] * n for _ in range(n)]
    if V:
        cols = [list(v) for v in V]  # each v is a column vector of length n
        for v in cols:
            support = {a.degrees[i] for i in range(n) if v[i]}
            if not support <= {lo, hi}:
                raise ValidationError("harmonic forms outside the extreme degrees: the algebra is not acyclic")
        B = [[cols[c][i] for c in range(len(cols))] for i in range(n)]
        BtG = matmul(transpose(B), G)
        Pi = matmul(matmul(B, inverse(matmul(BtG, B))), BtG)
    return M, Mdag, Pi


def _add(A, B):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(A, B)]


def _sub(A, B):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(A, B)]


def hodge_propagator(a: DGFrobeniusAlgebra, metric=None) -> Propagator:
    """K_IJ = m_IK (D^-1)^K_J with D^-1 = box^-1 d^dagger on the non-harmonic part."""
    n = a.dim
    if metric is None:
        metric = identity(n)
    M, Mdag, Pi = harmonic_projector(a, metric)
    box = _add(matmul(M, Mdag), matmul(Mdag, M))
    try:
        boxplus = _sub(inverse(_add(box, Pi)), Pi)
    except ValidationError:
        raise ValidationError("Laplacian is singular on the non-harmonic complement") from None
    h = matmul(boxplus, Mdag)
    Dinv = transpose(h)  # (D^-1)^K_J = h[J][K]
    m_up = a.pairing_matrix()
    m_low = inverse(m_up)
    K = matmul(m_low, Dinv)
    return Propagator(K, [list(map(Fraction, r)) for r in metric], Dinv)


def propagator_identity_defect(a: DGFrobeniusAlgebra, prop: Propagator) -> list[list[Fraction]]:
    """(D^-1 D + D D^-1) - (id - Pi_h) in the row convention; zero for a Hodge propagator."""
    _, _, Pi = harmonic_projector(a, prop.metric or identity(a.dim))
    Dinv = prop.d_inverse
    lhs = _add(matmul(Dinv, a.D), matmul(a.D, Dinv))
    target = _sub(identity(a.dim), transpose(Pi))
    return _sub(lhs, target)


def symmetry_defect(a: DGFrobeniusAlgebra, K) -> list[tuple[int, int]]:
    """Index pairs violating K_QP = (-1)^{QP+1} K_PQ."""
    n = a.dim
    return [(p, q) for p in range(n) for q in range(n)
            if K[q][p] != _sign(a.degrees[p] * a.degrees[q] + 1) * K[p][q]]


def _effective(a: DGFrobeniusAlgebra, K) -> list[list[Fraction]]:
    """Part of K seen by the generating function (graded-symmetric projection)."""
    n = a.dim
    return [[(K[i][j] - _sign(a.degrees[i] * a.degrees[j]) * K[j][i]) / 2 for j in range(n)] for i in range(n)]


def _representative(g) -> tuple[LabelledGraph | None, int]:
    if isinstance(g, GraphClass):
        return (None, 0) if g.is_zero else (g.canonical, 1)
    if g.has_loop():
        return None, 0
    return g, 1


def evaluate_cochain(prop: Propagator | Sequence, a: DGFrobeniusAlgebra, g: LabelledGraph | GraphClass) -> Fraction:
    """b_Gamma: propagators on edges, integrals on vertices, Koszul signs throughout."""
    K = prop.K if isinstance(prop, Propagator) else prop
    rep, s = _representative(g)
    if rep is None:
        return Fraction(0)
    n = rep.n
    val = rep.valences()
    # every vertex carries a product of basis elements of total degree p
    Keff = _effective(a, K)
    pairs = [(i, j, Keff[i][j]) for i in range(a.dim) for j in range(a.dim) if Keff[i][j]]
    edges = list(rep.edges)
    deg = a.degrees
    p = a.p
    ends = {deg[I] for I, _, _ in pairs} | {deg[J] for _, J, _ in pairs}
    if not ends or any(not (min(ends) * v <= p <= max(ends) * v) for v in val):
        return Fraction(0)
    total = Fraction(0)
    # depth-first over edges, pruning vertices whose running degree overshoots
    acc = [{a.unit: Fraction(1)} for _ in range(n)]
    load = [0] * n
    remaining = list(val)
    seq: list[tuple[int, int]] = []  # (vertex, degree) half-edges in edge order

    def leaf(weight):
        # Koszul sign of regrouping the half-edge elements by vertex (stable)
        sign = 1
        for x in range(len(seq)):
            if seq[x][1] % 2 == 0:
                continue
            for y in range(x + 1, len(seq)):
                if seq[y][1] % 2 and seq[y][0] < seq[x][0]:
                    sign = -sign
        prod = Fraction(1)
        for v in range(n):
            prod *= a.integrate(acc[v])
            if not prod:
                return Fraction(0)
        return weight * sign * prod

    def rec(k, weight):
        nonlocal total
        if k == len(edges):
            total += leaf(weight)
            return
        u, w = edges[k]
        u, w = u - 1, w - 1
        for I, J, kv in pairs:
            if load[u] + deg[I] > p or load[w] + deg[J] > p:
                continue
            if remaining[u] == 1 and load[u] + deg[I] != p:
                continue
            if remaining[w] == 1 and load[w] + deg[J] != p:
                continue
            old_u, old_w = acc[u], acc[w]
            nu = a.mul(acc[u], a.basis(I))
            if not nu:
                continue
            acc[u] = nu
            nw = a.mul(acc[w], a.basis(J))
            if not nw:
                acc[u] = old_u
                continue
            acc[w] = nw
            load[u] += deg[I]
            load[w] += deg[J]
            remaining[u] -= 1
            remaining[w] -= 1
            seq.append((u, deg[I]))
            seq.append((w, deg[J]))
            rec(k + 1, weight * kv)
            seq.pop()
            seq.pop()
            remaining[u] += 1
            remaining[w] += 1
            load[u] -= deg[I]
            load[w] -= deg[J]
            acc[u], acc[w] = old_u, old_w

    rec(0, Fraction(1))
    return total * s * math.factorial(n) * _sign(n * (n - 1) // 2)


def evaluate_chain_cochain(prop, a: DGFrobeniusAlgebra, chain: GraphChain) -> Fraction:
    return sum((c * evaluate_cochain(prop, a, cls) for cls, c in chain.items()), Fraction(0))


@dataclass
class CocycleReport:
    residues: dict = field(default_factory=dict)  # GraphClass -> Fraction
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.residues

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "checked": self.checked,
            "residues": [{"graph": cls.canonical.to_json(), "value": format_rational(v)}
                         for cls, v in sorted(self.residues.items(), key=lambda kv: (kv[0].n, kv[0].canonical.edges))],
        }


def cocycle_check(prop, a: DGFrobeniusAlgebra, max_vertices: int, max_edges: int | None = None,
                  min_valence: int = 0) -> CocycleReport:
    """b(boundary Gamma) for every class with at most ``max_vertices`` vertices.

    ``min_valence`` restricts the check to graphs whose vertices all have at
    least that valence; the default checks every graph.
    """
    rep = CocycleReport()
    cache: dict = {}
    for n in range(1, max_vertices + 1):
        cap = max_edges if max_edges is not None else _default_edge_cap(a, n)
        for cls in enumerate_classes(n, cap):
            if min(cls.canonical.valences()) < min_valence:
                continue
            rep.checked += 1
            val = Fraction(0)
            for sub, c in boundary(cls).items():
                if sub not in cache:
                    cache[sub] = evaluate_cochain(prop, a, sub)
                val += c * cache[sub]
            if val:
                rep.residues[cls] = val
    return rep


def _default_edge_cap(a: DGFrobeniusAlgebra, n: int) -> int:
    # b vanishes unless the contracted graph can saturate every vertex
    lowest = min((d for d in a.degrees if d > 0), default=1)
    return (n * a.p) // (2 * lowest) + 1


def is_cycle(chain: GraphChain) -> bool:
    return not boundary(chain)


def variation(a: DGFrobeniusAlgebra, J) -> list[list[Fraction]]:
    """delta K_IJ = J_IL D^L_J + (-1)^{p-I} D^L_I J_LJ."""
    n = a.dim
    J = _frac_matrix(J, "J")
    for P in range(n):
        for Q in range(n):
            if J[P][Q] != _sign(a.degrees[P] * a.degrees[Q]) * J[Q][P]:
                raise ValidationError(f"J violates J_PQ = (-1)^(PQ) J_QP at ({P}, {Q})")
    JD = matmul(J, a.D)
    DtJ = matmul(transpose(a.D), J)
    return [[JD[i][j] + _sign(a.p - a.degrees[i]) * DtJ[i][j] for j in range(n)] for i in range(n)]


def propagator_variation_check(a: DGFrobeniusAlgebra, prop, J, cycle: GraphChain) -> Fraction:
    """b_{K + delta K}(cycle) - b_K(cycle); zero because the change is a coboundary."""
    if not is_cycle(cycle):
        raise ValidationError("input chain is not a cycle")
    K = prop.K if isinstance(prop, Propagator) else prop
    dK = variation(a, J)
    K2 = _add(K, dK)
    return evaluate_chain_cochain(K2, a, cycle) - evaluate_chain_cochain(K, a, cycle)


def random_variation(a: DGFrobeniusAlgebra, rng, low: int = -3, high: int = 3) -> list[list[Fraction]]:
    """A random J obeying J_PQ = (-1)^{PQ} J_QP, supported where deg P + deg Q = p - 2."""
    n = a.dim
    J = [[Fraction(0)] * n for _ in range(n)]
    for P in range(n):
        for Q in range(P, n):
            if a.degrees[P] + a.degrees[Q] != a.p - 2:
                continue
            v = Fraction(rng.randint(low, high))
            if P == Q and a.degrees[P] % 2:
                continue
            J[P][Q] = v
            J[Q][P] = _sign(a.degrees[P] * a.degrees[Q]) * v
    return J


def partition_function(a: DGFrobeniusAlgebra, prop, cycle: GraphChain) -> Fraction:
    """Z = sum over classes of b_Gamma times the cycle coefficient."""
    if not is_cycle(cycle):
        raise ValidationError("input chain is not a cycle")
    return evaluate_chain_cochain(prop, a, cycle)


def cochain_values(prop, a: DGFrobeniusAlgebra, classes: Sequence[GraphClass]) -> dict:
    return {cls: evaluate_cochain(prop, a, cls) for cls in classes}
