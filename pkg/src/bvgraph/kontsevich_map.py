"""Chevalley-Eilenberg chains of Hamiltonian vector fields and their graph correlators.

A chain ``(f_1, ..., f_l)`` of polynomial Hamiltonians on R^{2n|m} is mapped
to a graph polynomial by the Gaussian integral over N = l copies with
propagator ``<x_i^mu x_j^nu> = (Omega^-1)^{mu nu} t_ij`` (and the odd analogue
with eta^-1), each f_k entering as ``sum_i t_i f_k(x_i, psi_i)``.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import ValidationError
from .graded_poly import Generator, GradedPoly, derive, lift, mono_order, mono_parity
from .graph_complex import GraphChain, boundary_operator_poly, from_polynomial, t_vertex, to_polynomial
from .linalg import det, inverse
from .wick_engine import FactoredKernel, wick_expectation


def _matrix(M, name):
    try:
        return [[Fraction(v) for v in row] for row in M]
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be a matrix of rationals") from None


class SymplecticData:
    """Constant even symplectic structure Omega (plus optional symmetric eta on odd directions)."""

    def __init__(self, omega, eta=None):
        omega = _matrix(omega, "Omega")
        d = len(omega)
        if d == 0 or d % 2 or any(len(r) != d for r in omega):
            raise ValidationError("Omega must be a non-empty square matrix of even size")
        if any(omega[i][j] != -omega[j][i] for i in range(d) for j in range(d)):
            raise ValidationError("Omega must be antisymmetric")
        if det(omega) == 0:
            raise ValidationError("Omega is singular")
        eta = _matrix(eta, "eta") if eta is not None else []
        m = len(eta)
        if any(len(r) != m for r in eta):
            raise ValidationError("eta must be square")
        if any(eta[a][b] != eta[b][a] for a in range(m) for b in range(m)):
            raise ValidationError("eta must be symmetric")
        if m and det(eta) == 0:
            raise ValidationError("eta is singular")
        self.omega = omega
        self.eta = eta
        self.omega_inv = inverse(omega)
        self.eta_inv = inverse(eta) if m else []
        self.x = [Generator(f"x{mu}", 0) for mu in range(1, d + 1)]
        self.psi = [Generator(f"psi{a}", 1) for a in range(1, m + 1)]

    @classmethod
    def standard(cls, n: int, eta=None) -> "SymplecticData":
        """Omega = [[0, -1], [1, 0]] blocks, so that {x1, x2} = 1."""
        d = 2 * n
        omega = [[0] * d for _ in range(d)]
        for k in range(n):
            omega[2 * k][2 * k + 1] = -1
            omega[2 * k + 1][2 * k] = 1
        return cls(omega, eta)

    @classmethod
    def odd_only(cls, eta) -> "SymplecticData":
        obj = cls.__new__(cls)
        eta = _matrix(eta, "eta")
        m = len(eta)
        if m == 0 or any(len(r) != m for r in eta):
            raise ValidationError("eta must be a non-empty square matrix")
        if any(eta[a][b] != eta[b][a] for a in range(m) for b in range(m)) or det(eta) == 0:
            raise ValidationError("eta must be symmetric and invertible")
        obj.omega = obj.omega_inv = []
        obj.eta = eta
        obj.eta_inv = inverse(eta)
        obj.x = []
        obj.psi = [Generator(f"psi{a}", 1) for a in range(1, m + 1)]
        return obj

    @property
    def dim(self) -> tuple[int, int]:
        return len(self.x), len(self.psi)

    @property
    def registry(self) -> dict:
        return {g.name: g for g in self.x + self.psi}

    def coords(self) -> list[Generator]:
        return self.x + self.psi

    def check_poly(self, f) -> GradedPoly:
        f = lift(f)
        stray = f.generators() - set(self.coords())
        if stray:
            names = ", ".join(sorted(g.name for g in stray))
            raise ValidationError(f"polynomial uses generators outside the phase space: {names}")
        return f


def _right_odd_sign(f: GradedPoly) -> int:
    par = f.parity()
    return -1 if (par + 1) % 2 else 1


def poisson(f, g, data: SymplecticData) -> GradedPoly:
    """{f, g} = d_mu f (Omega^-1)^{mu nu} d_nu g + (f d<-_a) (eta^-1)^{ab} (d_b g)."""
    f, g = lift(f), lift(g)
    out = GradedPoly()
    d = len(data.x)
    if d:
        dg = [derive(g, x) for x in data.x]
        for mu in range(d):
            df = derive(f, data.x[mu])
            if not df:
                continue
            acc = GradedPoly()
            for nu in range(d):
                w = data.omega_inv[mu][nu]
                if w and dg[nu]:
                    acc = acc + dg[nu] * w
            out = out + df * acc
    if data.psi:
        dg = [derive(g, p) for p in data.psi]
        for fp in f.parity_parts().values():
            s = _right_odd_sign(fp)
            for a, pa in enumerate(data.psi):
                df = derive(fp, pa)
                if not df:
                    continue
                acc = GradedPoly()
                for b in range(len(data.psi)):
                    w = data.eta_inv[a][b]
                    if w and dg[b]:
                        acc = acc + dg[b] * w
                out = out + df * acc * s
    return out


@dataclass(frozen=True, eq=False)
class CEChain:
    data: SymplecticData
    generators: tuple = field(default_factory=tuple)

    def __post_init__(self):
        gens = tuple(self.data.check_poly(f) for f in self.generators)
        for k, f in enumerate(gens):
            if f and min(f.orders()) < 2:
                raise ValidationError(f"generator {k + 1} has terms below quadratic order")
        object.__setattr__(self, "generators", gens)

    def __len__(self):
        return len(self.generators)

    def parities(self) -> list[int]:
        out = []
        for k, f in enumerate(self.generators):
            p = f.parity()
            if p is None and f:
                raise ValidationError(f"generator {k + 1} has mixed parity")
            out.append(p or 0)
        return out

    def split_parity(self) -> list["CEChain"]:
        """Multilinear expansion into chains with parity-homogeneous entries."""
        parts = [list(f.parity_parts().values()) or [GradedPoly()] for f in self.generators]
        return [CEChain(self.data, combo) for combo in itertools.product(*parts)]


def _sign(k: int) -> int:
    return -1 if k % 2 else 1


def koszul_pair_sign(parities: Sequence[int], i: int, j: int) -> int:
    """(-1)^{s_ij} for moving entries i < j (0-based) to the front, shifted degrees."""
    si = parities[i] + 1
    sj = parities[j] + 1
    before_i = sum(p + 1 for p in parities[:i])
    before_j = sum(p + 1 for p in parities[:j])
    return _sign(si * before_i + sj * before_j + si * sj)


def ce_boundary(c: CEChain) -> tuple[list[tuple[Fraction, CEChain]], list[str]]:
    """CE boundary as a list of (coefficient, chain), plus notes on discarded constants."""
    terms: list[tuple[Fraction, CEChain]] = []
    notes: list[str] = []
    for part in c.split_parity():
        gens = part.generators
        par = part.parities()
        for i in range(len(gens)):
            for j in range(i + 1, len(gens)):
                br = poisson(gens[i], gens[j], c.data)
                if not br:
                    continue
                const = br.constant_term()
                if const:
                    notes.append(f"dropped constant {const} from {{f{i + 1}, f{j + 1}}}")
                    br = br.filter(lambda m: m != ())
                    if not br:
                        continue
                coeff = koszul_pair_sign(par, i, j) * _sign(par[i])
                rest = [g for k, g in enumerate(gens) if k not in (i, j)]
                terms.append((Fraction(coeff), _raw_chain(c.data, [br] + rest)))
    return terms, notes


def _raw_chain(data, gens) -> CEChain:
    obj = CEChain.__new__(CEChain)
    object.__setattr__(obj, "data", data)
    object.__setattr__(obj, "generators", tuple(lift(g) for g in gens))
    return obj


def _shifted_parity(mono) -> int:
    return (mono_parity(mono) + 1) % 2


def _mono_key(m):
    return (mono_order(m), tuple((g.key, e) for g, e in m))


def normal_form(terms: Sequence[tuple]) -> dict:
    """Expand a formal sum of chains into graded-antisymmetric basis tensors.

    Each chain is expanded multilinearly into monomials; entries are sorted
    with the Koszul sign of their shifted parities.  The result maps sorted
    monomial tuples to coefficients; it is empty exactly when the sum is 0.
    """
    out: dict = {}
    for coeff, chain in terms:
        lists = [list(f.terms.items()) for f in chain.generators]
        for combo in itertools.product(*lists):
            c = Fraction(coeff)
            monos = []
            for m, v in combo:
                c *= v
                monos.append(m)
            order = sorted(range(len(monos)), key=lambda k: _mono_key(monos[k]))
            sign = 1
            for a in range(len(order)):
                for b in range(a + 1, len(order)):
                    if order[a] > order[b] and _shifted_parity(monos[order[a]]) and _shifted_parity(monos[order[b]]):
                        sign = -sign
            key = tuple(monos[k] for k in order)
            if any(key[a] == key[a + 1] and _shifted_parity(key[a]) for a in range(len(key) - 1)):
                continue
            v = out.get(key, 0) + sign * c
            if v:
                out[key] = v
            else:
                out.pop(key)
    return out


def ce_boundary_squared(c: CEChain) -> dict:
    """Normal form of the boundary of the boundary (empty when it vanishes)."""
    first, _ = ce_boundary(c)
    second = []
    for coeff, ch in first:
        if len(ch) < 2:
            continue
        terms, _ = ce_boundary(ch)
        second.extend((coeff * k, t) for k, t in terms)
    return normal_form(second)


def lattice_copies(data: SymplecticData, N: int):
    xs = [[Generator(f"x_{i}_{mu}", 0) for mu in range(1, len(data.x) + 1)] for i in range(1, N + 1)]
    ps = [[Generator(f"psi_{i}_{a}", 1) for a in range(1, len(data.psi) + 1)] for i in range(1, N + 1)]
    return xs, ps


def evaluate_chain(c: CEChain, n_copies: int | None = None) -> GradedPoly:
    """<(f_1, ..., f_l)>: the graph polynomial of the chain (N = l by default)."""
    data = c.data
    N = len(c) if n_copies is None else n_copies
    if N < len(c):
        raise ValidationError("need at least as many copies as chain entries")
    if not len(c):
        return GradedPoly.const(1)
    xs, ps = lattice_copies(data, N)
    placed = []
    for f in c.generators:
        o = GradedPoly()
        for i in range(N):
            bind = {g: GradedPoly.gen(h) for g, h in zip(data.x, xs[i])}
            bind.update({g: GradedPoly.gen(h) for g, h in zip(data.psi, ps[i])})
            o = o + GradedPoly.gen(t_vertex(i + 1)) * f.substitute(bind)
        placed.append(o)
    prod = placed[0]
    for o in placed[1:]:
        prod = prod * o
        if not prod:
            return GradedPoly()
    kernel = FactoredKernel(data.omega_inv, xs, data.eta_inv, ps)
    return lift(wick_expectation(prod, kernel, max_legs=10 ** 6))


def evaluate_sum(terms: Sequence[tuple], n_copies: int) -> GradedPoly:
    out = GradedPoly()
    for coeff, ch in terms:
        out = out + evaluate_chain(ch, n_copies) * coeff
    return out


@dataclass(frozen=True)
class HomomorphismResult:
    lhs: GradedPoly
    rhs: GradedPoly
    equal: bool
    notes: tuple = ()


def homomorphism_check(c: CEChain) -> HomomorphismResult:
    """Compare <boundary_CE c> with the operator-form graph boundary of <c>."""
    l = len(c)
    terms, notes = ce_boundary(c)
    lhs = evaluate_sum(terms, l)
    base = evaluate_chain(c)
    rhs = boundary_operator_poly(base, N=l, l=l) if base else GradedPoly()
    return HomomorphismResult(lhs, rhs, lhs == rhs, tuple(notes))


def chain_to_graphs(c: CEChain) -> GraphChain:
    return from_polynomial(evaluate_chain(c))


def structure_function(structure, data: SymplecticData) -> GradedPoly:
    """f = (1/3!) f_abc psi^a psi^b psi^c with indices lowered by eta."""
    m = len(data.psi)
    f = GradedPoly()
    for a, b, cc in itertools.product(range(m), repeat=3):
        v = Fraction(structure[a][b][cc])
        if v:
            f = f + GradedPoly.gen(data.psi[a]) * GradedPoly.gen(data.psi[b]) * GradedPoly.gen(data.psi[cc]) * v
    return f / 6


def check_structure_constants(structure, eta) -> None:
    """Reject non-antisymmetric data or Jacobi failures (naming the triple)."""
    m = len(eta)
    st = [[[Fraction(structure[a][b][c]) for c in range(m)] for b in range(m)] for a in range(m)]
    for a, b, c in itertools.product(range(m), repeat=3):
        v = st[a][b][c]
        if st[b][a][c] != -v or st[a][c][b] != -v:
            raise ValidationError(f"structure constants not totally antisymmetric at {(a + 1, b + 1, c + 1)}")
    eta_inv = inverse(eta)
    for a, b, c, d in itertools.product(range(m), repeat=4):
        # f_ab^e f_ecd + cyclic(b, c, d) with indices raised by eta^-1
        total = Fraction(0)
        for (x, y, z) in ((b, c, d), (c, d, b), (d, b, c)):
            for e, g in itertools.product(range(m), repeat=2):
                w = eta_inv[e][g]
                if w:
                    total += st[a][x][e] * w * st[g][y][z]
        if total:
            raise ValidationError(f"Jacobi identity fails for the triple {(b + 1, c + 1, d + 1)} (a={a + 1})")


def lie_algebra_cycle(structure, eta, k: int) -> GraphChain:
    """Graph chain of (f, ..., f) with k entries for f = (1/3!) f_abc psi^a psi^b psi^c."""
    if k < 1 or (3 * k) % 2:
        raise ValidationError("need k with 3k even")
    check_structure_constants(structure, eta)
    data = SymplecticData.odd_only(eta)
    f = structure_function(structure, data)
    if poisson(f, f, data):
        raise ValidationError("{f, f} != 0: structure constants do not define a Lie algebra")
    if not f:
        return GraphChain()
    p = evaluate_chain(CEChain(data, (f,) * k))
    chain = from_polynomial(p)
    if to_polynomial(chain) != p:
        raise ValidationError("correlator is not in the span of graph polynomials")
    return chain


def su2_structure() -> list:
    eps = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for (a, b, c), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
                         (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[a][b][c] = s
    return eps


def random_hamiltonian(data: SymplecticData, rng: random.Random, min_order: int = 2,
                       max_order: int = 4, n_terms: int = 3, parity: int | None = None) -> GradedPoly:
    coords = data.coords()
    out = GradedPoly()
    tries = 0
    while not out and tries < 100:
        tries += 1
        for _ in range(n_terms):
            order = rng.randint(min_order, max_order)
            term = GradedPoly.const(rng.choice([-3, -2, -1, 1, 2, 3]))
            for _ in range(order):
                term = term * GradedPoly.gen(rng.choice(coords))
            if parity is not None and term and term.parity() != parity:
                continue
            out = out + term
    return out


def random_chain(data: SymplecticData, rng: random.Random, length: int, **kw) -> CEChain:
    return CEChain(data, tuple(random_hamiltonian(data, rng, **kw) for _ in range(length)))
