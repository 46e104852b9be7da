import random
from fractions import Fraction

import pytest

from bvgraph import graph_complex as gc
from bvgraph import kontsevich_map as km
from bvgraph.errors import ValidationError
from bvgraph.graded_poly import GradedPoly
from oracles import antisymmetrize, tensor_X, tensor_Y, tensor_Z

TETRA = gc.graph(4, (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (4, 3))
DOUBLE_SQUARE = gc.graph(4, (1, 2), (1, 2), (1, 4), (2, 3), (4, 3), (4, 3))
G8 = gc.graph(3, (1, 2), (1, 3), (1, 3), (2, 3), (2, 3))
EYE3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]


def gen(data, name):
    return GradedPoly.gen(data.registry[name])


def super_data():
    return km.SymplecticData.standard(1, [[1, 0], [0, 1]])


def nonzero_super_chains(count, seed=3):
    data = super_data()
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        orders = [rng.choice([3, 3, 4]) for _ in range(4)]
        if sum(orders) % 2:
            continue
        c = km.CEChain(data, tuple(km.random_hamiltonian(data, rng, o, o, n_terms=4, parity=rng.choice([0, 0, 1]))
                                   for o in orders))
        r = km.homomorphism_check(c)
        if r.lhs or r.rhs:
            out.append(c)
    return out


class TestSymplecticData:
    def test_standard_bracket(self):
        d = km.SymplecticData.standard(2)
        assert km.poisson(gen(d, "x1"), gen(d, "x2"), d) == GradedPoly.const(1)
        assert km.poisson(gen(d, "x3"), gen(d, "x4"), d) == GradedPoly.const(1)
        assert not km.poisson(gen(d, "x1"), gen(d, "x3"), d)

    def test_odd_bracket_symmetric_on_generators(self):
        d = super_data()
        p1, p2 = gen(d, "psi1"), gen(d, "psi2")
        assert km.poisson(p1, p2, d) == km.poisson(p2, p1, d)
        assert km.poisson(p1, p1, d) and not km.poisson(p1, p2, d)

    @pytest.mark.parametrize("omega,eta", [
        ([[0, 1], [1, 0]], None),
        ([[0, 0], [0, 0]], None),
        ([[0, 1, 0], [-1, 0, 0], [0, 0, 0]], None),
        ([[0, -1], [1, 0]], [[1, 2], [0, 1]]),
        ([[0, -1], [1, 0]], [[0, 0], [0, 0]]),
    ])
    def test_rejects_bad_forms(self, omega, eta):
        with pytest.raises(ValidationError):
            km.SymplecticData(omega, eta)

    def test_graded_jacobi(self):
        d = super_data()
        rng = random.Random(6)
        for _ in range(15):
            f, g, h = (km.random_hamiltonian(d, rng, 1, 3, parity=rng.choice([0, 1])) for _ in range(3))
            F, G = f.parity() or 0, g.parity() or 0
            sign = -1 if (F * G) % 2 else 1
            B = lambda a, b: km.poisson(a, b, d)  # noqa: E731
            assert B(f, g) == B(g, f) * -sign
            assert B(f, B(g, h)) == B(B(f, g), h) + B(g, B(f, h)) * sign


class TestChains:
    def test_rejects_low_order_terms(self):
        d = km.SymplecticData.standard(1)
        with pytest.raises(ValidationError):
            km.CEChain(d, (gen(d, "x1"),))

    def test_mixed_parity(self):
        d = super_data()
        c = km.CEChain(d, (gen(d, "x1") * gen(d, "x2") + gen(d, "x1") * gen(d, "psi1"),))
        with pytest.raises(ValidationError):
            c.parities()
        assert len(c.split_parity()) == 2

    @pytest.mark.parametrize("seed", range(4))
    def test_boundary_squared_zero(self, seed):
        d = super_data()
        c = km.random_chain(d, random.Random(seed), 4, min_order=2, max_order=3, n_terms=3)
        assert km.ce_boundary_squared(c) == {}

    def test_boundary_squared_has_teeth(self, monkeypatch):
        monkeypatch.setattr(km, "koszul_pair_sign", lambda p, i, j: 1)
        d = super_data()
        c = km.random_chain(d, random.Random(1), 4, min_order=2, max_order=3, n_terms=3)
        assert km.ce_boundary_squared(c) != {}

    def test_boundary_of_three_quadratics(self):
        d = km.SymplecticData.standard(1)
        x1, x2 = gen(d, "x1"), gen(d, "x2")
        terms, notes = km.ce_boundary(km.CEChain(d, (x1 * x1, x2 * x2, x1 * x2)))
        got = [(c, [g.to_text() for g in ch.generators]) for c, ch in terms]
        assert got == [(1, ["4*x1*x2", "x1*x2"]), (-1, ["2*x1^2", "x2^2"]), (1, ["-2*x2^2", "x1^2"])]
        assert notes == []


class TestHomomorphism:
    def test_cubics_on_the_plane(self):
        d = km.SymplecticData.standard(1)
        rng = random.Random(11)
        v = [km.random_hamiltonian(d, rng, 3, 3, 4) for _ in range(4)]
        c = km.CEChain(d, tuple(v))
        res = km.homomorphism_check(c)
        P = km.evaluate_chain(c)
        assert res.equal
        # frozen from the tensor oracle
        assert gc.extract_coefficient(TETRA, P) == -576
        assert gc.extract_coefficient(DOUBLE_SQUARE, P) == 432
        assert gc.extract_coefficient(G8, res.lhs) == 4320
        assert gc.extract_coefficient(TETRA, P) == antisymmetrize(lambda *a: tensor_X(d, *a), v) / 24
        assert gc.extract_coefficient(DOUBLE_SQUARE, P) == antisymmetrize(lambda *a: tensor_Y(d, *a), v) / 16
        z = antisymmetrize(lambda *a: tensor_Z(d, *a, bracket=lambda f, g: km.poisson(f, g, d)), v)
        assert gc.extract_coefficient(G8, res.lhs) == z / 16

    @pytest.mark.parametrize("n,orders", [(1, [3, 3, 3, 3]), (1, [2, 4, 2, 4]), (2, [4, 4, 2, 2]), (1, [3, 4, 3, 4])])
    def test_random_even(self, n, orders):
        d = km.SymplecticData.standard(n)
        rng = random.Random(sum(orders) + n)
        c = km.CEChain(d, tuple(km.random_hamiltonian(d, rng, o, o, n_terms=4) for o in orders))
        assert km.homomorphism_check(c).equal

    def test_super_chains(self):
        for c in nonzero_super_chains(3):
            assert km.homomorphism_check(c).equal

    @pytest.mark.parametrize("target", ["_right_odd_sign", "koszul_pair_sign"])
    def test_super_signs_are_pinned(self, monkeypatch, target):
        chains = nonzero_super_chains(3)
        original = getattr(km, target)
        if target == "_right_odd_sign":
            monkeypatch.setattr(km, target, lambda f: -original(f))
        else:
            monkeypatch.setattr(km, target, lambda p, i, j: 1)
        assert not all(km.homomorphism_check(c).equal for c in chains)

    def test_chain_to_graphs(self):
        d = km.SymplecticData.standard(1)
        x1, x2 = gen(d, "x1"), gen(d, "x2")
        g = km.chain_to_graphs(km.CEChain(d, (x1 ** 3, x2 ** 3)))
        (cls, coeff), = g.items()
        assert cls.canonical.edges == ((1, 2), (1, 2), (1, 2))
        assert coeff != 0


class TestLieCycles:
    def test_su2_theta(self):
        c = km.lie_algebra_cycle(km.su2_structure(), EYE3, 2)
        (cls, coeff), = c.items()
        assert cls.canonical.edges == ((1, 2), (1, 2), (1, 2)) and coeff == 1

    def test_su2_four_vertices(self):
        c = km.lie_algebra_cycle(km.su2_structure(), EYE3, 4)
        # both labelled graphs are minus their canonical classes
        assert gc.canonical_form(DOUBLE_SQUARE)[1] == gc.canonical_form(TETRA)[1] == -1
        want = (gc.GraphChain.of(gc.graph(4, (1, 2), (1, 2), (1, 2), (3, 4), (3, 4), (3, 4)), 3)
                + gc.GraphChain.of(DOUBLE_SQUARE, 18)
                + gc.GraphChain.of(TETRA, 6))
        assert c == want
        assert not gc.boundary(c)

    def test_su2_six_vertices_is_cycle(self):
        c = km.lie_algebra_cycle(km.su2_structure(), EYE3, 6)
        assert c and not gc.boundary(c)

    def test_structure_validation(self):
        bad = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
        bad[0][1][2] = 1
        with pytest.raises(ValidationError):
            km.check_structure_constants(bad, EYE3)
        with pytest.raises(ValidationError):
            km.lie_algebra_cycle(km.su2_structure(), EYE3, 3)
        # totally antisymmetric on R^5 but not Lie (in R^4 every such tensor is Lie)
        m = 5
        f = [[[0] * m for _ in range(m)] for _ in range(m)]
        for (a, b, c), s in {(0, 1, 2): 1, (0, 3, 4): 1}.items():
            for (p, q, r), t in {(a, b, c): 1, (b, c, a): 1, (c, a, b): 1,
                                 (b, a, c): -1, (a, c, b): -1, (c, b, a): -1}.items():
                f[p][q][r] = s * t
        with pytest.raises(ValidationError, match="Jacobi"):
            km.check_structure_constants(f, [[int(i == j) for j in range(m)] for i in range(m)])
