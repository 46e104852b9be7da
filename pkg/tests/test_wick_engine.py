import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bvgraph import wick_engine as we
from bvgraph.errors import CapExceededError, ValidationError
from bvgraph.graded_poly import Generator, GradedPoly
from bvgraph.graph_complex import graph
from oracles import brute_automorphisms, double_factorial

x1, x2 = Generator("x1", 0), Generator("x2", 0)


def kernel2():
    return we.QuadraticKernel.from_quadratic_form([x1, x2], [[2, 1], [1, 2]])


@given(st.integers(0, 10))
def test_matching_counts(n):
    assert we.count_matchings(n) == sum(1 for _ in we.perfect_matchings(range(n)))
    if n % 2 == 0:
        assert we.count_matchings(n) == double_factorial(n - 1)


def test_moment_with_numeric_alpha():
    k = we.QuadraticKernel.from_quadratic_form([x1], [[1]], alpha=3)
    assert we.gaussian_moment([0, 0, 0, 0], k) == Fraction(3, 9)
    assert we.gaussian_moment([0, 0, 0], k) == 0


def test_isserlis_two_dimensional():
    k = kernel2()
    inv = [[Fraction(2, 3), Fraction(-1, 3)], [Fraction(-1, 3), Fraction(2, 3)]]
    a, b = inv[0][0], inv[0][1]
    # <x1 x1 x1 x2> = 3 <x1 x1><x1 x2>
    assert we.gaussian_moment([0, 0, 0, 1], k) == 3 * a * b
    assert we.gaussian_moment([0, 1, 0, 1], k) == a * inv[1][1] + 2 * b * b


@pytest.mark.parametrize("method", ["matchings", "recursive"])
def test_methods_agree(method):
    rng = random.Random(4)
    k = kernel2()
    for _ in range(10):
        p = GradedPoly()
        for _ in range(3):
            t = GradedPoly.const(rng.randint(-3, 3))
            for _ in range(rng.randint(0, 6)):
                t = t * GradedPoly.gen(rng.choice([x1, x2]))
            p = p + t
        assert we.correlator([p], k, method=method) == we.correlator([p], k, method="matchings")


def test_diagram_tables():
    k = we.QuadraticKernel([x1], [[1]])
    v = GradedPoly.gen(x1, 4)
    diags = we.diagram_expansion([v, v], k, [[0, 1]])
    assert sum(d.multiplicity for d in diags) == 105
    for d in diags:
        P, V, L = d.symmetry
        assert d.inverse_aut == Fraction(1, P * V * L)
        assert V == brute_automorphisms(d.graph.n, d.graph.edges)


def test_resum_matches_correlator_random():
    rng = random.Random(9)
    k = kernel2()
    for _ in range(6):
        vs = []
        for _ in range(rng.randint(1, 3)):
            order = rng.randint(1, 4)
            p = GradedPoly()
            for _ in range(2):
                t = GradedPoly.const(rng.randint(1, 3))
                for _ in range(order):
                    t = t * GradedPoly.gen(rng.choice([x1, x2]))
                p = p + t
            vs.append(p)
        direct = we.correlator(vs, k)
        summed = we.resum(we.diagram_expansion(vs, k), vs)
        assert GradedPoly.lift(direct) == GradedPoly.lift(summed)


def test_symmetry_factor_loops_and_multi_edges():
    assert we.symmetry_factor(graph(1, (1, 1), (1, 1))) == (2, 1, 4)
    assert we.symmetry_factor(graph(2, (1, 2), (1, 2), (1, 2))) == (6, 2, 1)


def test_caps_and_validation():
    k = we.QuadraticKernel([x1], [[1]])
    with pytest.raises(CapExceededError):
        we.correlator([GradedPoly.gen(x1, 18)], k)
    with pytest.raises(CapExceededError):
        we.correlator([GradedPoly.gen(x1, 6)], k, max_legs=4)
    with pytest.raises(ValidationError):
        we.QuadraticKernel([x1, x2], [[1, 2], [3, 1]])
    with pytest.raises(ValidationError):
        we.QuadraticKernel([Generator("t", 1)], [[1]])
    with pytest.raises(ValidationError):
        we.correlator([GradedPoly.gen(x1, 2)], k, method="magic")
    with pytest.raises(ValidationError):
        we.diagram_expansion([GradedPoly.gen(x1, 2) + GradedPoly.gen(x1)], k)


def test_lattice_correlator_values():
    q, p = Generator("x1", 0), Generator("x2", 0)
    qp = GradedPoly.gen(q) * GradedPoly.gen(p)
    qq, pp = GradedPoly.gen(q, 2), GradedPoly.gen(p, 2)
    omega = [[0, -1], [1, 0]]  # Omega^-1 has (q, p) entry 1
    t12 = GradedPoly.gen(Generator("t_1_2", 0), 2)
    assert we.lattice_correlator([qq, pp], [q, p], omega) == t12 * 2
    assert we.lattice_correlator([qp, qp], [q, p], omega) == -t12
    with pytest.raises(ValidationError):
        we.lattice_correlator([qp], [q, p], [[0, 1], [1, 0]])
