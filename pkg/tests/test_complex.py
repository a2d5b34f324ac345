import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markedph.complex import build_filtered_complex, restrict_complex_counts, simplex_count
from markedph.errors import BudgetExceeded, SimplicityError
from markedph.kappa import KAPPA_KINDS, FiltrationFunction, MarkedPointSet
from markedph.processes import IIDRadius, ProcessSpec, UniformDist, sample_marked_process
from markedph.windows import Box, Cube

from _cases import random_instance
from _oracles import brute_force_complex

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


@pytest.fixture
def square_complex():
    xi = MarkedPointSet(SQUARE, np.zeros(4), "radius")
    return build_filtered_complex(xi, FiltrationFunction("cech_radii", radius_cap=0.0), 2, 1.0)


def test_unit_square_simplices(square_complex):
    cx = square_complex
    cx.validate()
    by_dim = {q: sorted(s.birth for s in cx if s.dim == q) for q in range(4)}
    assert by_dim[0] == [0.0] * 4
    assert by_dim[1][:4] == [0.5] * 4
    assert by_dim[1][4:] == pytest.approx([math.sqrt(2) / 2] * 2, abs=1e-12)
    assert by_dim[2] == pytest.approx([math.sqrt(2) / 2] * 4, abs=1e-12)
    assert by_dim[3] == []


def test_simplex_counts(square_complex):
    assert simplex_count(square_complex, 1, 0.6) == 4
    assert simplex_count(square_complex, 0, 0.0) == 4
    assert simplex_count(square_complex, 2, 0.7) == 0
    with pytest.raises(ValueError):
        simplex_count(square_complex, 1, 1.5)
    with pytest.raises(ValueError):
        simplex_count(square_complex, 3, 0.5)


def test_pruning_far_points_and_single_point():
    k = FiltrationFunction("cech_radii", radius_cap=0.0)
    far = build_filtered_complex(MarkedPointSet([[0.0, 0.0], [100.0, 0.0]], [0, 0], "radius"), k, 2, 1.0)
    assert [s.dim for s in far] == [0, 0]
    one = build_filtered_complex(MarkedPointSet([[3.0, 1.0]], [0], "radius"), k, 2, 1.0)
    assert [(s.vertices, s.birth) for s in one] == [((0,), 0.0)]


def test_argument_errors():
    xi = MarkedPointSet(SQUARE, np.zeros(4), "radius")
    k = FiltrationFunction("cech_radii", radius_cap=0.0)
    with pytest.raises(ValueError):
        build_filtered_complex(xi, k, -1, 1.0)
    with pytest.raises(ValueError):
        build_filtered_complex(xi, k, 2, 0.0)
    with pytest.raises(SimplicityError):
        MarkedPointSet(np.vstack([SQUARE, SQUARE[:1]]), np.zeros(5), "radius")


def test_budget_exceeded():
    xi = MarkedPointSet(SQUARE, np.zeros(4), "radius")
    with pytest.raises(BudgetExceeded):
        build_filtered_complex(xi, FiltrationFunction("cech_radii"), 2, 1.0, max_simplices=6)


def test_dump_format(square_complex):
    lines = square_complex.dumps().splitlines()
    assert lines[0] == "0,0.0,0"
    assert lines[4] == "1,0.5,0 1"
    assert lines[-1].startswith("2,0.7071067811865476,")
    assert len(lines) == 14


@pytest.mark.parametrize("kind", KAPPA_KINDS)
def test_pruning_soundness_against_brute_force(kind):
    rng = np.random.default_rng(list(KAPPA_KINDS).index(kind))
    for _ in range(6):
        n = int(rng.integers(3, 9))
        kappa, xi = random_instance(kind, 2, n, rng, spread=1.5, shape_mode="box" if kind == "cech_shape" else None)
        t_max = float(rng.uniform(0.3, 1.5))
        cx = build_filtered_complex(xi, kappa, 2, t_max)
        cx.validate()
        ref = brute_force_complex(kappa, xi.positions, xi.marks, 2, t_max)
        got = {s.vertices: s.birth for s in cx}
        assert set(got) == set(ref)
        for key in ref:
            assert got[key] == pytest.approx(ref[key], abs=1e-12)


def test_pruning_soundness_mixed_shapes():
    rng = np.random.default_rng(11)
    for _ in range(3):
        kappa, xi = random_instance("cech_shape", 2, 6, rng, spread=1.0, shape_mode="mixed")
        cx = build_filtered_complex(xi, kappa, 2, 1.0)
        ref = brute_force_complex(kappa, xi.positions, xi.marks, 2, 1.0)
        got = {s.vertices: s.birth for s in cx}
        assert set(got) == set(ref)
        for key in ref:
            assert got[key] == pytest.approx(ref[key], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(KAPPA_KINDS), st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_filtration_invariants(kind, seed, d):
    rng = np.random.default_rng(seed)
    kappa, xi = random_instance(kind, d, int(rng.integers(1, 10)), rng, spread=1.5,
                                shape_mode=None if d > 1 else "ball")
    t_max = 1.0
    cx = build_filtered_complex(xi, kappa, 2, t_max)
    cx.validate()
    # nesting: level sets grow with t
    levels = [cx.level(t) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert all(a <= b for a, b in zip(levels, levels[1:]))
    # diameter bound
    for s in cx:
        if s.dim >= 1:
            p = xi.positions[list(s.vertices)]
            diam = max(np.linalg.norm(p[i] - p[j]) for i in range(len(p)) for j in range(i + 1, len(p)))
            assert diam <= kappa.rho(s.birth) + 1e-9


def test_superadditivity_over_disjoint_regions():
    spec = ProcessSpec(1.0, IIDRadius(UniformDist(0.0, 0.5)), seed=5)
    kappa = FiltrationFunction("cech_radii", radius_cap=0.5)
    rng = np.random.default_rng(0)
    for i in range(20):
        phi = sample_marked_process(spec, Cube(8.0, 2), seed=i).points
        cut = float(rng.uniform(-3, 3))
        a = Box((-4.0, -4.0), (cut, 4.0))
        b = Box((cut, -4.0), (4.0, 4.0))
        for q in (0, 1, 2):
            t = float(rng.uniform(0, 0.6))
            both = restrict_complex_counts(phi, Cube(8.0, 2), kappa, q, t)
            assert restrict_complex_counts(phi, a, kappa, q, t) + restrict_complex_counts(phi, b, kappa, q, t) <= both


def test_restrict_counts_trivial_regions():
    xi = MarkedPointSet(SQUARE, np.zeros(4), "radius")
    k = FiltrationFunction("cech_radii")
    assert restrict_complex_counts(xi, Box((-1, -1), (2, 2)), k, 1, 0.6) == 4
    assert restrict_complex_counts(xi, Box((5, 5), (6, 6)), k, 1, 0.6) == 0
