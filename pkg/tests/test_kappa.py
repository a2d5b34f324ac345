import itertools
import math
import zlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markedph.errors import ConfigurationError, SimplicityError
from markedph.kappa import (
    KAPPA_KINDS,
    Box,
    EuclideanBall,
    FiltrationFunction,
    GrowthFn,
    GrowthFunction,
    L1Ball,
    MarkedPoint,
    MarkedPointSet,
    Radius,
    Shape,
    eval_cech_growth,
    eval_cech_radii,
    eval_cech_shape,
    eval_rips_growth,
    eval_rips_radii,
    rho,
)

from _cases import GROWTH_FAMILY, random_instance
from _oracles import (
    cech_objective,
    cech_radii_reference,
    dense_grid_minimum,
    growth_inverse_closed_form,
    interval_first_meet,
)

EPS = 1e-9


def pts(*items):
    return [MarkedPoint(tuple(map(float, x)), m) for x, m in items]


# --- worked values ------------------------------------------------------


def test_cech_radii_values():
    assert eval_cech_radii(pts(((0, 0), Radius(0)))) == 0.0
    assert eval_cech_radii(pts(((0, 0), Radius(1)), ((4, 0), Radius(1)))) == pytest.approx(1.0, abs=1e-12)
    tri = pts(((0, 0), Radius(0)), ((2, 0), Radius(0)), ((1, math.sqrt(3)), Radius(0)))
    assert eval_cech_radii(tri) == pytest.approx(2 / math.sqrt(3), abs=1e-12)
    assert eval_cech_radii(pts(((0, 0), Radius(2)), ((1, 0), Radius(2)))) == 0.0


def test_cech_radii_values_against_grid():
    k = FiltrationFunction("cech_radii", radius_cap=1.0)
    for pos, r, expected in [
        (np.array([[0.0, 0], [4, 0]]), np.array([1.0, 1]), 1.0),
        (np.array([[0.0, 0], [2, 0], [1, math.sqrt(3)]]), np.zeros(3), 2 / math.sqrt(3)),
    ]:
        g, h, lip = dense_grid_minimum(cech_objective(k, pos, r), pos.min(0) - 1, pos.max(0) + 1)
        assert abs(g - expected) <= 2 * h * max(lip, 1.0)
        assert k.value(pos, r) == pytest.approx(expected, abs=1e-12)


def test_rips_radii_values():
    assert eval_rips_radii(pts(((0, 0), Radius(1)), ((4, 0), Radius(1)))) == 1.0
    assert eval_rips_radii(pts(((1, 2), Radius(0)))) == 0.0
    assert eval_rips_radii(pts(((0, 0), Radius(0)), ((3, 0), Radius(0)), ((0, 4), Radius(0)))) == 2.5


def test_growth_values():
    fam = (GrowthFunction.create("linear", c=1.0), GrowthFunction.create("linear", c=2.0))
    assert eval_cech_growth(pts(((0, 0), GrowthFn(0))), fam) == 0.0
    pair = pts(((0, 0), GrowthFn(0)), ((6, 0), GrowthFn(1)))
    assert eval_cech_growth(pair, fam) == pytest.approx(2.0, abs=1e-9)
    assert eval_rips_growth(pair, fam) == pytest.approx(2.0, abs=1e-9)
    assert eval_rips_growth(pts(((0, 0), GrowthFn(0))), fam) == 0.0
    tri = pts(((0, 0), GrowthFn(0)), ((6, 0), GrowthFn(1)), ((0, 8), GrowthFn(0)))
    assert eval_rips_growth(tri, fam) == pytest.approx(4.0, abs=1e-9)


def test_growth_collinear_triple_matches_interval_oracle():
    # |w| <= t and |12 - w| <= t force t >= 6, whatever the middle point does
    fam = (GrowthFunction.create("linear", c=1.0), GrowthFunction.create("linear", c=2.0))
    triple = pts(((0,), GrowthFn(0)), ((6,), GrowthFn(1)), ((12,), GrowthFn(0)))
    ref = interval_first_meet([0, 6, 12], [fam[0], fam[1], fam[0]])
    assert ref == pytest.approx(6.0, abs=1e-9)
    assert eval_cech_growth(triple, fam) == pytest.approx(ref, abs=1e-9)


def test_shape_values():
    sq = (Box((1.0, 1.0)),)
    assert eval_cech_shape(pts(((3, 1), Shape(0))), sq) == 0.0
    assert eval_cech_shape(pts(((0, 0), Shape(0)), ((4, 0), Shape(0))), sq) == pytest.approx(2.0, abs=1e-12)
    ball = (EuclideanBall(1.0),)
    assert eval_cech_shape(pts(((0, 0), Shape(0)), ((4, 0), Shape(0))), ball) == pytest.approx(2.0, abs=1e-12)


def test_rho_values():
    assert FiltrationFunction("cech_radii", radius_cap=0.5).rho(1.0) == 3.0
    sq = FiltrationFunction("cech_shape", shapes=(Box((1.0, 1.0)),))
    assert rho(sq, 1.0) == pytest.approx(4 * math.sqrt(2))
    for kind in ("cech_radii", "rips_radii"):
        assert FiltrationFunction(kind, radius_cap=0.0).rho(0.0) == 0.0
    with pytest.raises(ValueError):
        sq.rho(-1.0)


def test_growth_inverse_and_unreachable_radius():
    sat = GrowthFunction.create("saturating", b=0.0, a=1.0, tau=1.0)
    assert sat.inverse(0.5) == pytest.approx(math.log(2), abs=1e-10)
    assert sat.inverse(1.5) == math.inf
    fam = (sat,)
    far = pts(((0, 0), GrowthFn(0)), ((5, 0), GrowthFn(0)))
    assert eval_cech_growth(far, fam) == math.inf
    assert eval_rips_growth(far, fam) == math.inf


@pytest.mark.parametrize("g", GROWTH_FAMILY, ids=lambda g: g.name)
def test_bisection_inverse_matches_closed_form(g):
    for y in [0.0, 0.05, 0.3, 1.0, 2.9]:
        assert g.inverse(y) == pytest.approx(float(growth_inverse_closed_form(g, y)), abs=1e-10)


# --- validation ---------------------------------------------------------


def test_mark_kind_mismatch_is_configuration_error():
    with pytest.raises(ConfigurationError):
        eval_cech_growth(pts(((0, 0), Radius(0.1))), GROWTH_FAMILY)
    k = FiltrationFunction("cech_radii", radius_cap=0.2)
    with pytest.raises(ConfigurationError):
        k(pts(((0, 0), Radius(0.5))))
    with pytest.raises(ConfigurationError):
        FiltrationFunction("cech_shape", shapes=(EuclideanBall(1.0),))(pts(((0, 0), Shape(3))))
    with pytest.raises(ConfigurationError):
        FiltrationFunction("nope")


def test_simplicity_enforced():
    with pytest.raises(SimplicityError, match="simplicity violated"):
        MarkedPointSet([[0.0, 1.0], [0.0, 1.0]], [0.0, 0.0], "radius")


def test_point_set_roundtrip_and_immutability():
    xi = MarkedPointSet([[0.0, 1.0], [2.0, 3.0]], [0.1, 0.2], "radius")
    assert MarkedPointSet.from_points(list(xi)) == xi
    with pytest.raises(ValueError):
        xi.positions[0, 0] = 5.0
    assert xi.translated([1, 1]).positions[1].tolist() == [3.0, 4.0]


def test_filtration_function_dict_roundtrip():
    k = FiltrationFunction("cech_shape", shapes=(Box((1.0, 2.0)), EuclideanBall(0.5), L1Ball(2.0)))
    assert FiltrationFunction.from_dict(k.to_dict()) == k
    g = FiltrationFunction("rips_growth", growth=GROWTH_FAMILY)
    assert FiltrationFunction.from_dict(g.to_dict()) == g


def test_gauge_homogeneity():
    rng = np.random.default_rng(0)
    for s in (Box((0.5, 2.0)), EuclideanBall(0.7), L1Ball(1.3)):
        z = rng.normal(size=(20, 2))
        lam = rng.uniform(0, 5, size=20)
        assert s.gauge(np.zeros(2)) == 0.0
        np.testing.assert_allclose(s.gauge(z * lam[:, None]), lam * s.gauge(z), rtol=1e-12)


def test_values_batch_matches_single():
    rng = np.random.default_rng(1)
    for kind in KAPPA_KINDS:
        k, xi = random_instance(kind, 2, 7, rng)
        sims = np.array(list(itertools.combinations(range(7), 3)))
        batch = k.values(xi.positions, xi.marks, sims)
        single = [k.value(xi.positions[s], xi.marks[s]) for s in sims]
        np.testing.assert_allclose(batch, single, atol=1e-12)


def test_cech_radii_matches_generic_optimiser():
    rng = np.random.default_rng(2)
    k = FiltrationFunction("cech_radii", radius_cap=1.0)
    for _ in range(60):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(2, 6))
        p = rng.uniform(-2, 2, (n, d))
        r = rng.uniform(0, 1, n)
        assert k.value(p, r) == pytest.approx(cech_radii_reference(p, r), abs=1e-7)


@pytest.mark.parametrize("kind", ["cech_radii", "cech_growth", "cech_shape"])
def test_cech_kinds_match_dense_grid(kind):
    rng = np.random.default_rng(zlib.crc32(kind.encode()))
    for _ in range(15):
        n = int(rng.integers(2, 5))
        k, xi = random_instance(kind, 2, n, rng)
        g, h, lip = dense_grid_minimum(
            cech_objective(k, xi.positions, xi.marks), xi.positions.min(0) - 1, xi.positions.max(0) + 1
        )
        v = k(xi)
        # κ is an infimum: never above a grid value, and within the grid resolution of the grid minimum
        assert v <= g + EPS
        assert g - v <= 2 * h * max(lip, 1.0) + EPS


# --- axioms as properties ----------------------------------------------


@st.composite
def instances(draw, kinds=KAPPA_KINDS, max_n=6):
    kind = draw(st.sampled_from(kinds))
    d = draw(st.integers(1, 3))
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    kappa, xi = random_instance(kind, d, n, rng)
    return kappa, xi, rng


@settings(max_examples=60, deadline=None)
@given(instances())
def test_k1_monotone(inst):
    kappa, xi, rng = inst
    n = len(xi)
    sub = np.sort(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
    assert kappa.value(xi.positions[sub], xi.marks[sub]) <= kappa(xi) + EPS


@settings(max_examples=60, deadline=None)
@given(instances(), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_k2_translation_invariant(inst, a, b, c):
    kappa, xi, _ = inst
    shift = np.array([a, b, c])[: xi.dim]
    moved = xi.translated(shift)
    assert kappa(moved) == pytest.approx(kappa(xi), abs=EPS, rel=EPS)


@settings(max_examples=60, deadline=None)
@given(instances(max_n=2))
def test_k3_diameter_bound(inst):
    kappa, xi, _ = inst
    v = kappa(xi)
    dist = float(np.linalg.norm(xi.positions[0] - xi.positions[1]))
    assert dist <= kappa.rho(v) + EPS


@settings(max_examples=60, deadline=None)
@given(instances(kinds=("cech_radii",), max_n=2))
def test_pair_cech_equals_rips(inst):
    kappa, xi, _ = inst
    rips = FiltrationFunction("rips_radii", radius_cap=kappa.radius_cap)
    assert kappa(xi) == rips(xi)


@settings(max_examples=40, deadline=None)
@given(instances(kinds=("rips_radii", "rips_growth")))
def test_rips_is_max_over_pairs(inst):
    kappa, xi, _ = inst
    pairs = [kappa.value(xi.positions[[i, j]], xi.marks[[i, j]]) for i, j in itertools.combinations(range(len(xi)), 2)]
    assert kappa(xi) == pytest.approx(max(pairs), abs=1e-12)


def test_rips_dominates_half_cech():
    # every pair meets by the Rips time, so Čech <= the pairwise bound; Rips <= Čech
    rng = np.random.default_rng(4)
    for _ in range(50):
        k, xi = random_instance("cech_radii", 2, 4, rng)
        rips = FiltrationFunction("rips_radii", radius_cap=k.radius_cap)
        assert rips(xi) <= k(xi) + EPS
