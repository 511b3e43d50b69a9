import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fockspec.torus import (TWO_PI, TrigPoly, eval_trigpoly, integrate, linear_combination,
                            make_grid, wrap)


def random_poly(seed, nu, degree):
    rng = np.random.default_rng(seed)
    terms = []
    for k in np.ndindex(*([2 * degree + 1] * nu)):
        kk = tuple(int(x) - degree for x in k)
        terms.append((kk, float(rng.normal()), float(rng.normal())))
    return TrigPoly(nu, terms)


# -- make_grid ------------------------------------------------------------------------

def test_grid_1d_four_points():
    g = make_grid(1, 4)
    assert np.allclose(g.points[:, 0], [-np.pi / 2, 0.0, np.pi / 2, np.pi])
    assert g.weight == pytest.approx(np.pi / 2)


def test_grid_2d_two_points():
    g = make_grid(2, 2)
    assert g.size == 4
    assert g.weight == pytest.approx(np.pi**2)
    assert g.weights.sum() == pytest.approx(4 * np.pi**2)


def test_grid_3d_eight_points():
    g = make_grid(3, 8)
    assert g.size == 512
    assert g.weights.sum() == pytest.approx(TWO_PI**3, rel=1e-14)


@pytest.mark.parametrize("nu,n", [(0, 4), (1, 1), (2, 0), (-1, 3)])
def test_grid_rejects_degenerate(nu, n):
    with pytest.raises(ValueError):
        make_grid(nu, n)


@given(nu=st.integers(1, 3), n=st.integers(2, 9))
def test_grid_invariants(nu, n):
    g = make_grid(nu, n)
    assert g.points.shape == (n**nu, nu)
    assert np.all(g.points > -np.pi) and np.all(g.points <= np.pi + 1e-15)
    axis = np.unique(g.points[:, 0])
    assert len(axis) == n
    assert np.allclose(np.diff(axis), TWO_PI / n, rtol=0, atol=1e-13)
    assert g.weights.sum() == pytest.approx(TWO_PI**nu, rel=1e-13)
    assert len(np.unique(g.points, axis=0)) == n**nu


# -- integrate --------------------------------------------------------------------

def test_integrate_constant():
    g = make_grid(1, 4)
    assert integrate(g, np.ones(4)) == pytest.approx(TWO_PI)


def test_integrate_cos():
    g = make_grid(1, 4)
    assert abs(integrate(g, np.cos(g.points[:, 0]))) < 1e-15


def test_integrate_cos_squared():
    g = make_grid(1, 8)
    assert integrate(g, np.cos(g.points[:, 0]) ** 2) == pytest.approx(np.pi, rel=1e-14)


def test_integrate_length_mismatch():
    with pytest.raises(ValueError):
        integrate(make_grid(1, 4), np.ones(5))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), nu=st.integers(1, 3), degree=st.integers(0, 3))
def test_quadrature_exactness(seed, nu, degree):
    f = random_poly(seed, nu, degree)
    exact = f.integral()
    for n in (max(2, degree + 1), 2 * degree + 2):
        g = make_grid(nu, n)
        got = integrate(g, f(g.points))
        assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact), float(np.abs(f.cos).sum()))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), nu=st.integers(1, 2), degree=st.integers(0, 3))
def test_grid_refinement_consistency(seed, nu, degree):
    f = random_poly(seed, nu, degree)
    n = degree + 2
    a = integrate(make_grid(nu, n), f(make_grid(nu, n).points))
    b = integrate(make_grid(nu, 2 * n), f(make_grid(nu, 2 * n).points))
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), shift=st.integers(-7, 7))
def test_translation_invariance(seed, shift):
    f = random_poly(seed, 2, 2)
    g = make_grid(2, 8)
    a = np.array([shift, -2 * shift]) * TWO_PI / g.n
    base = integrate(g, f(g.points))
    moved = integrate(g, f(g.points + a))
    assert abs(base - moved) <= 1e-12 * max(1.0, abs(base))


# -- TrigPoly -----------------------------------------------------------------------

def test_eval_cos_axis():
    assert eval_trigpoly(TrigPoly.cos_axis(1, 0), [0.0]) == pytest.approx(1.0)


def test_eval_cos_sum_at_corner():
    f = linear_combination([TrigPoly.cos_axis(3, i) for i in range(3)], [1.0] * 3)
    assert eval_trigpoly(f, [np.pi, np.pi, np.pi]) == pytest.approx(-3.0)


def test_eval_zero():
    assert eval_trigpoly(TrigPoly.zero(2), [0.3, -1.2]) == 0.0


def test_eval_dimension_mismatch():
    with pytest.raises(ValueError):
        eval_trigpoly(TrigPoly.cos_axis(2, 0), [0.0])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_real_valued_and_degree(seed):
    f = random_poly(seed, 2, 2)
    x = np.random.default_rng(seed).uniform(-10, 10, (16, 2))
    v = f(x)
    assert np.isrealobj(v)
    assert f.degree == 2
    # periodicity
    assert np.allclose(f(x + TWO_PI), v, atol=1e-11)


def test_arithmetic_and_integrals():
    c = TrigPoly.cos_axis(2, 0)
    s = TrigPoly.sin_axis(2, 1)
    assert c.inner(c) == pytest.approx(2 * np.pi**2)
    assert c.inner(s) == pytest.approx(0.0, abs=1e-14)
    f = 2.0 - c + 3.0 * s
    x = np.array([[0.4, -1.1]])
    assert f(x)[0] == pytest.approx(2 - np.cos(0.4) + 3 * np.sin(-1.1))


def test_evenness():
    assert TrigPoly.cos_axis(2, 1).is_even()
    assert not TrigPoly.sin_axis(2, 1).is_even()


def test_wrap_into_half_open_cube():
    x = wrap([np.pi, -np.pi, 3 * np.pi + 0.5, 0.2])
    assert np.all(x > -np.pi) and np.all(x <= np.pi)
    assert x[0] == pytest.approx(np.pi) and x[1] == pytest.approx(np.pi)
    assert x[2] == pytest.approx(-np.pi + 0.5) and x[3] == pytest.approx(0.2)
