import numpy as np
import pytest

from brownflow import ensembles as en
from brownflow import hj_engine as hj
from brownflow import spectra as sp
from brownflow.errors import DomainError


def test_eigenvalues_identity():
    s = sp.eigenvalues(np.eye(3))
    assert np.allclose(sorted(s.eigenvalues.real), [1, 1, 1])
    assert np.max(np.abs(s.eigenvalues.imag)) < 1e-12


def test_eigenvalues_nilpotent_and_diag():
    s = sp.eigenvalues(en.nilpotent(2))
    assert np.max(np.abs(s.eigenvalues)) < 1e-12
    s = sp.eigenvalues(np.diag([2.0, 3.0j]))
    got = sorted(s.eigenvalues, key=lambda z: z.real)
    assert abs(got[0] - 3.0j) < 1e-12 and abs(got[1] - 2.0) < 1e-12


def test_eigenvalues_trace_invariant():
    m = en.sample_ginibre(60, en.RngHandle(1))
    s = sp.eigenvalues(m)
    assert abs(np.sum(s.eigenvalues) - np.trace(m)) <= 1e-8 * (1 + abs(np.trace(m)))


def test_s_function_zero_matrix():
    for lam, x in [(0.7 + 0.1j, 0.5), (2.0, 1e-3)]:
        got = sp.s_function_matrix(np.zeros((4, 4)), lam, x)
        assert abs(got - np.log(abs(lam) ** 2 + x)) < 1e-14


def test_s_function_nil2_by_hand():
    # nil2* nil2 = diag(0, 1): s = (log x + log(1+x))/2
    for x in (0.3, 1.0, 2.5):
        got = sp.s_function_matrix(en.nilpotent(2), 0.0, x)
        assert abs(got - 0.5 * (np.log(x) + np.log(1 + x))) < 1e-14


def test_s_function_small_x_limit():
    # as x -> 0+, s converges to (2/n) sum log|lam - lam_j|
    m = en.sample_ginibre(8, en.RngHandle(3))
    lam = 1.5 + 0.25j
    vals = np.linalg.eigvals(m)
    target = 2.0 * np.mean(np.log(np.abs(lam - vals)))
    assert abs(sp.s_function_matrix(m, lam, 1e-12) - target) < 1e-8


def test_s_function_monotone_in_x():
    m = en.sample_ginibre(10, en.RngHandle(4))
    xs = [1e-3, 1e-2, 0.1, 1.0, 10.0]
    vals = [sp.s_function_matrix(m, 0.3, x) for x in xs]
    assert np.all(np.diff(vals) > 0)


def test_s_function_rejects_nonpositive_x():
    with pytest.raises(DomainError):
        sp.s_function_matrix(np.zeros((2, 2)), 0.0, 0.0)
    with pytest.raises(DomainError):
        sp.resolvent_trace(np.zeros((2, 2)), 0.0, -1.0)


def test_resolvent_closed_forms():
    assert abs(sp.resolvent_trace(np.zeros((3, 3)), 2.0, 0.5) - 1.0 / 4.5) < 1e-14
    got = sp.resolvent_trace(en.nilpotent(2), 0.0, 0.4)
    assert abs(got - 0.5 * (1 / 0.4 + 1 / 1.4)) < 1e-14


def test_resolvent_is_x_derivative_of_s():
    # central finite differences of s at h=1e-5, relative tolerance 1e-6
    h = 1e-5
    for j, n in [(0, 20), (1, 35), (2, 50)]:
        m = en.sample_ginibre(n, en.RngHandle(5, j))
        lam, x = 0.4 - 0.2j, 0.5
        fd = (sp.s_function_matrix(m, lam, x + h) - sp.s_function_matrix(m, lam, x - h)) / (2 * h)
        rt = sp.resolvent_trace(m, lam, x)
        assert abs(fd - rt) <= 1e-6 * abs(rt)


def test_resolvent_positive_decreasing():
    m = en.sample_ginibre(12, en.RngHandle(6))
    vals = [sp.resolvent_trace(m, 0.1, x) for x in (0.1, 0.5, 1.0, 5.0)]
    assert np.all(np.asarray(vals) > 0)
    assert np.all(np.diff(vals) < 0)


def test_monte_carlo_s_zero_time_exact():
    spec = en.BmPathSpec("additive-ginibre", 12, 0.0, 1)
    res = sp.monte_carlo_S(spec, 0.8, 0.3, 4, en.RngHandle(7))
    assert abs(res.s_mean - np.log(0.8 ** 2 + 0.3)) < 1e-14
    assert res.s_var == 0.0


def test_monte_carlo_s_variance_decay():
    # concentration: resolvent-trace variance shrinks with n by >= 2x
    small = sp.monte_carlo_S(en.BmPathSpec("additive-ginibre", 20, 1.0, 1),
                             0.5, 0.5, 100, en.RngHandle(8))
    big = sp.monte_carlo_S(en.BmPathSpec("additive-ginibre", 80, 1.0, 1),
                           0.5, 0.5, 100, en.RngHandle(9))
    assert big.resolvent_trace_var <= small.resolvent_trace_var / 2.0


def test_monte_carlo_s_matches_analytic_circular():
    spec = en.BmPathSpec("additive-ginibre", 400, 1.0, 1)
    res = sp.monte_carlo_S(spec, 0.0, 0.25, 8, en.RngHandle(10))
    assert abs(res.s_mean - hj.circ_S_at(1.0, 0.0, 0.25)) < 0.02


def test_empirical_measure_atoms():
    em = sp.empirical_measure(sp.eigenvalues(np.eye(3)))
    assert em.weight == pytest.approx(1.0 / 3.0)
    assert np.allclose(em.points, 1.0)
    with pytest.raises(ValueError):
        sp.empirical_measure(sp.Spectrum(n=0, eigenvalues=np.array([]), trace=0.0))


def test_histogram_masses_sum_to_one():
    rng = en.RngHandle(11).generator()
    vals = rng.standard_normal(500)
    h = sp.histogram_1d(vals, bins=20, range=(-1.0, 1.0))
    assert np.all(h.masses >= 0)
    assert np.sum(h.masses) + h.out_of_range == pytest.approx(1.0)
    pts = rng.standard_normal(300) + 1j * rng.standard_normal(300)
    h2 = sp.histogram_2d(pts, bins=(10, 10))
    assert np.sum(h2.masses) + h2.out_of_range == pytest.approx(1.0)


def test_radial_cdf_uniform_disk():
    # radial CDF of uniform-disk samples approximates F(r) = r^2/t on [0, sqrt(t)]
    t = 1.0
    gen = en.RngHandle(12).generator()
    pts = np.sqrt(t * gen.uniform(size=2000)) * np.exp(2j * np.pi * gen.uniform(size=2000))
    em = sp.EmpiricalMeasure(points=pts)
    table = sp.radial_cdf(em)
    dist = sp.distance_sup_cdf(table, lambda r: min(r * r / t, 1.0))
    assert dist < 0.05
    assert np.all(np.diff(table[1]) >= 0)


def test_angular_pushforward_identity_preserves_count():
    em = sp.EmpiricalMeasure(points=np.array([1.0, 1j, -1.0]))
    out = sp.angular_pushforward(em, lambda z: z)
    assert len(out) == 3


def test_distance_sup_cdf_edge_cases():
    em = sp.EmpiricalMeasure(points=np.zeros(5, dtype=complex))
    table = sp.radial_cdf(em)
    # identical distributions: compare a step CDF against itself
    assert sp.distance_sup_cdf(table, lambda r: 1.0 if r >= 0 else 0.0) == 0.0
    # point mass at 0 against uniform[0,1]
    assert sp.distance_sup_cdf(table, lambda r: min(max(r, 0.0), 1.0)) == pytest.approx(1.0)


def test_distance_l1_bins_zero_for_matching_density():
    edges = np.linspace(0.0, 1.0, 11)
    masses = np.diff(edges)
    h = sp.Histogram(dims=1, edges=(edges,), masses=masses, out_of_range=0.0)
    assert sp.distance_l1_bins(h, lambda x: 1.0) < 1e-12
    with pytest.raises(ValueError):
        sp.distance_l1_bins(h, lambda x: 1.0, quad_points=4)


def test_distance_l1_bins_2d():
    xe = np.linspace(0.0, 1.0, 5)
    ye = np.linspace(0.0, 2.0, 4)
    masses = np.outer(np.diff(xe), np.diff(ye)) / 2.0  # uniform density 1/2
    h = sp.Histogram(dims=2, edges=(xe, ye), masses=masses, out_of_range=0.0)
    assert sp.distance_l1_bins(h, lambda x, y: 0.5, quad_points=8) < 1e-12
