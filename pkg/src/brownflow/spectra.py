"""Eigenvalue clouds, regularized log-determinants, and comparison statistics.

This module turns sampled matrices into empirical spectral data (eigenvalue
multisets, empirical measures, histograms, radial/angular reductions) and
provides the regularized quantities

    s_x(A, lam) = (1/n) trace log((A - lam)^* (A - lam) + x),       x > 0,
    t_x(A, lam) = (1/n) trace [((A - lam)^* (A - lam) + x)^(-1)],

whose Monte Carlo averages over matrix Brownian motion draws are compared
against the analytic values computed elsewhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ensembles
from .ensembles import BmPathSpec, RngHandle
from .errors import DomainError, EigensolveError

# relative floor for roundoff-negative eigenvalues of (A-lam)^*(A-lam)
_SINGVAL_FLOOR_REL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue multiset of an n x n matrix (algebraic multiplicity)."""

    n: int
    eigenvalues: np.ndarray
    trace: complex

    def __post_init__(self):
        if len(self.eigenvalues) != self.n:
            raise ValueError("eigenvalue count does not match dimension")
        gap = abs(np.sum(self.eigenvalues) - self.trace)
        if gap > 1e-8 * (1.0 + abs(self.trace)):
            raise EigensolveError(
                f"eigenvalue sum deviates from trace by {gap:.3e}", context=self.trace)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Probability measure with equal mass 1/count at each point."""

    points: np.ndarray

    @property
    def weight(self) -> float:
        return 1.0 / len(self.points)


@dataclass(frozen=True)
class Histogram:
    """Binned masses; mass outside the binned range is tracked separately."""

    dims: int
    edges: tuple
    masses: np.ndarray
    out_of_range: float


@dataclass(frozen=True)
class RegularizedLogDet:
    """Monte Carlo summary of s_x and its x-derivative over ensemble draws."""

    t: float
    lam: complex
    x: float
    s_mean: float
    s_var: float
    resolvent_trace_mean: float
    resolvent_trace_var: float
    samples: int


def eigenvalues(m: np.ndarray) -> Spectrum:
    """Dense non-Hermitian eigensolve (LAPACK zgeev) with trace check."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigensolveError(f"eigensolver did not converge: {exc}",
                              context=m.shape) from exc
    return Spectrum(n=m.shape[0], eigenvalues=vals, trace=complex(np.trace(m)))


def _shifted_gram_eigs(a: np.ndarray, lam: complex) -> np.ndarray:
    """Eigenvalues of (A-lam)^*(A-lam), floored at 0 against roundoff."""
    b = np.asarray(a, dtype=complex) - lam * np.eye(a.shape[0])
    sig = np.linalg.eigvalsh(b.conj().T @ b)
    floor = -_SINGVAL_FLOOR_REL * max(sig[-1], 1e-300)
    if sig[0] < floor:
        raise EigensolveError(
            f"Gram matrix eigenvalue {sig[0]:.3e} below roundoff floor {floor:.3e}")
    return np.maximum(sig, 0.0)


def s_function_matrix(a: np.ndarray, lam: complex, x: float) -> float:
    """Regularized log-determinant (1/n) trace log((A-lam)^*(A-lam) + x).

    Computed through the Hermitian eigendecomposition of (A-lam)^*(A-lam);
    as x -> 0+ this converges to (2/n) sum_j log|lam - lam_j|.
    """
    if x <= 0:
        raise DomainError("regularizer x must be > 0")
    sig = _shifted_gram_eigs(a, lam)
    return float(np.mean(np.log(sig + x)))


def resolvent_trace(a: np.ndarray, lam: complex, x: float) -> float:
    """(1/n) trace ((A-lam)^*(A-lam) + x)^(-1); the x-derivative of
    :func:`s_function_matrix`."""
    if x <= 0:
        raise DomainError("regularizer x must be > 0")
    sig = _shifted_gram_eigs(a, lam)
    return float(np.mean(1.0 / (sig + x)))


def _path_endpoint(spec: BmPathSpec, rng: RngHandle) -> np.ndarray:
    if spec.kind == "additive-ginibre":
        return ensembles.sample_ginibre_bm(spec, rng)[-1]
    if spec.kind == "unitary":
        return ensembles.sample_unitary_bm(spec, rng)
    return ensembles.sample_gl_bm(spec, rng)


def monte_carlo_S(spec: BmPathSpec, lam: complex, x: float, samples: int,
                  rng: RngHandle) -> RegularizedLogDet:
    """Sample mean/variance of s_x and the resolvent trace over independent
    Brownian motion draws (sample j uses stream_id j)."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if x <= 0:
        raise DomainError("regularizer x must be > 0")
    s_vals = np.empty(samples)
    r_vals = np.empty(samples)
    for j in range(samples):
        m = _path_endpoint(spec, rng.stream(j))
        s_vals[j] = s_function_matrix(m, lam, x)
        r_vals[j] = resolvent_trace(m, lam, x)
    return RegularizedLogDet(
        t=spec.t_final, lam=lam, x=x,
        s_mean=float(np.mean(s_vals)), s_var=float(np.var(s_vals, ddof=1)),
        resolvent_trace_mean=float(np.mean(r_vals)),
        resolvent_trace_var=float(np.var(r_vals, ddof=1)),
        samples=samples)


# ---------------------------------------------------------------------------
# empirical measures and reductions
# ---------------------------------------------------------------------------

def empirical_measure(s: Spectrum) -> EmpiricalMeasure:
    """Measure assigning mass 1/n to each eigenvalue."""
    if s.n == 0 or len(s.eigenvalues) == 0:
        raise ValueError("empty spectrum")
    return EmpiricalMeasure(points=np.asarray(s.eigenvalues, dtype=complex))


def _padded_range(values: np.ndarray, pad: float = 0.05):
    lo, hi = float(np.min(values)), float(np.max(values))
    span = hi - lo
    if span == 0.0:
        span = max(abs(lo), 1.0)
    return lo - pad * span, hi + pad * span


def histogram_1d(values, bins: int = 40, range=None) -> Histogram:
    """1D mass histogram; default range is the data range padded by 5%."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no data to bin")
    if range is None:
        range = _padded_range(values)
    counts, edges = np.histogram(values, bins=bins, range=range)
    inside = (values >= range[0]) & (values <= range[1])
    masses = counts / values.size
    return Histogram(dims=1, edges=(edges,), masses=masses,
                     out_of_range=float(np.sum(~inside)) / values.size)


def histogram_2d(points, bins=(80, 80), range=None) -> Histogram:
    """2D mass histogram over complex points (re, im)."""
    points = np.asarray(points, dtype=complex)
    if points.size == 0:
        raise ValueError("no data to bin")
    re, im = points.real, points.imag
    if range is None:
        range = (_padded_range(re), _padded_range(im))
    counts, xedges, yedges = np.histogram2d(re, im, bins=bins, range=range)
    inside = ((re >= range[0][0]) & (re <= range[0][1])
              & (im >= range[1][0]) & (im <= range[1][1]))
    return Histogram(dims=2, edges=(xedges, yedges), masses=counts / points.size,
                     out_of_range=float(np.sum(~inside)) / points.size)


def radial_cdf(em: EmpiricalMeasure, center: complex = 0.0):
    """Empirical CDF of |z - center|.

    Returns ``(radii, cdf)`` arrays (duplicate radii collapsed) describing
    the nondecreasing, right-continuous step function F(r) = fraction of
    points with |z - center| <= r.
    """
    r = np.sort(np.abs(em.points - center))
    cdf = np.arange(1, r.size + 1) / r.size
    radii, last = np.unique(r[::-1], return_index=True)
    return radii, cdf[::-1][last]


def angular_pushforward(em: EmpiricalMeasure, map_fn) -> np.ndarray:
    """Apply ``map_fn`` to every support point; returns the 1D sample set."""
    return np.asarray([map_fn(z) for z in em.points])


def distance_sup_cdf(empirical_table, analytic_cdf) -> float:
    """Kolmogorov-Smirnov sup distance between an empirical CDF table
    (as returned by :func:`radial_cdf`) and an analytic CDF callable.

    The comparison just below each jump uses the target's left limit, so a
    step CDF compared against itself gives exactly 0.
    """
    r, cdf = empirical_table
    f_right = np.asarray([analytic_cdf(v) for v in r], dtype=float)
    f_left = np.asarray([analytic_cdf(np.nextafter(v, -np.inf)) for v in r], dtype=float)
    upper = np.max(np.abs(cdf - f_right))
    lower = np.max(np.abs(np.concatenate(([0.0], cdf[:-1])) - f_left))
    return float(max(upper, lower))


def _bin_integrals_1d(edges: np.ndarray, density, points: int = 16) -> np.ndarray:
    nodes, weights = np.polynomial.legendre.leggauss(points)
    lo, hi = edges[:-1], edges[1:]
    mid, half = (hi + lo) / 2.0, (hi - lo) / 2.0
    # evaluation grid: (bins, points)
    xs = mid[:, None] + half[:, None] * nodes[None, :]
    vals = np.asarray([[density(x) for x in row] for row in xs])
    return (vals @ weights) * half


def distance_l1_bins(hist: Histogram, density, quad_points: int = 16) -> float:
    """L1 distance between histogram bin masses and the integrals of an
    analytic density over the same bins (Gauss-Legendre per bin).

    For 2D histograms ``density`` is called as ``density(x, y)`` and the
    integrals use a tensor Gauss rule per cell.
    """
    if quad_points < 8:
        raise ValueError("quadrature needs at least 8 points per bin")
    if hist.dims == 1:
        expected = _bin_integrals_1d(hist.edges[0], density, quad_points)
        return float(np.sum(np.abs(hist.masses - expected)))
    if hist.dims != 2:
        raise ValueError("only 1D and 2D histograms supported")
    xe, ye = hist.edges
    nodes, weights = np.polynomial.legendre.leggauss(quad_points)
    xm, xh = (xe[1:] + xe[:-1]) / 2.0, (xe[1:] - xe[:-1]) / 2.0
    ym, yh = (ye[1:] + ye[:-1]) / 2.0, (ye[1:] - ye[:-1]) / 2.0
    total = 0.0
    for i in np.arange(xm.size):
        xs = xm[i] + xh[i] * nodes
        for j in np.arange(ym.size):
            ys = ym[j] + yh[j] * nodes
            vals = np.asarray([[density(x, y) for y in ys] for x in xs])
            cell = xh[i] * yh[j] * (weights @ vals @ weights)
            total += abs(hist.masses[i, j] - cell)
    return float(total)
