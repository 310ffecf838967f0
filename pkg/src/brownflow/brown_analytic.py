"""Closed-form spectral densities and the multiplicative support domain.

Circular side: the semicircle density, the limiting log-determinant
s_t(lam) (log|lam|^2 outside the disk of radius sqrt(t), quadratic inside)
and the uniform disk density 1/(pi t).

Multiplicative side: the lifetime function

    T(lam) = |lam - 1|^2 log(|lam|^2) / (|lam|^2 - 1),

the domain Sigma_t = {T < t} (simply connected for t <= 4, doubly connected
beyond) described by radial profiles r_inner/r_outer per angle, the angular
density w_t computed both from the closed ratio omega(r, theta) and from the
theta-derivative form, the full density W_t(r, theta) = w_t(theta)/r^2, the
conformal map f_t and its radial collapse Phi_t onto the unit circle, the
support arc of the free unitary Brownian motion spectral measure, and
quadrature utilities for total mass.

Near r = 1 the quantities h, alpha, beta all degenerate (alpha and beta
vanish to second order), so a window |r - 1| < 1e-4 switches to truncated
Taylor series whose coefficients were derived symbolically:

    h     = 1 - u^2/6 + u^3/6 - 2u^4/15 + u^5/10 - 31u^6/420 + O(u^7)
    alpha = u^2 (4/3        - u^2/15 + u^3/15 - 11u^4/210)   + O(u^7)
    beta  = u^2 (2/3        - u^2/10 + u^3/10 - 17u^4/210)   + O(u^7)

with u = r - 1 (both alpha and beta have no cubic term).  The reduced forms
alpha/u^2, beta/u^2 keep the omega ratio regular through r = 1, where
omega(1, theta) = 1 + (2 cos(theta) + 1)/(cos(theta) + 2), confirmed
numerically from both sides.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, PoleError, QuadratureError, SingularityError

_SERIES_WINDOW = 1e-4          # |r-1| window for the h/alpha/beta series
_RATIO_WINDOW = 1e-5           # |u| window for log1p(u)/u series in T
_RAY_RMIN, _RAY_RMAX = 1e-3, 1e3
_SCAN_POINTS = 600
DEFAULT_THETA_RESOLUTION = 256

_H_COEFFS = (1.0, 0.0, -1.0 / 6.0, 1.0 / 6.0, -2.0 / 15.0, 1.0 / 10.0, -31.0 / 420.0)
_A2_COEFFS = (4.0 / 3.0, 0.0, -1.0 / 15.0, 1.0 / 15.0, -11.0 / 210.0)
_B2_COEFFS = (2.0 / 3.0, 0.0, -1.0 / 10.0, 1.0 / 10.0, -17.0 / 210.0)


# ---------------------------------------------------------------------------
# circular-law targets
# ---------------------------------------------------------------------------

def semicircle_density(x):
    """Semicircle density sqrt(4 - x^2)/(2 pi) on [-2, 2], zero outside."""
    x = np.asarray(x, dtype=float)
    val = np.where(np.abs(x) <= 2.0, np.sqrt(np.maximum(4.0 - x * x, 0.0)) / (2.0 * np.pi), 0.0)
    return float(val) if val.ndim == 0 else val


def circular_s(t: float, lam: complex) -> float:
    """Limiting regularized log-determinant of the circular flow:
    log|lam|^2 for |lam| >= sqrt(t), else log(t) - 1 + |lam|^2/t."""
    if t <= 0:
        raise DomainError("t must be > 0")
    q = abs(lam) ** 2
    if q >= t:
        return float(np.log(q))
    return float(np.log(t) - 1.0 + q / t)


def circular_brown_density(t: float, lam: complex) -> float:
    """Uniform density 1/(pi t) strictly inside the disk of radius sqrt(t)."""
    if t <= 0:
        raise DomainError("t must be > 0")
    return 1.0 / (np.pi * t) if abs(lam) ** 2 < t else 0.0


# ---------------------------------------------------------------------------
# the lifetime function T and the domain Sigma_t
# ---------------------------------------------------------------------------

def _ratio_log1p(u):
    """log(1+u)/u, with the removable singularity at u = 0 filled by series."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _RATIO_WINDOW
    us = np.where(small, u, 0.0)
    series = 1.0 - us / 2.0 + us ** 2 / 3.0 - us ** 3 / 4.0 + us ** 4 / 5.0
    direct = np.divide(np.log1p(u), u, out=np.ones_like(u), where=~small)
    out = np.where(small, series, direct)
    return float(out) if out.ndim == 0 else out


def _t_polar(r, theta):
    """T at r e^{i theta}, vectorized over r."""
    r = np.asarray(r, dtype=float)
    u = r * r - 1.0
    return (r * r - 2.0 * r * np.cos(theta) + 1.0) * _ratio_log1p(u)


def T_lambda(lam: complex):
    """Lifetime function |lam-1|^2 log(|lam|^2)/(|lam|^2 - 1).

    The ratio is interpreted as 1 at |lam| = 1; T(0) is +inf.
    """
    if lam == 0:
        return np.inf
    r = abs(lam)
    return float(abs(lam - 1.0) ** 2 * _ratio_log1p(r * r - 1.0))


def in_sigma(t: float, lam: complex) -> bool:
    """Strict membership T(lam) < t in the domain Sigma_t."""
    if t <= 0:
        raise DomainError("t must be > 0")
    return bool(T_lambda(lam) < t)


def _ray_min(t, theta):
    """(r*, T(r*) - t) minimizing T - t along the ray of angle theta."""
    res = minimize_scalar(lambda s: _t_polar(np.exp(s), theta),
                          bounds=(np.log(_RAY_RMIN), np.log(_RAY_RMAX)),
                          method="bounded", options={"xatol": 1e-14})
    r_star = float(np.exp(res.x))
    return r_star, float(res.fun) - t


def _ray_roots(t, theta):
    """Radii where T(. e^{i theta}) = t, from a geometric-grid sign scan
    refined by bracketed root finding; returns () or (r_inner, r_outer)."""
    rs = np.geomspace(_RAY_RMIN, _RAY_RMAX, _SCAN_POINTS)
    vals = _t_polar(rs, theta) - t

    def g(r):
        return float(_t_polar(r, theta)) - t

    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    roots = [brentq(g, rs[i], rs[i + 1], xtol=1e-14, rtol=9e-16) for i in idx]
    if len(roots) == 0:
        # the dip may be narrower than the scan grid: locate the ray minimum
        r_star, fmin = _ray_min(t, theta)
        if fmin >= 0:
            return ()
        roots = [brentq(g, _RAY_RMIN, r_star, xtol=1e-14, rtol=9e-16),
                 brentq(g, r_star, _RAY_RMAX, xtol=1e-14, rtol=9e-16)]
    if len(roots) != 2:
        raise SingularityError(
            f"expected 0 or 2 boundary crossings at theta={theta}, found {len(roots)}")
    return (min(roots), max(roots))


def _theta_extent(t):
    """Largest |theta| whose ray meets Sigma_t (t < 4), by bisection of the
    ray-minimum of T - t; T increases with |theta| at every radius."""
    lo, hi = 0.0, np.pi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _ray_min(t, mid)[1] < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SigmaDomain:
    """Radial description of Sigma_t.

    ``thetas``/``r_inner``/``r_outer`` tabulate the profiles on
    [0, theta_extent] (profiles are even in theta); evaluation methods
    re-solve the boundary radii exactly per query.
    """

    t: float
    topology: str
    theta_extent: float
    thetas: np.ndarray
    r_inner_table: np.ndarray
    r_outer_table: np.ndarray

    def _fold(self, theta: float) -> float:
        theta = abs(float(theta))
        if theta > np.pi:
            theta = abs((theta + np.pi) % (2.0 * np.pi) - np.pi)
        if theta > self.theta_extent + 1e-12:
            raise DomainError(
                f"theta={theta} outside the angular extent {self.theta_extent} at t={self.t}")
        return min(theta, self.theta_extent)

    def boundary_radii(self, theta: float):
        """Exact (r_inner, r_outer) at this angle."""
        th = self._fold(theta)
        roots = _ray_roots(self.t, th)
        if not roots:
            # tangent ray at the extent: the two radii coincide
            r_star, fmin = _ray_min(self.t, th)
            if fmin > 1e-9:
                raise DomainError(f"ray theta={theta} misses Sigma_t")
            return (r_star, r_star)
        return roots

    def r_outer(self, theta: float) -> float:
        return self.boundary_radii(theta)[1]

    def r_inner(self, theta: float) -> float:
        return self.boundary_radii(theta)[0]

    def interp_outer(self, theta: float) -> float:
        """Fast table interpolation of the outer profile."""
        return float(np.interp(self._fold(theta), self.thetas, self.r_outer_table))

    def segment_log_width(self, theta: float) -> float:
        r_in, r_out = self.boundary_radii(theta)
        return float(np.log(r_out) - np.log(r_in))


def build_sigma_domain(t: float, theta_resolution: int = DEFAULT_THETA_RESOLUTION) -> SigmaDomain:
    """Tabulate the radial profiles of Sigma_t.

    Profiles are found by bracketed bisection of T - t along each ray; for
    t < 4 the angular extent is found first by bisection on the ray minimum.
    t = 4 is treated as simply connected (closure of the t < 4 convention).
    """
    if t <= 0:
        raise DomainError("t must be > 0")
    if theta_resolution < 16:
        raise ValueError("theta_resolution must be at least 16")
    if t <= 4.0:
        topology = "simply-connected"
        extent = _theta_extent(t) if t < 4.0 else np.pi
    else:
        topology = "doubly-connected"
        extent = np.pi
    thetas = np.linspace(0.0, extent, theta_resolution)
    r_in = np.empty_like(thetas)
    r_out = np.empty_like(thetas)
    for i, th in enumerate(thetas):
        roots = _ray_roots(t, th)
        if not roots:
            r_star, _ = _ray_min(t, th)
            r_in[i] = r_out[i] = r_star
        else:
            r_in[i], r_out[i] = roots
    return SigmaDomain(t=t, topology=topology, theta_extent=extent, thetas=thetas,
                       r_inner_table=r_in, r_outer_table=r_out)


@functools.lru_cache(maxsize=64)
def sigma_domain(t: float, theta_resolution: int = DEFAULT_THETA_RESOLUTION) -> SigmaDomain:
    """Cached access to :func:`build_sigma_domain`."""
    return build_sigma_domain(t, theta_resolution)


# ---------------------------------------------------------------------------
# the density w_t / W_t
# ---------------------------------------------------------------------------

def _poly(coeffs, u):
    out = 0.0
    for c in reversed(coeffs):
        out = out * u + c
    return out


def h_alpha_beta(r: float):
    """The triple (h, alpha, beta) entering the omega ratio:

    h = r log(r^2)/(r^2-1), alpha = r^2 + 1 - 2 r h, beta = (r^2+1) h - 2 r,
    evaluated by Taylor series inside |r - 1| < 1e-4 where alpha and beta
    vanish to second order and the direct forms cancel catastrophically.
    """
    if r <= 0:
        raise DomainError("r must be > 0")
    u = r - 1.0
    if abs(u) < _SERIES_WINDOW:
        h = _poly(_H_COEFFS, u)
        return h, u * u * _poly(_A2_COEFFS, u), u * u * _poly(_B2_COEFFS, u)
    h = r * _ratio_log1p(r * r - 1.0)
    return h, r * r + 1.0 - 2.0 * r * h, (r * r + 1.0) * h - 2.0 * r


def omega(r: float, theta: float) -> float:
    """The differentiation-free ratio
    omega = 1 + h (alpha cos(theta) + beta)/(beta cos(theta) + alpha).

    Inside the |r - 1| window the reduced series alpha/u^2, beta/u^2 keep the
    ratio regular; at r = 1 it equals 1 + (2 cos + 1)/(cos + 2).
    """
    if r <= 0:
        raise DomainError("r must be > 0")
    c = np.cos(theta)
    u = r - 1.0
    if abs(u) < _SERIES_WINDOW:
        a2 = _poly(_A2_COEFFS, u)
        b2 = _poly(_B2_COEFFS, u)
        return float(1.0 + _poly(_H_COEFFS, u) * (a2 * c + b2) / (b2 * c + a2))
    h, alpha, beta = h_alpha_beta(r)
    den = beta * c + alpha
    if abs(den) <= 1e-14 * max(alpha, abs(beta), 1.0):
        raise SingularityError(
            f"omega denominator vanished at r={r}, theta={theta} "
            f"(alpha={alpha:.3e}, beta={beta:.3e})")
    return float(1.0 + h * (alpha * c + beta) / den)


def w_t(t: float, theta: float, domain: SigmaDomain | None = None) -> float:
    """Angular density w_t(theta) = omega(r_t(theta), theta) / (2 pi t)."""
    domain = domain if domain is not None else sigma_domain(t)
    return omega(domain.r_outer(theta), theta) / (2.0 * np.pi * t)


def ds_dtheta_boundary(r: float, theta: float) -> float:
    """Boundary angular derivative 2 r sin(theta) / (r^2 + 1 - 2 r cos(theta))."""
    return float(2.0 * r * np.sin(theta) / (r * r + 1.0 - 2.0 * r * np.cos(theta)))


def w_t_via_derivative(t: float, theta: float, domain: SigmaDomain | None = None,
                       h: float = 1e-4) -> float:
    """Derivative form of the angular density:

    (1/4 pi) (2/t + d/dtheta [2 r sin(theta)/(r^2+1-2 r cos(theta))])

    with a 5-point central stencil and the outer radius re-solved at each
    stencil node.  Cross-check only; the omega form is the primary one.
    """
    domain = domain if domain is not None else sigma_domain(t)

    def g(th):
        return ds_dtheta_boundary(domain.r_outer(th), th)

    if domain.t <= 4.0 and (abs(theta) + 2 * h) > domain.theta_extent:
        raise DomainError("stencil leaves the angular extent; use the omega form")
    deriv = (-g(theta + 2 * h) + 8.0 * g(theta + h)
             - 8.0 * g(theta - h) + g(theta - 2 * h)) / (12.0 * h)
    return float((2.0 / t + deriv) / (4.0 * np.pi))


def mult_brown_density(t: float, lam: complex, domain: SigmaDomain | None = None) -> float:
    """Full density W_t = w_t(theta)/r^2 inside Sigma_t, zero outside."""
    if t <= 0:
        raise DomainError("t must be > 0")
    if not in_sigma(t, lam):
        return 0.0
    r = abs(lam)
    return w_t(t, np.angle(lam), domain) / (r * r)


# ---------------------------------------------------------------------------
# conformal map and the unitary shadow
# ---------------------------------------------------------------------------

def f_t(t: float, lam: complex) -> complex:
    """The map lam exp((t/2)(1+lam)/(1-lam)); pole at lam = 1."""
    if lam == 1:
        raise PoleError("f_t has a pole at lambda = 1")
    return lam * np.exp(0.5 * t * (1.0 + lam) / (1.0 - lam))


def phi_angle(t: float, theta: float, domain: SigmaDomain | None = None) -> float:
    """Argument of f_t at the outer boundary point of the ray of angle theta."""
    domain = domain if domain is not None else sigma_domain(t)
    r = domain.r_outer(theta)
    return float(np.angle(f_t(t, r * np.exp(1j * theta))))


def phi_t(t: float, lam: complex, domain: SigmaDomain | None = None) -> complex:
    """Radial collapse of f_t: the value of f_t at the outer boundary point
    on the radial segment through lam; constant along each segment."""
    if T_lambda(lam) > t + 1e-12:
        raise DomainError(f"lambda={lam} is outside the closure of Sigma_t")
    domain = domain if domain is not None else sigma_domain(t)
    theta = float(np.angle(lam))
    r = domain.r_outer(theta)
    return f_t(t, r * np.exp(1j * theta))


@dataclass(frozen=True)
class BianeSupport:
    """Support arc {e^{i theta} : |theta| <= theta_max} of the free unitary
    Brownian motion distribution; the whole circle from t = 4 on."""

    t: float
    theta_max: float


def biane_support(t: float) -> BianeSupport:
    """theta_max = sqrt(t(4-t))/2 + arccos(1 - t/2) for t < 4, else pi."""
    if t <= 0:
        raise DomainError("t must be > 0")
    if t >= 4.0:
        return BianeSupport(t=t, theta_max=np.pi)
    theta = 0.5 * np.sqrt(t * (4.0 - t)) + np.arccos(1.0 - t / 2.0)
    return BianeSupport(t=t, theta_max=float(theta))


def ds_drho(t: float, rho: float, theta: float = 0.0) -> float:
    """Log-radial derivative of s_t inside Sigma_t: 2 rho / t + 1.

    The point e^(rho + i theta) must lie in Sigma_t.
    """
    lam = np.exp(rho) * np.exp(1j * theta)
    if not in_sigma(t, complex(lam)):
        raise DomainError(f"point exp({rho} + i {theta}) is not in Sigma_t")
    return 2.0 * rho / t + 1.0


# ---------------------------------------------------------------------------
# total mass
# ---------------------------------------------------------------------------

@dataclass
class DensitySpec:
    """Pointwise-evaluatable Brown-measure density of a given kind."""

    kind: str
    t: float
    _mass: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("circular", "multiplicative"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.t <= 0:
            raise DomainError("t must be > 0")

    def evaluate(self, lam: complex) -> float:
        if self.kind == "circular":
            return circular_brown_density(self.t, lam)
        return mult_brown_density(self.t, lam)

    @property
    def total_mass(self) -> float:
        if self._mass is None:
            self._mass = integrate_density(self)
        return self._mass


def integrate_density(spec: DensitySpec) -> float:
    """Total mass of the density.

    Circular: exactly 1 (density 1/(pi t) on a disk of area pi t).
    Multiplicative: the radial integral of r^-2 in polar coordinates is
    exact, int r^-2 r dr = log(r_outer/r_inner), leaving the 1D theta
    quadrature 2 int_0^extent w_t(theta) log(r_outer/r_inner) dtheta; for
    t <= 4 the integrand vanishes like sqrt(extent - theta) at the extent,
    which the substitution theta = extent - u^2 makes smooth.
    """
    if spec.kind == "circular":
        return 1.0
    t = spec.t
    domain = sigma_domain(t)

    def integrand(theta):
        return w_t(t, theta, domain) * domain.segment_log_width(theta)

    if domain.topology == "doubly-connected":
        val, err = quad(integrand, 0.0, np.pi, epsabs=1e-8, epsrel=1e-8, limit=200)
    else:
        ext = domain.theta_extent

        def smooth(u):
            return integrand(ext - u * u) * 2.0 * u

        val, err = quad(smooth, 0.0, np.sqrt(ext), epsabs=1e-8, epsrel=1e-8, limit=200)
    total = 2.0 * val
    if err * 2.0 > 1e-4:
        raise QuadratureError(
            f"density mass quadrature did not converge (error {2 * err:.2e})",
            estimate=total)
    return float(total)
