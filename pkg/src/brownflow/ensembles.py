"""Reproducible samplers for the matrix models under study.

Provides the Gaussian unitary ensemble (GUE), the Ginibre ensemble, the
Ginibre (additive) matrix Brownian motion, Brownian motions on the unitary
and general linear groups, and the nilpotent-plus-noise instability demo.

Conventions
-----------
* Matrices are plain ``numpy.ndarray`` of complex dtype; "dimension n" means
  an ``(n, n)`` array.
* Entry variances scale like ``1/n`` so spectra stay bounded as ``n`` grows.
* All sampling is driven by :class:`RngHandle`; equal ``(seed, stream_id)``
  gives bitwise-identical output, distinct stream ids give independent
  streams.  Batch drivers use ``stream_id = j`` for sample ``j``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidDimensionError

PATH_KINDS = ("additive-ginibre", "unitary", "general-linear")

#: default number of per-step factors per unit time for multiplicative paths
DEFAULT_STEPS_PER_UNIT_TIME = 100


@dataclass(frozen=True)
class RngHandle:
    """Deterministic random stream identified by ``(seed, stream_id)``.

    Streams with the same seed and distinct stream ids are statistically
    independent (``numpy.random.SeedSequence`` spawn keys), which is what
    batch Monte Carlo uses to parallelize safely.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def stream(self, stream_id: int) -> "RngHandle":
        """Sibling handle with the same seed and a different stream id."""
        return RngHandle(self.seed, stream_id)


@dataclass(frozen=True)
class BmPathSpec:
    """Parameters of a matrix Brownian motion path.

    ``kind`` is one of ``"additive-ginibre"``, ``"unitary"``,
    ``"general-linear"``.  ``steps`` is the number of increments (additive)
    or per-step factors (multiplicative).  ``t_final = 0`` is allowed and
    yields the starting point of the motion (zero matrix, resp. identity).
    """

    kind: str
    n: int
    t_final: float
    steps: int

    def __post_init__(self):
        if self.kind not in PATH_KINDS:
            raise ValueError(f"unknown path kind {self.kind!r}; expected one of {PATH_KINDS}")
        _check_dimension(self.n)
        if self.t_final < 0:
            raise ValueError("t_final must be >= 0")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")


def default_steps(t_final: float) -> int:
    """Default step count: DEFAULT_STEPS_PER_UNIT_TIME per unit time, at least 1."""
    return max(1, int(np.ceil(DEFAULT_STEPS_PER_UNIT_TIME * t_final)))


def _check_dimension(n: int):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidDimensionError(f"matrix dimension must be a positive integer, got {n!r}")


# Pade coefficient rows and the Higham acceptance thresholds theta_m for the
# backward error of the diagonal [m/m] approximant; the bounds hold in any
# consistent norm, so a 2-norm power-iteration estimate may drive the degree
# selection (our per-step exponents have 2-norm well under 1, while their
# 1-norm grows like sqrt(n), which is what makes generic expm slow here).
_PADE = {
    5: (30240., 15120., 3360., 420., 30., 1.),
    7: (17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.),
    9: (17643225600., 8821612800., 2075673600., 302702400., 30270240.,
        2162160., 110880., 3960., 90., 1.),
}
_PADE_THETA = ((5, 0.25), (7, 0.95), (9, 2.1))


def _norm2_estimate(a: np.ndarray) -> float:
    """Power-iteration estimate of the spectral norm (deterministic start)."""
    v = np.ones(a.shape[0], dtype=complex) / np.sqrt(a.shape[0])
    est = 0.0
    for _ in range(6):
        w = a @ v
        v = a.conj().T @ w
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        est = np.sqrt(nv)
        v /= nv
    return float(est)


def _expm_smallnorm(a: np.ndarray) -> np.ndarray:
    """Matrix exponential tuned for step factors of small spectral norm.

    Uses a diagonal Pade approximant of degree 5/7/9 chosen by a 2-norm
    estimate (1.5x safety margin); falls back to scipy expm above theta_9.
    """
    est = 1.5 * _norm2_estimate(a)
    for degree, theta in _PADE_THETA:
        if est <= theta:
            break
    else:
        return scipy.linalg.expm(a)
    b = _PADE[degree]
    ident = np.eye(a.shape[0], dtype=complex)
    powers = {0: ident, 2: a @ a}
    for k in range(4, degree, 2):
        powers[k] = powers[k - 2] @ powers[2]
    u = a @ sum(b[k] * powers[k - 1] for k in range(1, degree + 1, 2))
    v = sum(b[k] * powers[k] for k in range(0, degree + 1, 2))
    return np.linalg.solve(v - u, v + u)


def _complex_normal(gen: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Complex Gaussian array, mean 0, E|z|^2 = variance (ziggurat reals)."""
    scale = np.sqrt(variance / 2.0)
    return (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) * scale


def sample_gue(n: int, rng: RngHandle) -> np.ndarray:
    """Draw an n x n GUE matrix.

    Diagonal entries are real Gaussians of variance ``1/n``; entries above
    the diagonal are complex Gaussians of variance ``1/n``, independent;
    entries below the diagonal mirror the ones above, so the output is
    Hermitian by construction.
    """
    _check_dimension(n)
    gen = rng.generator()
    x = np.zeros((n, n), dtype=complex)
    diag = gen.standard_normal(n) / np.sqrt(n)
    iu, ju = np.triu_indices(n, k=1)
    upper = _complex_normal(gen, iu.shape, 1.0 / n)
    x[iu, ju] = upper
    x += x.conj().T
    x[np.arange(n), np.arange(n)] = diag
    return x


def sample_ginibre(n: int, rng: RngHandle) -> np.ndarray:
    """Draw an n x n Ginibre matrix: all entries independent complex
    Gaussians of mean 0 and variance ``1/n``."""
    _check_dimension(n)
    gen = rng.generator()
    return _complex_normal(gen, (n, n), 1.0 / n)


def sample_ginibre_bm(spec: BmPathSpec, rng: RngHandle) -> list[np.ndarray]:
    """Sample an additive Ginibre Brownian motion path.

    Returns the list of matrices at times ``j * t_final / steps`` for
    ``j = 1..steps``.  Increments over disjoint steps are independent, and
    the increment over a step of length ``d`` is ``sqrt(d)`` times a Ginibre
    draw, so the marginal at time t is distributed as ``sqrt(t)`` Ginibre.
    """
    if spec.kind != "additive-ginibre":
        raise ValueError(f"expected additive-ginibre spec, got {spec.kind!r}")
    if spec.t_final == 0.0:
        return [np.zeros((spec.n, spec.n), dtype=complex) for _ in range(spec.steps)]
    gen = rng.generator()
    dt = spec.t_final / spec.steps
    path = []
    current = np.zeros((spec.n, spec.n), dtype=complex)
    for _ in range(spec.steps):
        current = current + np.sqrt(dt) * _complex_normal(gen, (spec.n, spec.n), 1.0 / spec.n)
        path.append(current.copy())
    return path


def sample_unitary_bm(spec: BmPathSpec, rng: RngHandle) -> np.ndarray:
    """Sample Brownian motion on the unitary group at time ``t_final``.

    The path is an ordered product of ``steps`` independent factors
    ``exp(i sqrt(t/k) X_j)`` with ``X_j`` GUE.  Each factor is exactly
    unitary, and its second-order term has mean ``-(t/2k) I``, i.e. the
    Ito correction of the unitary case, so no re-unitarization is needed.
    """
    if spec.kind != "unitary":
        raise ValueError(f"expected unitary spec, got {spec.kind!r}")
    u = np.eye(spec.n, dtype=complex)
    if spec.t_final == 0.0:
        return u
    gen_rng = rng.generator()
    s = np.sqrt(spec.t_final / spec.steps)
    for _ in range(spec.steps):
        x = _gue_from_generator(spec.n, gen_rng)
        u = u @ _expm_smallnorm(1j * s * x)
    return u


def sample_gl_bm(spec: BmPathSpec, rng: RngHandle) -> np.ndarray:
    """Sample Brownian motion on GL(n, C) at time ``t_final``.

    Ordered product of ``steps`` factors ``exp(sqrt(t/k) Z_j)`` with ``Z_j``
    Ginibre.  Since ``E[Z^2] = 0`` for Ginibre, the mean second-order term
    vanishes, matching the zero Ito correction of the general linear case.
    (The distribution of i*Ginibre equals that of Ginibre, so the usual
    factor i in the exponent is dropped.)  The result is invertible with
    probability 1; a singular-to-working-precision draw raises a warning
    rather than failing.
    """
    if spec.kind != "general-linear":
        raise ValueError(f"expected general-linear spec, got {spec.kind!r}")
    b = np.eye(spec.n, dtype=complex)
    if spec.t_final == 0.0:
        return b
    gen_rng = rng.generator()
    s = np.sqrt(spec.t_final / spec.steps)
    for _ in range(spec.steps):
        z = _complex_normal(gen_rng, (spec.n, spec.n), 1.0 / spec.n)
        b = b @ _expm_smallnorm(s * z)
    sign, _ = np.linalg.slogdet(b)
    if sign == 0 or not np.all(np.isfinite(b)):
        warnings.warn("general-linear Brownian motion sample is singular to working "
                      "precision; consider resampling with a different stream",
                      RuntimeWarning)
    return b


def _gue_from_generator(n: int, gen: np.random.Generator) -> np.ndarray:
    # same construction as sample_gue but drawing from an open generator,
    # used for the sequential per-step draws of multiplicative paths
    x = np.zeros((n, n), dtype=complex)
    diag = gen.standard_normal(n) / np.sqrt(n)
    iu, ju = np.triu_indices(n, k=1)
    x[iu, ju] = _complex_normal(gen, iu.shape, 1.0 / n)
    x += x.conj().T
    x[np.arange(n), np.arange(n)] = diag
    return x


def nilpotent(n: int) -> np.ndarray:
    """The n x n matrix with 1's just above the diagonal and 0's elsewhere."""
    _check_dimension(n)
    return np.diag(np.ones(n - 1), k=1).astype(complex) if n > 1 else np.zeros((1, 1), complex)


def nilpotent_plus_noise(n: int, epsilon: float, rng: RngHandle) -> np.ndarray:
    """Spectral-instability demo matrix ``nil_n + epsilon * Ginibre``."""
    if n < 2:
        raise InvalidDimensionError("nilpotent_plus_noise needs n >= 2")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    out = nilpotent(n)
    if epsilon > 0:
        out = out + epsilon * sample_ginibre(n, rng)
    return out
