"""Free-probability oracles for the shifted circular Brownian motion.

Two independent routes to the regularized log-determinant are kept here:

* the moment hierarchy ``dm_n/dt = n * sum_{j<n} m_j m_{n-1-j}`` for
  ``m_n(t) = tau[((c_t - lam)^* (c_t - lam))^n]``, closed using traciality
  (``tau[(cc^*)^k] = tau[(c^*c)^k]`` by cyclic invariance), and
* the truncated large-x series
  ``log x + sum_n (-1)^(n-1) m_n(t) / (n x^n)``.

A small word-moment calculator for freely independent elements implements
the centering/vanishing rule and is used as an exact cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import SeriesGuardError

MAX_WORD_LETTERS = 8


@dataclass(frozen=True)
class MomentVector:
    """Moments m[k] = tau[((c_t - lam)^*(c_t - lam))^k], k = 0..M."""

    lam: complex
    t: float
    order: int
    m: np.ndarray


@dataclass(frozen=True)
class SeriesValue:
    """Series evaluation together with its truncation-error bound."""

    value: float
    truncation_bound: float


def _hierarchy_rhs(_t, m):
    # dm_n/dt = n * conv(m, m)[n-1]; m[0] stays 1
    conv = np.convolve(m, m)
    out = np.zeros_like(m)
    n = np.arange(1, m.size)
    out[1:] = n * conv[:m.size - 1][n - 1]
    return out


def circ_moment_odes(lam: complex, t: float, order: int, tol: float = 1e-12) -> MomentVector:
    """Integrate the moment hierarchy from m_n(0) = |lam|^(2n) up to time t."""
    if order < 1:
        raise ValueError("order must be >= 1")
    if t < 0:
        raise ValueError("t must be >= 0")
    m0 = np.abs(lam) ** (2 * np.arange(order + 1))
    if t == 0:
        return MomentVector(lam=lam, t=0.0, order=order, m=m0)
    sol = solve_ivp(_hierarchy_rhs, (0.0, t), m0, method="DOP853",
                    rtol=tol, atol=tol)
    if not sol.success:
        raise RuntimeError(f"moment hierarchy integration failed: {sol.message}")
    return MomentVector(lam=lam, t=t, order=order, m=sol.y[:, -1])


def S_series(lam: complex, x: float, t: float, order: int = 40,
             tol: float = 1e-12) -> SeriesValue:
    """Truncated series for tau[log((c_t-lam)^*(c_t-lam) + x)] at large x.

    Requires x to clear the empirical convergence guard
    ``x > 4 * m_M^(1/(2M))`` (an operator-norm proxy with margin); raises
    :class:`SeriesGuardError` otherwise.
    """
    mv = circ_moment_odes(lam, t, order, tol=tol)
    guard = 4.0 * mv.m[order] ** (1.0 / (2 * order))
    if not x > guard:
        raise SeriesGuardError(
            f"series guard violated: need x > {guard:.4g} (got x={x:.4g}); "
            "increase x or decrease t")
    n = np.arange(1, order + 1)
    terms = (-1.0) ** (n - 1) / (n * x ** n.astype(float)) * mv.m[1:]
    bound = abs(mv.m[order]) / (order * x ** float(order))
    return SeriesValue(value=float(np.log(x) + np.sum(terms)),
                       truncation_bound=float(bound))


# ---------------------------------------------------------------------------
# word moments of freely independent elements
# ---------------------------------------------------------------------------
#
# A word is a sequence of (letter, exponent) pairs with adjacent letters
# distinct, e.g. (("a", 1), ("b", 1), ("a", 1), ("b", 1)) for abab.
# Internally each factor is a polynomial in one letter, stored as a
# coefficient dict {power: coeff}; the recursion expands every factor into
# (centered + trace) parts, drops the fully-centered alternating term by
# freeness, and merges neighbours that end up sharing a letter.

def _poly_trace(poly: dict, moments) -> float:
    return sum(c * moments[p] for p, c in poly.items())


def _poly_mul(p1: dict, p2: dict) -> dict:
    out: dict = {}
    for a, ca in p1.items():
        for b, cb in p2.items():
            out[a + b] = out.get(a + b, 0.0) + ca * cb
    return out


def _merge(factors):
    merged = []
    for letter, poly in factors:
        if merged and merged[-1][0] == letter:
            merged[-1] = (letter, _poly_mul(merged[-1][1], poly))
        else:
            merged.append((letter, dict(poly)))
    return merged


def _canonical(factors):
    return tuple((letter, tuple(sorted(poly.items()))) for letter, poly in factors)


def _tau(factors, moments, memo) -> float:
    factors = _merge(factors)
    if not factors:
        return 1.0
    if len(factors) == 1:
        return _poly_trace(factors[0][1], moments[factors[0][0]])
    key = _canonical(factors)
    if key in memo:
        return memo[key]
    traces = [_poly_trace(poly, moments[letter]) for letter, poly in factors]
    total = 0.0
    m = len(factors)
    # subsets of factors kept centered; the full subset vanishes by freeness
    for mask in range(2 ** m - 1):
        scalar = 1.0
        kept = []
        for i, (letter, poly) in enumerate(factors):
            if mask & (1 << i):
                centered = dict(poly)
                centered[0] = centered.get(0, 0.0) - traces[i]
                kept.append((letter, centered))
            else:
                scalar *= traces[i]
        if scalar == 0.0:
            continue
        total += scalar * (_tau(kept, moments, memo) if kept else 1.0)
    memo[key] = total
    return total


def free_word_moment(word, moments_a, moments_b) -> float:
    """tau of an alternating word in two freely independent elements.

    ``word`` is a sequence of ``(letter, exponent)`` pairs with letters in
    {"a", "b"}, adjacent letters distinct, at most 8 pairs.  ``moments_a[k]``
    must hold tau(a^k) up to the total degree of "a" in the word (same for
    "b"); index 0 is tau(1) = 1.
    """
    word = list(word)
    if len(word) > MAX_WORD_LETTERS:
        raise ValueError(f"word too long ({len(word)} > {MAX_WORD_LETTERS} letter blocks)")
    degree = {"a": 0, "b": 0}
    for i, (letter, power) in enumerate(word):
        if letter not in degree:
            raise ValueError(f"unknown letter {letter!r}")
        if power < 1:
            raise ValueError("exponents must be positive integers")
        if i > 0 and word[i - 1][0] == letter:
            raise ValueError("adjacent letters must be distinct")
        degree[letter] += power
    moments = {"a": list(moments_a), "b": list(moments_b)}
    for letter in "ab":
        if degree[letter] > 0 and len(moments[letter]) <= degree[letter]:
            raise ValueError(
                f"moments_{letter} too short: need tau({letter}^k) up to k={degree[letter]}")
        if moments[letter] and moments[letter][0] != 1:
            raise ValueError("moment lists must start with tau(1) = 1")
    factors = [(letter, {power: 1.0}) for letter, power in word]
    return _tau(factors, moments, memo={})
