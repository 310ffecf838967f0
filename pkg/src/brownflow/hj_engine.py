"""Hamilton-Jacobi machinery for the regularized log-determinant flows.

Two Hamiltonian systems are handled:

* circular:        H(x, p) = -x p^2, state (x, p);
* multiplicative:  H(a, b, x, p_a, p_b, p_x)
                     = -x p_x (1 + (a^2+b^2) p_x - x p_x - a p_a - b p_b),
                   state (a, b, x, p_a, p_b, p_x), lam = a + i b.

The circular characteristics have closed forms; the multiplicative system is
integrated numerically (adaptive embedded Runge-Kutta with dense output) with
conservation of H and of Psi = x p_x + (a p_a + b p_b)/2 used as accuracy
checks.  Blow-up of a characteristic is detected by a norm threshold and the
blow-up time, as the initial regularizer x0 tends to 0, approaches the
lifetime function T(lam0) that defines the support domain.

The six multiplicative Hamilton equations below were derived by hand from H
and are unit-tested against central finite differences of H.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import brown_analytic
from .errors import DomainError, LifetimeExceededError

BLOWUP_NORM = 1e12
DEFAULT_TOL = 1e-10

HAMILTONIANS = ("circular", "multiplicative")


# ---------------------------------------------------------------------------
# circular closed forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CircCharacteristic:
    """Characteristic data for the circular system at parameter lam.

    The initial momentum and blow-up time are determined by (lam, x0):
    p0 = 1 / (|lam|^2 + x0) and lifetime = |lam|^2 + x0.
    """

    lam: complex
    x0: float

    def __post_init__(self):
        if self.x0 <= 0:
            raise DomainError("x0 must be > 0")

    @property
    def p0(self) -> float:
        return 1.0 / (abs(self.lam) ** 2 + self.x0)

    @property
    def lifetime(self) -> float:
        return abs(self.lam) ** 2 + self.x0


def circ_x_of_t(c: CircCharacteristic, t: float) -> float:
    """x(t) = x0 (1 - t / (|lam|^2 + x0))^2.

    Defined for 0 <= t <= lifetime; the value at t = lifetime is the limit 0.
    """
    if t < 0 or t > c.lifetime:
        raise LifetimeExceededError(f"t={t} outside [0, {c.lifetime}]")
    return c.x0 * (1.0 - t / c.lifetime) ** 2


def circ_p_of_t(c: CircCharacteristic, t: float) -> float:
    """p(t) = p0 / (1 - p0 t); blows up at t = 1/p0 = lifetime."""
    if t < 0 or t >= c.lifetime:
        raise LifetimeExceededError(f"t={t} outside [0, {c.lifetime})")
    return c.p0 / (1.0 - c.p0 * t)


def circ_S_along(c: CircCharacteristic, t: float) -> float:
    """Value S(t, x(t)) = log(|lam|^2 + x0) - x0 t / (|lam|^2 + x0)^2."""
    if t < 0 or t >= c.lifetime:
        raise LifetimeExceededError(f"t={t} outside [0, {c.lifetime})")
    q = abs(c.lam) ** 2
    return float(np.log(q + c.x0) - c.x0 * t / (q + c.x0) ** 2)


def circ_S_at(t: float, lam: complex, x: float) -> float:
    """S(t, x) for the circular flow, by inverting x(t; x0) = x for x0.

    The map x0 -> x(t; x0) is monotone increasing on (max(0, t - |lam|^2),
    inf), which is checked on the computed bracket rather than assumed.
    """
    if x <= 0:
        raise DomainError("x must be > 0")
    if t < 0:
        raise DomainError("t must be >= 0")
    q = abs(lam) ** 2
    if t == 0:
        return float(np.log(q + x))
    lo = max(0.0, t - q)

    def image(x0):
        return x0 * (1.0 - t / (q + x0)) ** 2 - x

    # bracketing: image -> -x as x0 -> lo+, and grows ~x0 for large x0
    a = lo + 1e-13 * (1.0 + lo)
    b = max(x, lo, t, q, 1.0)
    while image(b) <= 0:
        b *= 2.0
        if b > 1e300:
            raise DomainError("no admissible x0 root found (should not happen for x > 0)")
    if image(a) >= 0:
        # x so tiny the root collapsed onto the lower endpoint
        x0 = a
    else:
        x0 = brentq(image, a, b, xtol=1e-15, rtol=9e-16, maxiter=200)
    return circ_S_along(CircCharacteristic(lam=lam, x0=x0), t)


# ---------------------------------------------------------------------------
# Hamiltonian systems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultState:
    """State of the multiplicative Hamiltonian system at a given time."""

    time: float
    a: float
    b: float
    x: float
    p_a: float
    p_b: float
    p_x: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b, self.x, self.p_a, self.p_b, self.p_x])

    @classmethod
    def from_array(cls, time, y):
        return cls(time, *(float(v) for v in y))

    @property
    def lam(self) -> complex:
        return complex(self.a, self.b)


def mult_initial_state(lam0: complex, x0: float) -> MultState:
    """Initial state with momenta = gradient of log(|lam - 1|^2 + x) at
    (lam0, x0):  p_x = 1/d, p_a = 2(a0-1)/d, p_b = 2 b0/d, d = |lam0-1|^2 + x0."""
    if x0 <= 0:
        raise DomainError("x0 must be > 0")
    a0, b0 = lam0.real, lam0.imag
    d = abs(lam0 - 1.0) ** 2 + x0
    return MultState(time=0.0, a=a0, b=b0, x=x0,
                     p_a=2.0 * (a0 - 1.0) / d, p_b=2.0 * b0 / d, p_x=1.0 / d)


def mult_hamiltonian(s) -> float:
    """H = -x p_x (1 + (a^2+b^2) p_x - x p_x - a p_a - b p_b)."""
    a, b, x, pa, pb, px = _as_mult_array(s)
    return float(-x * px * (1.0 + (a * a + b * b) * px - x * px - a * pa - b * pb))


def mult_psi(s) -> float:
    """Conserved quantity Psi = x p_x + (a p_a + b p_b) / 2."""
    a, b, x, pa, pb, px = _as_mult_array(s)
    return float(x * px + 0.5 * (a * pa + b * pb))


def _as_mult_array(s):
    return s.as_array() if isinstance(s, MultState) else np.asarray(s, dtype=float)


def _mult_rhs(_t, y):
    a, b, x, pa, pb, px = y
    r2px = (a * a + b * b) * px
    inner = 1.0 + r2px - x * px - a * pa - b * pb
    return np.array([
        a * x * px,
        b * x * px,
        -x * (inner + r2px - x * px),
        x * px * (2.0 * a * px - pa),
        x * px * (2.0 * b * px - pb),
        px * inner - x * px * px,
    ])


def _circ_rhs(_t, y):
    x, p = y
    return np.array([-2.0 * x * p, p * p])


def circ_hamiltonian(s) -> float:
    x, p = np.asarray(s, dtype=float)
    return float(-x * p * p)


_SYSTEMS = {
    "circular": (_circ_rhs, circ_hamiltonian, 2),
    "multiplicative": (_mult_rhs, mult_hamiltonian, 6),
}


@dataclass
class Trajectory:
    """Integrated characteristic with dense output.

    ``blew_up`` marks early termination (norm threshold or step underflow);
    ``t_end`` is then the termination time, else the requested final time.
    """

    hamiltonian: str
    t: np.ndarray
    y: np.ndarray
    sol: object
    blew_up: bool
    t_end: float
    requested_t_final: float
    tol: float

    def state_at(self, s: float) -> np.ndarray:
        return self.sol(s)

    @property
    def initial(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def final(self) -> np.ndarray:
        return self.y[:, -1]

    def hamiltonian_values(self, times=None) -> np.ndarray:
        h = _SYSTEMS[self.hamiltonian][1]
        ts = self.t if times is None else np.asarray(times)
        return np.array([h(self.sol(s)) for s in ts])

    def psi_values(self, times=None) -> np.ndarray:
        if self.hamiltonian != "multiplicative":
            raise ValueError("Psi is defined for the multiplicative system only")
        ts = self.t if times is None else np.asarray(times)
        return np.array([mult_psi(self.sol(s)) for s in ts])


def integrate_hamilton(hamiltonian: str, init, t_final: float,
                       tol: float = DEFAULT_TOL) -> Trajectory:
    """Integrate Hamilton's equations with blow-up detection.

    Terminates early (with ``blew_up=True``, no exception) if the max-norm
    of the state reaches 1e12 or the required step size underflows.
    """
    if hamiltonian not in _SYSTEMS:
        raise ValueError(f"unknown hamiltonian {hamiltonian!r}; expected {HAMILTONIANS}")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    rhs, _, dim = _SYSTEMS[hamiltonian]
    if isinstance(init, MultState):
        y0 = init.as_array()
    else:
        y0 = np.asarray(init, dtype=float)
    if y0.shape != (dim,):
        raise ValueError(f"initial state must have {dim} components")
    if not np.all(np.isfinite(y0)):
        raise ValueError("initial state must be finite")

    if t_final == 0.0:
        return Trajectory(hamiltonian=hamiltonian, t=np.array([0.0]),
                          y=y0[:, None], sol=lambda _s: y0, blew_up=False,
                          t_end=0.0, requested_t_final=0.0, tol=tol)

    def too_large(_t, y):
        return np.max(np.abs(y)) - BLOWUP_NORM

    too_large.terminal = True
    too_large.direction = 1

    sol = solve_ivp(rhs, (0.0, t_final), y0, method="DOP853", rtol=tol, atol=tol,
                    dense_output=True, events=too_large)
    blew_up = (sol.status == 1) or (sol.status == -1)
    t_end = float(sol.t[-1])
    return Trajectory(hamiltonian=hamiltonian, t=sol.t, y=sol.y, sol=sol.sol,
                      blew_up=blew_up, t_end=t_end, requested_t_final=t_final,
                      tol=tol)


def hj_value_along(traj: Trajectory, s0_initial_value: float,
                   max_panel: float = 0.01) -> float:
    """Hamilton-Jacobi value S(t, x(t)) = S0 - H(0) t + int p . dx/ds ds.

    The integral uses composite Simpson over the integrator's own substeps
    (each subdivided to at most ``max_panel`` in length), evaluating the
    integrand p . dH/dp from the dense output.
    """
    if traj.blew_up:
        raise DomainError("trajectory is incomplete (blew up before its final time)")
    rhs, ham, dim = _SYSTEMS[traj.hamiltonian]
    npos = dim // 2

    def integrand(s):
        y = traj.sol(s)
        return float(np.dot(y[npos:], rhs(s, y)[:npos]))

    total = 0.0
    for t0, t1 in zip(traj.t[:-1], traj.t[1:]):
        panels = max(1, int(np.ceil((t1 - t0) / max_panel)))
        edges = np.linspace(t0, t1, panels + 1)
        for e0, e1 in zip(edges[:-1], edges[1:]):
            fm = integrand(0.5 * (e0 + e1))
            total += (e1 - e0) / 6.0 * (integrand(e0) + 4.0 * fm + integrand(e1))
    h0 = ham(traj.initial)
    return float(s0_initial_value - h0 * traj.t_end + total)


def mult_S_formula(traj: Trajectory) -> float:
    """Closed expression for S along a multiplicative characteristic:

    log(|lam0 - 1|^2 + x0) - x0 t / (|lam0 - 1|^2 + x0)^2
        + log|lam(t)| - log|lam0|.
    """
    if traj.hamiltonian != "multiplicative":
        raise ValueError("mult_S_formula needs a multiplicative trajectory")
    if traj.blew_up:
        raise DomainError("trajectory is incomplete (blew up before its final time)")
    a0, b0, x0 = traj.initial[:3]
    aT, bT = traj.final[:2]
    lam0 = complex(a0, b0)
    lamT = complex(aT, bT)
    if lam0 == 0 or lamT == 0:
        raise DomainError("lambda endpoints must be nonzero")
    d = abs(lam0 - 1.0) ** 2 + x0
    return float(np.log(d) - x0 * traj.t_end / d ** 2
                 + np.log(abs(lamT)) - np.log(abs(lam0)))


# ---------------------------------------------------------------------------
# lifetimes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LifetimeEstimate:
    """Blow-up time estimate; ``found=False`` means no blow-up before horizon."""

    time: float
    found: bool


def mult_lifetime(lam0: complex, x0: float, tol: float = DEFAULT_TOL) -> LifetimeEstimate:
    """Blow-up time of the multiplicative characteristic started at (lam0, x0).

    As x0 -> 0+ this approaches T(lam0).  The estimate is the first time the
    state norm reaches the blow-up threshold; if the integrator instead dies
    of step underflow, the time is refined by bisection on the final time.
    Returns the horizon 10 T(lam0) + 10 with ``found=False`` if nothing
    blows up before it.
    """
    t_ref = brown_analytic.T_lambda(lam0)
    horizon = 10.0 * min(t_ref, 100.0) + 10.0
    init = mult_initial_state(lam0, x0)
    traj = integrate_hamilton("multiplicative", init, horizon, tol)
    if not traj.blew_up:
        return LifetimeEstimate(time=horizon, found=False)
    if np.max(np.abs(traj.final)) >= 0.99 * BLOWUP_NORM:
        return LifetimeEstimate(time=traj.t_end, found=True)
    # step underflow before the norm event: bisect on t_final
    lo, hi = 0.0, traj.t_end
    y0 = init.as_array()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        probe = integrate_hamilton("multiplicative", y0, mid, tol)
        if probe.blew_up:
            hi = probe.t_end
        else:
            lo = mid
        if hi - lo <= 1e-12 * (1.0 + hi):
            break
    return LifetimeEstimate(time=hi, found=True)


def circ_lifetime(lam: complex, x0: float, tol: float = DEFAULT_TOL) -> LifetimeEstimate:
    """Numerical blow-up time of the circular system (closed form: |lam|^2 + x0)."""
    c = CircCharacteristic(lam=lam, x0=x0)
    horizon = 2.0 * c.lifetime + 1.0
    traj = integrate_hamilton("circular", np.array([c.x0, c.p0]), horizon, tol)
    if not traj.blew_up:
        return LifetimeEstimate(time=horizon, found=False)
    return LifetimeEstimate(time=traj.t_end, found=True)


# ---------------------------------------------------------------------------
# shooting into the domain
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShootingResult:
    """Converged (or not) initial data for a target (lam, x_eps) at time t."""

    lambda0: complex
    x0: float
    achieved_lambda: complex
    achieved_x: float
    residual_norm: float
    converged: bool
    iterations: int
    end_state: MultState

    @property
    def ds_drho_endpoint(self) -> float:
        """a p_a + b p_b at the endpoint: the log-radial derivative of S."""
        s = self.end_state
        return s.a * s.p_a + s.b * s.p_b


def _flow_to(u, t, tol):
    """Flow map (a0, b0, x0) -> state at time t, or None if it blows up."""
    a0, b0, x0 = u
    if x0 <= 0:
        return None
    init = mult_initial_state(complex(a0, b0), x0)
    traj = integrate_hamilton("multiplicative", init, t, tol)
    if traj.blew_up:
        return None
    return traj.final


def shoot_inside(t: float, lambda_target: complex, x_target_epsilon: float = 1e-6,
                 tol: float = 1e-9, max_iter: int = 40,
                 ode_tol: float = DEFAULT_TOL, initial_guess=None) -> ShootingResult:
    """Damped Newton iteration on the flow map driving
    (a(t), b(t), x(t)) to (Re lam, Im lam, x_target_epsilon).

    The target must lie in the domain Sigma_t.  The Jacobian is computed by
    forward finite differences of the flow map.  The seed is lam0 = lam,
    x0 = t - T(lam) (the circular-case intuition), unless overridden.
    Non-convergence is reported via ``converged=False``, not an exception.
    """
    if x_target_epsilon <= 0:
        raise DomainError("x_target_epsilon must be > 0")
    if not brown_analytic.in_sigma(t, lambda_target):
        raise DomainError(f"target {lambda_target} is not in Sigma_t for t={t}")
    target = np.array([lambda_target.real, lambda_target.imag, x_target_epsilon])
    if initial_guess is None:
        x0_seed = t - brown_analytic.T_lambda(lambda_target)
        u = np.array([lambda_target.real, lambda_target.imag, max(x0_seed, 0.1 * t)])
    else:
        u = np.asarray(initial_guess, dtype=float).copy()

    def residual(v):
        end = _flow_to(v, t, ode_tol)
        return (None, None) if end is None else (end[:3] - target, end)

    g, end = residual(u)
    it = 0
    while g is None and it < 8:
        u[2] *= 2.0  # seed blew up: retreat to a larger regularizer
        g, end = residual(u)
        it += 1
    if g is None:
        return ShootingResult(lambda0=complex(u[0], u[1]), x0=u[2],
                              achieved_lambda=np.nan, achieved_x=np.nan,
                              residual_norm=np.inf, converged=False, iterations=it,
                              end_state=MultState(t, *([np.nan] * 6)))
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g)) <= tol:
            break
        jac = np.empty((3, 3))
        for j in range(3):
            h = 1e-6 * max(1.0, abs(u[j]))
            up = u.copy()
            up[j] += h
            gp, _ = residual(up)
            if gp is None:
                up[j] = u[j] - h
                gp, _ = residual(up)
                if gp is None:
                    break
                jac[:, j] = (g - gp) / h
            else:
                jac[:, j] = (gp - g) / h
        else:
            try:
                step = np.linalg.solve(jac, -g)
            except np.linalg.LinAlgError:
                break
            # damped update, keeping x0 positive and the flow alive
            scale = 1.0
            for _ in range(12):
                cand = u + scale * step
                if cand[2] > 0:
                    g_new, end_new = residual(cand)
                    if g_new is not None and (np.max(np.abs(g_new)) < np.max(np.abs(g))
                                              or scale < 1.0 / 2048):
                        u, g, end = cand, g_new, end_new
                        break
                scale /= 2.0
            else:
                break
            continue
        break

    res_norm = float(np.max(np.abs(g)))
    return ShootingResult(
        lambda0=complex(u[0], u[1]), x0=float(u[2]),
        achieved_lambda=complex(end[0], end[1]), achieved_x=float(end[2]),
        residual_norm=res_norm, converged=bool(res_norm <= tol),
        iterations=it, end_state=MultState.from_array(t, end))


def ds_drho_shooting(t: float, lambda_target: complex,
                     epsilons=(1e-4, 1e-5, 1e-6), tol: float = 1e-9):
    """Richardson-extrapolated log-radial derivative of s_t at a point of
    Sigma_t, from shootings at a decreasing sequence of x-targets.

    The endpoint values behave like v(eps) = v0 + c sqrt(eps) + O(eps), so
    the extrapolation is polynomial in sqrt(eps) evaluated at 0.  Returns
    ``(value, results)`` with the per-epsilon shooting results.
    """
    results = []
    guess = None
    for eps in sorted(epsilons, reverse=True):
        res = shoot_inside(t, lambda_target, x_target_epsilon=eps, tol=tol,
                           initial_guess=guess)
        if not res.converged:
            raise RuntimeError(f"shooting failed to converge at eps={eps}")
        results.append(res)
        guess = np.array([res.lambda0.real, res.lambda0.imag, res.x0])
    xs = np.sqrt([r.achieved_x for r in results])
    p = [r.ds_drho_endpoint for r in results]
    # Neville's scheme evaluated at 0
    for k in range(1, len(xs)):
        for i in range(len(xs) - k):
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i])
    return float(p[0]), results
