"""Deterministic limits: homogeneous mixing, the susceptible-degree system on
G(n, mu/n) (with and without rewiring), Miller–Volz, and the rewiring-augmented
exploration pair (u, v). All systems use fixed-step RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import NumericError, ParameterError
from .params import EpidemicParams

CONSERVATION_TOL = 1e-6


@dataclass
class Trajectory:
    t: np.ndarray
    S: np.ndarray
    I: np.ndarray
    R: np.ndarray
    extra: Dict[str, np.ndarray] = field(default_factory=dict)
    s_hist: Optional[np.ndarray] = field(default=None, repr=False)

    def columns(self) -> Dict[str, np.ndarray]:
        cols = {"t": self.t, "S": self.S, "I": self.I, "R": self.R}
        cols.update(self.extra)
        return cols


@dataclass
class OdeState:
    """One sample of the degree-class system, in counts."""

    t: float
    s_hist: np.ndarray
    i: float
    r: float
    f: float
    mu_t: Optional[float] = None


@dataclass
class MillerState:
    t: float
    theta: float
    s: float
    i: float
    r: float


def sk_state(traj: Trajectory, idx: int = -1) -> OdeState:
    if traj.s_hist is None:
        raise ParameterError("trajectory carries no degree-class history")
    mu_t = traj.extra.get("mu_t")
    return OdeState(
        float(traj.t[idx]), traj.s_hist[idx].copy(), float(traj.I[idx]), float(traj.R[idx]),
        float(traj.extra["F"][idx]), None if mu_t is None else float(mu_t[idx]),
    )


def miller_state(traj: Trajectory, idx: int = -1) -> MillerState:
    return MillerState(float(traj.t[idx]), float(traj.extra["theta"][idx]), float(traj.S[idx]),
                       float(traj.I[idx]), float(traj.R[idx]))


def rk4(f: Callable[[np.ndarray], np.ndarray], y0, dt: float, steps: int, record_every: int = 1,
        check: Optional[Callable[[int, np.ndarray], None]] = None):
    """Integrate the autonomous system ``y' = f(y)``; returns (times, states)."""
    y = np.asarray(y0, dtype=float).copy()
    record_every = max(1, int(record_every))
    n_rec = steps // record_every + 1 + (1 if steps % record_every else 0)
    ys = np.empty((n_rec, y.size))
    ts = np.empty(n_rec)
    ys[0], ts[0] = y, 0.0
    j = 1
    for i in range(1, steps + 1):
        k1 = f(y)
        k2 = f(y + 0.5 * dt * k1)
        k3 = f(y + 0.5 * dt * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if check is not None:
            check(i, y)
        if i % record_every == 0 or i == steps:
            ys[j], ts[j] = y, i * dt
            j += 1
    return ts[:j], ys[:j]


def _steps(t_end: float, dt: float) -> int:
    if dt <= 0 or t_end < 0:
        raise ParameterError("need dt > 0 and t_end >= 0")
    return int(round(t_end / dt))


def integrate_homogeneous(beta: float, n: float, i0: float, t_end: float = 30.0, dt: float = 1e-3,
                          record_every: int = 10) -> Trajectory:
    """Well-mixed SIR with unit recovery rate, in counts."""
    if i0 <= 0:
        raise ParameterError("i0 must be positive")

    def f(y):
        s, i, _ = y
        inf = beta * s * i / n
        return np.array([-inf, inf - i, i])

    def check(step, y):
        drift = abs(y.sum() - n)
        if not drift <= CONSERVATION_TOL * n:
            raise NumericError(f"conservation drift {drift:.3g} at step {step}; reduce dt", residual=drift)

    t, ys = rk4(f, [n - i0, i0, 0.0], dt, _steps(t_end, dt), record_every, check)
    return Trajectory(t, ys[:, 0], ys[:, 1], ys[:, 2])


def _sk_system(lam: float, mu: float, n: float, rho: float, K: int, rewire: bool):
    k = np.arange(K + 1, dtype=float)
    k2 = k * k

    def f(y):
        S = y[: K + 1]
        I = y[K + 1]
        mu_t = y[K + 4] if rewire else mu
        F = k @ S
        promote = lam * F * mu_t / n * S
        promote[K] = 0.0  # top bin absorbs promotions so mass is conserved
        # recovery of an infected neighbour, plus edges broken and landing off the infected set
        demote_rate = 1.0 + (rho * (1.0 - I / n) if rewire else 0.0)
        demote = demote_rate * k * S
        dS = -lam * k * S - promote - demote
        dS[1:] += promote[:-1]
        dS[:-1] += demote[1:]
        dI = lam * F - I
        # closed form of sum_k k dS_k, kept as an independent check on the bookkeeping
        dF = -lam * (k2 @ S) + lam * F * mu_t / n * (S.sum() - S[K]) - demote_rate * F
        out = np.empty_like(y)
        out[: K + 1] = dS
        out[K + 1] = dI
        out[K + 2] = I
        out[K + 3] = dF
        if rewire:
            out[K + 4] = rho * F / n * (1.0 - (I + y[K + 2]) / n)
        return out

    return f


def _integrate_sk(p: EpidemicParams, i0, k_max, dt, t_end, record_every, rewire: bool) -> Trajectory:
    if p.n is None:
        raise ParameterError("the degree-class system needs a population size n")
    if p.fixed:
        raise ParameterError("the degree-class system assumes exponential infection times")
    n = float(p.n)
    i0 = 1e-4 * n if i0 is None else float(i0)
    K = int(math.ceil(8 * p.mu)) if k_max is None else int(k_max)
    if i0 <= 0 or K < 2:
        raise ParameterError("need i0 > 0 and k_max >= 2")
    rho = p.rho_eff if rewire else 0.0
    y0 = np.zeros(K + 4 + (1 if rewire else 0))
    y0[1] = p.mu * i0
    y0[0] = n - i0 - y0[1]
    y0[K + 1] = i0
    y0[K + 3] = y0[1]
    if rewire:
        y0[K + 4] = p.mu
    kk = np.arange(K + 1)

    def check(step, y):
        if not y[K] <= 1e-8 * n:
            raise NumericError(f"S_k mass {y[K]:.3g} reached k_max={K}; increase k_max", residual=y[K])
        drift = abs(y[: K + 3].sum() - n)
        if not drift <= CONSERVATION_TOL * n:
            raise NumericError(f"conservation drift {drift:.3g} at step {step}; reduce dt", residual=drift)

    f = _sk_system(p.lam, p.mu, n, rho, K, rewire)
    t, ys = rk4(f, y0, dt, _steps(t_end, dt), record_every, check)
    S_hist = ys[:, : K + 1]
    extra = {
        "F": S_hist @ kk,
        "F_tracked": ys[:, K + 3],
    }
    if rewire:
        extra["mu_t"] = ys[:, K + 4]
    return Trajectory(t, S_hist.sum(axis=1), ys[:, K + 1], ys[:, K + 2], extra, s_hist=S_hist)


def integrate_sk(p: EpidemicParams, i0: Optional[float] = None, k_max: Optional[int] = None,
                 dt: float = 1e-3, t_end: float = 30.0, record_every: int = 10) -> Trajectory:
    """Susceptibles classified by their number of infected neighbours.

    Counts are in individuals. Initially ``i0`` infecteds whose ``mu * i0``
    susceptible neighbours each see one of them; everyone else is in S_0.
    """
    return _integrate_sk(p, i0, k_max, dt, t_end, record_every, rewire=False)


def integrate_sk_rewire(p: EpidemicParams, i0: Optional[float] = None, k_max: Optional[int] = None,
                        dt: float = 1e-3, t_end: float = 30.0, record_every: int = 10) -> Trajectory:
    """Degree-class system with S-I edges broken at rate ``rho`` and the mean
    susceptible degree ``mu_t`` raised by rewired edges."""
    return _integrate_sk(p, i0, k_max, dt, t_end, record_every, rewire=True)


class PoissonPGF:
    """Degree generating function of Poisson(mu)."""

    def __init__(self, mu: float):
        self.mu = float(mu)

    def psi(self, x):
        return np.exp(self.mu * (x - 1.0))

    def dpsi(self, x):
        return self.mu * np.exp(self.mu * (x - 1.0))


def integrate_miller_volz(beta: float, gamma: float = 1.0, psi=None, i0: float = 1e-4,
                          dt: float = 1e-3, t_end: float = 30.0, record_every: int = 10,
                          mu: float = 5.0) -> Trajectory:
    """Edge-based compartmental model in population fractions.

    ``theta`` is the probability that a random partner has not yet transmitted
    along a given edge. A fraction ``i0`` starts infected, so
    ``S = (1 - i0) psi(theta)``.
    """
    psi = PoissonPGF(mu) if psi is None else psi
    if not 0 < i0 < 1:
        raise ParameterError("i0 must lie in (0, 1)")
    d1 = float(psi.dpsi(1.0))
    s0 = 1.0 - i0

    def f(y):
        th, r = y
        s = s0 * psi.psi(th)
        return np.array([
            -beta * th + beta * s0 * psi.dpsi(th) / d1 + gamma * (1.0 - th),
            gamma * (1.0 - s - r),
        ])

    def check(step, y):
        if not 0.0 < y[0] <= 1.0 + 1e-12:
            raise NumericError(f"theta left (0, 1] at step {step}", residual=y[0])

    t, ys = rk4(f, [1.0, 0.0], dt, _steps(t_end, dt), record_every, check)
    theta, R = ys[:, 0], ys[:, 1]
    S = s0 * psi.psi(theta)
    return Trajectory(t, S, 1.0 - S - R, R, {"theta": theta})


def integrate_ml_pair(mu: float, tau: float, alpha: float, dt: float = 1e-3, s_end: float = 1.0):
    """RK4 for ``u' = -v tau u (1 - alpha)``, ``v' = v tau u alpha`` from ``(1, mu)``.

    Returns ``(s, u, v)`` sampled at every step.
    """

    def f(y):
        u, v = y
        flow = v * tau * u
        return np.array([-flow * (1.0 - alpha), flow * alpha])

    s, ys = rk4(f, [1.0, mu], dt, _steps(s_end, dt))
    return s, ys[:, 0], ys[:, 1]
