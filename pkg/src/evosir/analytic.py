"""Transmissibilities, critical values, offspring generating functions and
final-size predictions for SIR with deletion or rewiring on G(n, mu/n).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import NoEpidemicError, NumericError, ParameterError
from .params import EpidemicParams, InfectionModel, Variant, as_enum

__all__ = [
    "AnalyticReport",
    "EvoFinalSize",
    "adaptive_simpson",
    "analyze",
    "base_transmissibility",
    "critical_lambda",
    "critical_rho",
    "epidemic_probability",
    "evo_crossing",
    "evo_final_size_approx",
    "final_size",
    "gf_fixed_point",
    "logistic_constants",
    "logistic_u",
    "offspring_pgf",
    "poisson_final_fraction",
    "r0_branching",
    "rewiring_loss",
    "tau_exp",
    "tau_exp_rewire",
    "tau_fixed",
    "tau_fixed_rewire",
    "transmissibility",
]

QUAD_TOL = 1e-10


# -- transmissibilities ------------------------------------------------------

def tau_fixed(lam: float) -> float:
    return -math.expm1(-lam)


def tau_fixed_rewire(lam: float, rho: float) -> float:
    if rho == 0:
        return tau_fixed(lam)
    s = lam + rho
    return lam / s * -math.expm1(-s)


def tau_exp(lam: float) -> float:
    return lam / (1.0 + lam)


def tau_exp_rewire(lam: float, rho: float) -> float:
    return lam / (lam + 1.0 + rho)


def _tau(lam: float, rho: float, model: InfectionModel) -> float:
    if model is InfectionModel.FIXED:
        return tau_fixed_rewire(lam, rho)
    return tau_exp_rewire(lam, rho)


def transmissibility(p: EpidemicParams) -> float:
    """Probability that infection crosses an S-I edge before recovery (and
    before the edge is broken, when ``rho > 0``)."""
    return _tau(p.lam, p.rho_eff, p.infection_model)


def base_transmissibility(p: EpidemicParams) -> float:
    """Transmissibility with edge breaking switched off."""
    return _tau(p.lam, 0.0, p.infection_model)


def rewiring_loss(p: EpidemicParams) -> float:
    """Probability that breaking the edge prevents an otherwise successful
    infection: ``1 - tau_r / tau``."""
    rho = p.rho_eff
    if rho == 0:
        return 0.0
    if not p.fixed:
        return rho / (rho + 1.0 + p.lam)
    if p.lam == 0:
        # limit lam -> 0 of 1 - tau_r / tau
        return 1.0 + math.expm1(-rho) / rho
    return 1.0 - tau_fixed_rewire(p.lam, rho) / tau_fixed(p.lam)


# -- critical values ----------------------------------------------------------

def _increasing_root(f: Callable[[float], float], lo: float, hi: float) -> float:
    """Root of an increasing ``f`` with ``f(lo) < 0``; ``hi`` is doubled until ``f(hi) > 0``."""
    for _ in range(200):
        if f(hi) > 0:
            return brentq(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
        lo, hi = hi, 2 * hi
    raise NumericError("failed to bracket root")


def critical_lambda(mu: float, rho: float, infection_model) -> float:
    """Infection rate at which ``mu * tau_r(lam, rho) = 1``."""
    model = as_enum(InfectionModel, infection_model)
    if rho < 0:
        raise ParameterError(f"rho must be non-negative, got {rho}")
    if mu <= 1:
        raise NoEpidemicError(f"mean degree {mu} <= 1: no large epidemic at any infection rate")
    if model is InfectionModel.EXPONENTIAL:
        return (1.0 + rho) / (mu - 1.0)
    # tau_fixed_rewire increases from 0 to 1 in lam, so mu > 1 guarantees a root
    return _increasing_root(lambda lam: mu * tau_fixed_rewire(lam, rho) - 1.0, 0.0, 1.0)


def critical_rho(mu: float, lam: float, infection_model) -> float:
    """Edge-breaking rate at which ``mu * tau_r(lam, rho) = 1``."""
    model = as_enum(InfectionModel, infection_model)
    if model is InfectionModel.EXPONENTIAL:
        rho_c = mu * lam - lam - 1.0
        if rho_c < -1e-12:
            raise NoEpidemicError(f"subcritical even without edge breaking (mu*tau = {mu * tau_exp(lam):.6g})")
        return max(rho_c, 0.0)
    g0 = mu * tau_fixed(lam) - 1.0
    if g0 < -1e-12:
        raise NoEpidemicError(f"subcritical even without edge breaking (mu*tau = {g0 + 1:.6g})")
    if g0 <= 0:
        return 0.0
    # tau_fixed_rewire decreases in rho, so flip the sign to reuse the increasing solver
    return _increasing_root(lambda rho: 1.0 - mu * tau_fixed_rewire(lam, rho), 0.0, 1.0)


# -- generating functions -----------------------------------------------------

def gf_fixed_point(
    gf: Callable[[float], float],
    tol: float = 1e-12,
    max_iter: int = 100_000,
    damping: float = 1.0,
) -> float:
    """Smallest fixed point of a probability generating function on [0, 1].

    Iterates ``z <- z + damping * (gf(z) - z)`` from 0, which increases
    monotonically to the smallest root. If the iteration stalls or hits
    ``max_iter`` the root is bracketed and refined by bisection-type search.
    Returns 1 when no root lies below 1 (mean offspring <= 1).

    For the degenerate ``gf(z) = z`` every point is fixed and 0 is returned.
    """
    z = 0.0
    for _ in range(max_iter):
        gz = gf(z)
        if abs(gz - z) < tol:
            # slow creep towards 1 can look converged; confirm a root below 1 exists
            return z if z < 1.0 - 1e-6 else _bracketed_fixed_point(gf, z, tol)
        z_next = z + damping * (gz - z)
        if z_next <= z:
            break
        z = z_next
    return _bracketed_fixed_point(gf, z, tol)


def _bracketed_fixed_point(gf, lo: float, tol: float) -> float:
    h = lambda x: gf(x) - x  # noqa: E731
    # h is convex with h(1) = 0; look for a clearly negative point below 1
    best, best_h = None, 0.0
    for j in range(1, 41):
        x = 1.0 - 2.0 ** -j
        if x <= lo:
            continue
        hx = h(x)
        if hx < best_h:
            best, best_h = x, hx
    if best is None or best_h > -tol:
        r1 = abs(h(1.0))
        if r1 >= tol:
            raise NumericError("generating function does not satisfy gf(1) = 1", residual=r1)
        return 1.0
    if h(lo) <= 0:
        return lo
    z = brentq(h, lo, best, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=1000)
    r = abs(h(z))
    if r >= tol:
        raise NumericError("fixed point did not reach tolerance", residual=r)
    return z


def adaptive_simpson(f: Callable[[float], float], a: float, b: float, tol: float = QUAD_TOL,
                     max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, max_depth)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, 0.5 * eps, depth - 1))
            stack.append((m, b, fm, frm, fb, right, 0.5 * eps, depth - 1))
    return total


def _mixed_poisson_pgf(mu_r: float, k: float) -> Callable[[float], float]:
    """``z -> exp(-mu_r(1-z)) * int_0^inf e^-t exp(mu_r(1-z) e^{-k t}) dt``.

    With ``x = e^{-t}`` the integral becomes ``int_0^1 exp(c x^k) dx`` which
    has a bounded integrand for every ``k > 0``.
    """

    def gf(z: float) -> float:
        c = mu_r * (1.0 - z)
        if c == 0.0:
            return 1.0
        integral = adaptive_simpson(lambda x: math.exp(c * x ** k), 0.0, 1.0, QUAD_TOL)
        return math.exp(-c) * integral

    return gf


def offspring_pgf(p: EpidemicParams) -> Callable[[float], float]:
    """Limiting generating function of the number of direct infections caused
    by one infected individual."""
    rho = p.rho_eff
    if p.fixed:
        m = p.mu * tau_fixed_rewire(p.lam, rho)
        return lambda z: math.exp(-m * (1.0 - z))
    if p.lam == 0:
        return lambda z: 1.0
    k = p.lam + rho
    return _mixed_poisson_pgf(p.mu * p.lam / k, k)


def epidemic_probability(p: EpidemicParams) -> float:
    """Limiting probability that one initial infected starts a large epidemic."""
    if p.mu * transmissibility(p) <= 1.0:
        return 0.0
    tol = 1e-12 if p.fixed else QUAD_TOL
    return 1.0 - gf_fixed_point(offspring_pgf(p), tol=tol)


def poisson_final_fraction(mean: float) -> float:
    """``1 - z0`` for ``exp(-mean (1 - z)) = z``; 0 when ``mean <= 1``."""
    if mean <= 1.0:
        return 0.0
    return 1.0 - gf_fixed_point(lambda z: math.exp(-mean * (1.0 - z)))


def final_size(p: EpidemicParams) -> float:
    """Fraction infected in a large static or delSIR epidemic.

    For ``Variant.EVO`` this is the delSIR value, which bounds the evoSIR size
    from below; see :func:`evo_final_size_approx`.
    """
    return poisson_final_fraction(p.mu * transmissibility(p))


# -- rewiring approximation -----------------------------------------------

def logistic_constants(mu: float, tau: float, alpha: float):
    return tau * (mu * (1.0 - alpha) + alpha), tau * alpha


def logistic_u(s, mu: float, tau: float, alpha: float):
    """Closed-form solution of ``du/ds = -u (A - B u)`` with ``u(0) = 1``."""
    A, B = logistic_constants(mu, tau, alpha)
    return A / (B + (A - B) * np.exp(A * np.asarray(s, dtype=float)))


class EvoFinalSize(NamedTuple):
    size: float
    below_critical: bool


def _crossing_ratio(t: float, A: float, B: float) -> float:
    # (u(t) - (1 - t)) / t, written with expm1 so it stays accurate as t -> 0
    if t == 0.0:
        return 1.0 - (A - B)
    e = math.exp(A * t)
    return 1.0 - (A - B) * (math.expm1(A * t) / t) / (B + (A - B) * e)


def evo_final_size_approx(p: EpidemicParams) -> EvoFinalSize:
    """Positive root of ``u(t) = 1 - t`` for the rewiring-augmented exploration.

    Uses the unrewired transmissibility ``tau`` and the loss ``alpha`` of
    :func:`rewiring_loss`, so ``tau * (1 - alpha)`` is the effective
    transmissibility. Returns ``(0, True)`` at or below the critical value.
    """
    tau = base_transmissibility(p)
    alpha = rewiring_loss(p)
    return evo_crossing(p.mu, tau, alpha)


def evo_crossing(mu: float, tau: float, alpha: float) -> EvoFinalSize:
    A, B = logistic_constants(mu, tau, alpha)
    if _crossing_ratio(0.0, A, B) >= 0.0:
        return EvoFinalSize(0.0, True)
    g = lambda t: _crossing_ratio(t, A, B)  # noqa: E731
    # g(1) = u(1) > 0, so [0, 1] brackets the root
    root = brentq(g, 0.0, 1.0, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return EvoFinalSize(root, False)


def r0_branching(mu: float, sigma2: float, lam: float, rho: float) -> float:
    """Branching approximation to R0 for a degree law with mean ``mu`` and
    variance ``sigma2`` under exponential infection times."""
    if mu <= 0 or sigma2 < 0:
        raise ParameterError("need mu > 0 and sigma2 >= 0")
    return lam / (lam + 1.0 + rho) * (mu - 1.0 + sigma2 / mu)


# -- report -----------------------------------------------------------------

@dataclass
class AnalyticReport:
    mu: float
    lam: float
    rho: float
    model: str
    variant: str
    tau: float
    alpha: float
    lambda_c: Optional[float]
    z0: float
    p_large: float
    final_size: float
    evo_final_size: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def analyze(p: EpidemicParams) -> AnalyticReport:
    try:
        lam_c = critical_lambda(p.mu, p.rho_eff, p.infection_model)
    except NoEpidemicError:
        lam_c = None
    p_large = epidemic_probability(p)
    evo = evo_final_size_approx(p).size if p.variant is Variant.EVO else None
    return AnalyticReport(
        mu=p.mu,
        lam=p.lam,
        rho=p.rho_eff,
        model=p.infection_model.value,
        variant=p.variant.value,
        tau=transmissibility(p),
        alpha=rewiring_loss(p),
        lambda_c=lam_c,
        z0=1.0 - p_large,
        p_large=p_large,
        final_size=final_size(p),
        evo_final_size=evo,
    )
