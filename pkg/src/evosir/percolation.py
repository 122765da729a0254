"""Bond percolation and Martin-Löf style exploration processes.

The exploration processes never build a graph. Each step removes one vertex
from the active set (or, when it is empty, from the unexplored set) and draws
the number of unexplored vertices it reaches as a binomial against the
current unexplored count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Union

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .errors import ParameterError
from .graph import EvolvingGraph, RngLike

FIXED_THINNED = "FixedThinned"
EXPONENTIAL_PER_VERTEX = "ExponentialPerVertex"
REWIRING_AUGMENTED = "RewiringAugmented"

StopRule = Union[str, Callable[[int, int, int, int], bool]]


@dataclass
class ExplorationTrace:
    n: int
    variant: str
    U: np.ndarray
    A: np.ndarray
    a_zero_times: List[int]
    v: Optional[np.ndarray] = None
    stop_step: int = 0
    giant_end: Optional[int] = field(default=None)

    @property
    def u_series(self) -> np.ndarray:
        return self.U / self.n

    @property
    def r_series(self) -> np.ndarray:
        return np.arange(len(self.U)) / self.n

    @property
    def v_series(self) -> Optional[np.ndarray]:
        return self.v

    @property
    def R(self) -> np.ndarray:
        return np.arange(len(self.U))

    def sup_deviation(self, limit: Callable[[np.ndarray], np.ndarray]) -> float:
        """``max_t |U_t/n - limit(t/n)|`` over the recorded steps."""
        return float(np.max(np.abs(self.u_series - limit(self.r_series))))


def percolate(g: EvolvingGraph, tau: float, rng: RngLike = None) -> EvolvingGraph:
    """Copy of ``g`` keeping each edge independently with probability ``tau``."""
    if not 0.0 <= tau <= 1.0:
        raise ParameterError(f"tau must lie in [0, 1], got {tau}")
    rng = np.random.default_rng(rng)
    a, b = g.edge_arrays()
    keep = rng.random(len(a)) < tau
    out = EvolvingGraph(g.n)
    for u, v in zip(a[keep].tolist(), b[keep].tolist()):
        out.add_edge(u, v)
    return out


def _adjacency(g: EvolvingGraph) -> csr_matrix:
    a, b = g.edge_arrays()
    ones = np.ones(len(a), dtype=np.int8)
    return coo_matrix((ones, (a, b)), shape=(g.n, g.n)).tocsr()


def cluster_size(g: EvolvingGraph, start: int) -> int:
    """Number of vertices reachable from ``start`` (breadth-first search)."""
    if not 0 <= start < g.n:
        raise ParameterError(f"vertex {start} out of range for n={g.n}")
    order = breadth_first_order(_adjacency(g), start, directed=False, return_predecessors=False)
    return int(order.size)


def cluster_size_of_random_vertex(g: EvolvingGraph, seed: RngLike = None) -> int:
    rng = np.random.default_rng(seed)
    return cluster_size(g, int(rng.integers(g.n)))


def _stop_fn(stop_rule: StopRule, n: int):
    if callable(stop_rule):
        return stop_rule
    if stop_rule == "full":
        return lambda t, U, A, R: False
    if stop_rule == "giant":
        # skip the early small clusters, then stop when the active set empties
        warmup = math.sqrt(n)
        return lambda t, U, A, R: A == 0 and t > warmup
    raise ParameterError(f"unknown stop rule {stop_rule!r}")


def _explore(n: int, seed, stop_rule: StopRule, variant: str, step_draw) -> ExplorationTrace:
    if n < 1:
        raise ParameterError("n must be positive")
    rng = np.random.default_rng(seed)
    stop = _stop_fn(stop_rule, n)
    U_hist = np.empty(n + 1, dtype=np.int64)
    A_hist = np.empty(n + 1, dtype=np.int64)
    U, A = n - 1, 1
    U_hist[0], A_hist[0] = U, A
    zeros: List[int] = []
    t = 0
    while t < n:
        if A > 0:
            A -= 1
        else:
            U -= 1
        new = step_draw(rng, U)
        U -= new
        A += new
        t += 1
        U_hist[t], A_hist[t] = U, A
        assert U + A + t == n
        if A == 0:
            zeros.append(t)
            if stop(t, U, A, t):
                break
    trace = ExplorationTrace(n, variant, U_hist[: t + 1].copy(), A_hist[: t + 1].copy(), zeros, stop_step=t)
    if stop_rule == "giant" and zeros and zeros[-1] == t and t < n:
        trace.giant_end = t
    return trace


def explore_fixed(n: int, mu_bar: float, seed: RngLike = None, stop_rule: StopRule = "giant") -> ExplorationTrace:
    """Exploration of G(n, mu_bar/n): each step reveals Binomial(U_t, mu_bar/n) new vertices."""
    if mu_bar < 0 or mu_bar > n:
        raise ParameterError(f"mu_bar must lie in [0, n], got {mu_bar}")
    q = mu_bar / n
    return _explore(n, seed, stop_rule, FIXED_THINNED, lambda rng, U: int(rng.binomial(U, q)) if U > 0 else 0)


def explore_exponential(n: int, mu: float, lam: float, seed: RngLike = None,
                        stop_rule: StopRule = "giant") -> ExplorationTrace:
    """Exploration where each explored vertex draws its own infection time
    ``T ~ Exp(1)`` and transmits with probability ``1 - exp(-lam T)``."""
    if mu < 0 or lam < 0:
        raise ParameterError("mu and lam must be non-negative")

    def draw(rng, U):
        tau_s = -math.expm1(-lam * rng.exponential())
        return int(rng.binomial(U, min(1.0, mu * tau_s / n))) if U > 0 else 0

    return _explore(n, seed, stop_rule, EXPONENTIAL_PER_VERTEX, draw)


def explore_rewiring(n: int, mu: float, tau: float, alpha: float, seed: RngLike = None,
                     stop_rule: StopRule = "giant") -> ExplorationTrace:
    """Exploration with rewiring, treating unexplored vertices as exchangeable
    with mean degree ``v``.

    Each unexplored vertex meets the explored one with probability ``v/n``.
    A meeting infects with probability ``tau (1 - alpha)``, is rewired with
    probability ``tau alpha`` or lapses. A rewired edge lands on a uniform
    vertex; landing on an unexplored one raises the total unexplored degree
    by one. Infected vertices leave with the average degree, so only landings
    move ``v``.
    """
    if not 0.0 <= tau <= 1.0 or not 0.0 <= alpha < 1.0:
        raise ParameterError("need tau in [0, 1] and alpha in [0, 1)")
    rng = np.random.default_rng(seed)
    stop = _stop_fn(stop_rule, n)
    U_hist = np.empty(n + 1, dtype=np.int64)
    A_hist = np.empty(n + 1, dtype=np.int64)
    v_hist = np.empty(n + 1)
    U, A, v = n - 1, 1, float(mu)
    U_hist[0], A_hist[0], v_hist[0] = U, A, v
    zeros: List[int] = []
    p_inf_per = tau * (1.0 - alpha)
    p_rw_per = tau * alpha
    t = 0
    while t < n:
        if A > 0:
            A -= 1
        else:
            U -= 1
        q_inf = min(1.0, v * p_inf_per / n)
        new = int(rng.binomial(U, q_inf)) if U > 0 else 0
        if alpha > 0 and U - new > 0:
            # conditional on not being infected, a vertex is a rewired contact w.p. q_rw / (1 - q_inf)
            q_rw = min(1.0, v * p_rw_per / n / (1.0 - q_inf))
            rewired = int(rng.binomial(U - new, q_rw))
            if rewired:
                landed = int(rng.binomial(rewired, (U - new) / n))
                if landed:
                    v += landed / (U - new)
        U -= new
        A += new
        t += 1
        U_hist[t], A_hist[t], v_hist[t] = U, A, v
        assert U + A + t == n
        if A == 0:
            zeros.append(t)
            if stop(t, U, A, t):
                break
    trace = ExplorationTrace(n, REWIRING_AUGMENTED, U_hist[: t + 1].copy(), A_hist[: t + 1].copy(), zeros,
                             v=v_hist[: t + 1].copy(), stop_step=t)
    if stop_rule == "giant" and zeros and zeros[-1] == t and t < n:
        trace.giant_end = t
    return trace
