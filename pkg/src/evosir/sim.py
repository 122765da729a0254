"""Event-driven simulation of SIR, delSIR and evoSIR on an EvolvingGraph.

Every S-I edge carries an infection clock (rate ``lam``) and, for the
deletion/rewiring variants, a breaking clock (rate ``rho``). Only the earlier
of the two matters, so a single Exp(lam + rho) time is drawn and its kind
decided by a coin. Recovery times are known at infection, so clocks that would
ring after the infected endpoint recovers are never queued. Queue entries are
invalidated lazily with per-edge version counters.
"""
from __future__ import annotations

import heapq
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from . import analytic
from .errors import ParameterError
from .graph import EvolvingGraph, generate_er
from .params import EpidemicParams, Variant

SUSCEPTIBLE, INFECTED, REMOVED = 0, 1, 2
_RECOVER, _INFECT, _BREAK = 0, 1, 2

EVENT_RECORD_MAX_N = 10_000
GRID_DT = 0.05
# "large" cut-off used when no large epidemic is predicted
SUBCRITICAL_LARGE_FRACTION = 0.05


class EdgeClockEvent(NamedTuple):
    """Queue entry. ``target`` is an edge id for clock events and a vertex for
    recoveries; ``seq`` breaks time ties in insertion order."""

    time: float
    seq: int
    kind: int
    target: int
    version: int
    susceptible: int


@dataclass
class EpidemicOutcome:
    final_removed: int
    peak_infected: int
    rewire_events: int
    delete_events: int
    extinction_time: float
    seed: int
    n: int
    trajectory: List[Tuple[float, int, int, int]] = field(default_factory=list, repr=False)

    @property
    def final_fraction(self) -> float:
        return self.final_removed / self.n


def derive_seed(base_seed: int, index: int) -> int:
    """Independent 63-bit seed for trial ``index``; stable as trial counts grow."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))


def run_epidemic(
    p: EpidemicParams,
    g: EvolvingGraph,
    seed: int,
    *,
    record: str = "auto",
    initial_infected: int = 1,
    audit: bool = False,
) -> EpidemicOutcome:
    """Run one epidemic to extinction. ``g`` is modified in place.

    ``record`` is ``"auto"`` (every state change for n <= 10^4, otherwise a
    0.05 time grid), ``"events"``, ``"grid"`` or ``"none"``. With
    ``audit=True`` compartment counts are checked against the status array
    after every event, and for static fixed-time runs each edge is checked to
    be S-I at most once.
    """
    n = g.n
    if n < 1:
        raise ParameterError("graph has no vertices")
    if not 1 <= initial_infected <= n:
        raise ParameterError(f"initial_infected must lie in [1, n], got {initial_infected}")
    if record == "auto":
        record = "events" if n <= EVENT_RECORD_MAX_N else "grid"
    if record not in ("events", "grid", "none"):
        raise ParameterError(f"unknown record mode {record!r}")

    rng = random.Random(seed)
    rand = rng.random
    expo = rng.expovariate
    randrange = rng.randrange

    lam = float(p.lam)
    rho = p.rho_eff
    rate = lam + rho
    p_inf = lam / rate if rate > 0 else 0.0
    fixed = p.fixed
    deleting = p.variant is Variant.DEL and rho > 0
    rewiring = p.variant is Variant.EVO and rho > 0

    inc = g._inc
    ea, eb = g._a, g._b
    version = [0] * g.capacity
    activations = [0] * g.capacity if audit else None
    status = bytearray(n)
    rec_time = [0.0] * n

    heap: list = []
    push, pop = heapq.heappush, heapq.heappop
    seq = 0

    S, I, R = n, 0, 0
    peak = 0
    rewires = deletions = 0
    traj: List[Tuple[float, int, int, int]] = []
    next_grid = 0.0

    def activate(e: int, s: int, i: int, t: float) -> None:
        # start the clocks of S-I edge e (s susceptible, i infected)
        nonlocal seq
        if activations is not None:
            activations[e] += 1
        if rate <= 0.0:
            return
        te = t + expo(rate)
        if te >= rec_time[i]:
            return
        kind = _INFECT if (rho == 0.0 or rand() < p_inf) else _BREAK
        seq += 1
        push(heap, EdgeClockEvent(te, seq, kind, e, version[e], s))

    def infect(x: int, t: float) -> None:
        nonlocal seq, S, I
        status[x] = INFECTED
        S -= 1
        I += 1
        tr = t + (1.0 if fixed else expo(1.0))
        rec_time[x] = tr
        seq += 1
        push(heap, EdgeClockEvent(tr, seq, _RECOVER, x, 0, 0))
        for e in inc[x]:
            version[e] += 1
            y = ea[e] + eb[e] - x
            if status[y] == SUSCEPTIBLE:
                activate(e, y, x, t)

    if initial_infected == 1:
        seeds = [randrange(n)]
    else:
        seeds = rng.sample(range(n), initial_infected)
    for x in seeds:
        infect(x, 0.0)
    peak = I
    if record != "none":
        traj.append((0.0, S, I, R))
        next_grid = GRID_DT

    t = 0.0
    while heap:
        t, _, kind, a, ver, s = pop(heap)
        if record == "grid":
            while next_grid < t:
                traj.append((next_grid, S, I, R))
                next_grid += GRID_DT
        if kind == _RECOVER:
            status[a] = REMOVED
            I -= 1
            R += 1
            for e in inc[a]:
                version[e] += 1
        else:
            if version[a] != ver:
                continue
            if kind == _INFECT:
                infect(s, t)
                if I > peak:
                    peak = I
            else:
                e = a
                i = ea[e] + eb[e] - s
                version[e] += 1
                if deleting:
                    g.delete_edge_id(e)
                    deletions += 1
                else:
                    w = randrange(n - 1)
                    if w >= s:
                        w += 1
                    g.move_endpoint(e, i, w)
                    rewires += 1
                    if status[w] == INFECTED:
                        activate(e, s, w, t)
                # counts are unchanged by edge breaking
                continue
        if audit:
            _audit_counts(status, S, I, R)
        if record == "events":
            traj.append((t, S, I, R))

    if record == "grid":
        traj.append((t, S, I, R))
    if audit:
        _audit_counts(status, S, I, R)
        if p.variant is Variant.STATIC and fixed and activations is not None:
            worst = max(activations, default=0)
            if worst > 1:
                raise AssertionError(f"an edge was S-I {worst} times in a static fixed-time run")

    return EpidemicOutcome(
        final_removed=R,
        peak_infected=peak,
        rewire_events=rewires,
        delete_events=deletions,
        extinction_time=t,
        seed=seed,
        n=n,
        trajectory=traj,
    )


def _audit_counts(status: bytearray, S: int, I: int, R: int) -> None:
    n = len(status)
    if S + I + R != n:
        raise AssertionError(f"S+I+R = {S + I + R} != n = {n}")
    counts = (status.count(SUSCEPTIBLE), status.count(INFECTED), status.count(REMOVED))
    if counts != (S, I, R):
        raise AssertionError(f"tracked counts {(S, I, R)} != status counts {counts}")


# -- campaigns ---------------------------------------------------------------

@dataclass
class TrialSummary:
    params: EpidemicParams
    base_seed: int
    threshold: float
    outcomes: List[EpidemicOutcome]

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    @property
    def large_mask(self) -> np.ndarray:
        return np.array([o.final_removed >= self.threshold * o.n for o in self.outcomes], dtype=bool)

    @property
    def n_large(self) -> int:
        return int(self.large_mask.sum())

    @property
    def p_large(self) -> float:
        return self.n_large / self.trials

    @property
    def p_large_se(self) -> float:
        q = self.p_large
        return math.sqrt(q * (1.0 - q) / self.trials)

    def fractions(self) -> np.ndarray:
        return np.array([o.final_fraction for o in self.outcomes])

    @property
    def large_mean(self) -> float:
        f = self.fractions()[self.large_mask]
        return float(f.mean()) if f.size else float("nan")

    @property
    def large_se(self) -> float:
        f = self.fractions()[self.large_mask]
        return float(f.std(ddof=1) / math.sqrt(f.size)) if f.size > 1 else float("nan")

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "threshold": self.threshold,
            "n_large": self.n_large,
            "p_large": self.p_large,
            "p_large_se": self.p_large_se,
            "large_mean": self.large_mean,
            "large_se": self.large_se,
            "mean_fraction": float(self.fractions().mean()),
        }


def default_threshold(p: EpidemicParams) -> float:
    """``(1 - z0) / 2`` with ``z0`` the extinction probability of the offspring
    generating function; a fixed small fraction when ``z0 = 1``."""
    q = analytic.epidemic_probability(p)
    return q / 2.0 if q > 0 else SUBCRITICAL_LARGE_FRACTION


def _one_trial(args) -> EpidemicOutcome:
    p, n, trial_seed, record = args
    g = generate_er(n, p.mu, np.random.default_rng(trial_seed))
    return run_epidemic(p, g, trial_seed, record=record)


def _map(fn, items: Sequence, jobs: int):
    if jobs is None or jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def run_trials(
    p: EpidemicParams,
    n: Optional[int] = None,
    trials: int = 200,
    base_seed: int = 0,
    large_threshold: Optional[float] = None,
    *,
    record: str = "none",
    jobs: int = 1,
) -> TrialSummary:
    """Independent epidemics, each on a fresh G(n, mu/n) seeded by ``derive_seed(base_seed, i)``."""
    n = n if n is not None else p.n
    if n is None:
        raise ParameterError("population size n is required")
    if trials < 1:
        raise ParameterError("need at least one trial")
    p = p.with_(n=n)
    threshold = default_threshold(p) if large_threshold is None else float(large_threshold)
    work = [(p, n, derive_seed(base_seed, i), record) for i in range(trials)]
    outcomes = _map(_one_trial, work, jobs)
    return TrialSummary(p, base_seed, threshold, outcomes)


@dataclass
class VariantComparison:
    del_fractions: np.ndarray
    evo_fractions: np.ndarray

    def summary(self) -> dict:
        d, e = self.del_fractions, self.evo_fractions
        k = len(d)
        diff = e - d
        se = lambda x: float(x.std(ddof=1) / math.sqrt(k)) if k > 1 else float("nan")  # noqa: E731
        return {
            "graphs": k,
            "del_mean": float(d.mean()),
            "del_se": se(d),
            "evo_mean": float(e.mean()),
            "evo_se": se(e),
            "diff_mean": float(diff.mean()),
            "diff_se": se(diff),
        }


def _paired_trial(args):
    p, n, trial_seed = args
    g = generate_er(n, p.mu, np.random.default_rng(trial_seed))
    h = g.copy()
    d = run_epidemic(p.with_(variant=Variant.DEL), g, trial_seed, record="none")
    e = run_epidemic(p.with_(variant=Variant.EVO), h, trial_seed, record="none")
    return d, e


def compare_variants(p: EpidemicParams, n: int, trials: int, base_seed: int = 0, *,
                     jobs: int = 1, return_outcomes: bool = False):
    """delSIR and evoSIR on the same generated graphs with the same event seed."""
    work = [(p.with_(n=n), n, derive_seed(base_seed, i)) for i in range(trials)]
    pairs = _map(_paired_trial, work, jobs)
    cmp = VariantComparison(
        np.array([d.final_fraction for d, _ in pairs]),
        np.array([e.final_fraction for _, e in pairs]),
    )
    if return_outcomes:
        return cmp, pairs
    return cmp
