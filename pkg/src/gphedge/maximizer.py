"""Global maximization of a cheap function over a box.

Two deterministic phases: dividing-rectangles search (potentially-optimal
selection by the Lipschitz-envelope criterion) followed by multistart
pattern search with a shrinking step, seeded from the best rectangles plus
random restarts.  Functions are evaluated on row-stacked batches,
``f(points (n, d)) -> values (n,)``, so GP-backed objectives stay vectorized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gp import NumericsError

_ENVELOPE_EPS = 1e-4
_MIN_STEP = 1e-12


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box with strictly ordered bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("every lower bound must be below its upper bound")
        lo = lo.copy()
        hi = hi.copy()
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def clip(self, x) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.lower) / self.span

    def from_unit(self, u) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.span

    def contains(self, x, atol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol)
        )


def unit_box(dimension: int) -> BoxDomain:
    return BoxDomain(np.zeros(dimension), np.ones(dimension))


@dataclass(frozen=True)
class MaximizerConfig:
    """Budgets for the two phases.  ``direct_budget=None`` means 500 per dim."""

    direct_budget: int | None = None
    multistart_count: int = 10
    local_steps: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.direct_budget is not None and self.direct_budget < 1:
            raise ValueError("direct_budget must be positive")
        if self.multistart_count < 1 or self.local_steps < 1:
            raise ValueError("all budgets must be positive")


def latin_hypercube(count: int, dimension: int, rng: np.random.Generator) -> np.ndarray:
    """Stratified points in the unit cube: one sample per axis-aligned slab."""
    u = np.empty((count, dimension))
    for j in range(dimension):
        u[:, j] = (rng.permutation(count) + rng.random(count)) / count
    return u


def grid_candidates(domain: BoxDomain, count: int, seed: int) -> np.ndarray:
    """Deterministic stratified candidate grid covering the box."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    return domain.from_unit(latin_hypercube(count, domain.dimension, rng))


def _potentially_optimal(measures, values, best):
    """Indices of one rectangle per measure class on the lower Lipschitz envelope."""
    classes = np.unique(measures)
    reps = np.empty(classes.size, dtype=int)
    for i, m in enumerate(classes):
        members = np.flatnonzero(measures == m)
        reps[i] = members[np.argmin(values[members])]
    rep_vals = values[reps]
    selected = []
    for i in range(classes.size):
        d_i, f_i = classes[i], rep_vals[i]
        smaller = slice(0, i)
        larger = slice(i + 1, classes.size)
        k_lo = 0.0
        if i > 0:
            k_lo = np.max((f_i - rep_vals[smaller]) / (d_i - classes[smaller]))
        k_hi = math.inf
        if i + 1 < classes.size:
            k_hi = np.min((rep_vals[larger] - f_i) / (classes[larger] - d_i))
        if k_lo > k_hi:
            continue
        if math.isfinite(k_hi) and f_i - k_hi * d_i > best - _ENVELOPE_EPS * abs(best):
            continue
        selected.append(reps[i])
    return selected


def _direct_minimize(g, dimension: int, budget: int):
    """Deterministic rectangle division over the unit cube; returns all samples.

    Rectangles are tracked as (center, per-dimension trisection level); the
    measure is the half-diagonal.  A sweep splits one potentially-optimal
    rectangle per measure class, trisecting along every longest dimension in
    order of the best probe values.  The sweep in progress always completes,
    so a larger budget strictly extends a smaller one.
    """
    center = np.full(dimension, 0.5)
    centers = [center]
    levels = [np.zeros(dimension, dtype=int)]
    values = [float(g(center[None, :])[0])]
    evals = 1
    while evals < budget:
        level_arr = np.array(levels)
        measure = 0.5 * np.linalg.norm(3.0 ** (-level_arr.astype(float)), axis=1)
        value_arr = np.array(values)
        selected = _potentially_optimal(measure, value_arr, value_arr.min())
        if not selected:
            break
        probes = []
        plan = []
        for r in selected:
            lev = levels[r]
            longest = np.flatnonzero(lev == lev.min())
            delta = 3.0 ** (-(lev.min() + 1))
            offset = len(probes)
            for j in longest:
                lo_pt = centers[r].copy()
                hi_pt = centers[r].copy()
                lo_pt[j] -= delta
                hi_pt[j] += delta
                probes.append(lo_pt)
                probes.append(hi_pt)
            plan.append((r, longest, delta, offset))
        probe_arr = np.array(probes)
        probe_vals = g(probe_arr)
        evals += len(probes)
        for r, longest, delta, offset in plan:
            pair_vals = probe_vals[offset : offset + 2 * longest.size]
            w = np.minimum(pair_vals[0::2], pair_vals[1::2])
            order = longest[np.argsort(w, kind="stable")]
            cur = levels[r].copy()
            for j in order:
                cur[j] += 1
                pos = offset + 2 * int(np.flatnonzero(longest == j)[0])
                for probe_idx in (pos, pos + 1):
                    centers.append(probe_arr[probe_idx])
                    levels.append(cur.copy())
                    values.append(float(probe_vals[probe_idx]))
            levels[r] = cur
    return np.array(centers), np.array(values)


def _pattern_search(g, starts: np.ndarray, steps: int):
    """Coordinate pattern search with a halving step, all starts in lockstep."""
    n, dimension = starts.shape
    x = starts.copy()
    fx = g(x)
    step = np.full(n, 0.25)
    eye = np.eye(dimension)
    for _ in range(steps):
        if np.all(step < _MIN_STEP):
            break
        moves = np.concatenate([eye, -eye], axis=0)
        probes = x[:, None, :] + step[:, None, None] * moves[None, :, :]
        np.clip(probes, 0.0, 1.0, out=probes)
        vals = g(probes.reshape(-1, dimension)).reshape(n, 2 * dimension)
        best_idx = np.argmin(vals, axis=1)
        best_val = vals[np.arange(n), best_idx]
        improved = best_val < fx
        x[improved] = probes[improved, best_idx[improved]]
        fx[improved] = best_val[improved]
        step[~improved] *= 0.5
    return x, fx


def _lexicographic_best(points: np.ndarray, values: np.ndarray) -> int:
    """Index of the minimum value; exact ties go to the smallest point."""
    best = values.min()
    ties = np.flatnonzero(values == best)
    if ties.size == 1:
        return int(ties[0])
    order = np.lexsort(points[ties].T[::-1])
    return int(ties[order[0]])


def maximize(
    f, domain: BoxDomain, config: MaximizerConfig = MaximizerConfig()
) -> tuple[np.ndarray, float]:
    """Best point and value of ``f`` over the box.

    ``f`` maps a batch of points (n, d) to values (n,).  The result is
    deterministic given ``config.seed`` and never leaves the box; it is at
    least as good as every rectangle sample and every refined start.
    """
    dimension = domain.dimension
    budget = config.direct_budget or 500 * dimension

    def g(u: np.ndarray) -> np.ndarray:
        x = domain.from_unit(u)
        vals = np.asarray(f(x), dtype=float).reshape(u.shape[0])
        finite = np.isfinite(vals)
        if not finite.all():
            offender = x[int(np.argmin(finite))]
            raise NumericsError(f"objective returned a non-finite value at {offender}")
        return -vals

    centers, values = _direct_minimize(g, dimension, budget)
    order = np.argsort(values, kind="stable")
    n_seed = min(max(config.multistart_count // 2, 1), centers.shape[0])
    starts = centers[order[:n_seed]]
    rng = np.random.default_rng(config.seed)
    if config.multistart_count > n_seed:
        extra = rng.random((config.multistart_count - n_seed, dimension))
        starts = np.vstack([starts, extra])
    refined, refined_vals = _pattern_search(g, starts, config.local_steps)
    all_points = np.vstack([centers, refined])
    all_values = np.concatenate([values, refined_vals])
    pick = _lexicographic_best(all_points, all_values)
    u = np.clip(all_points[pick], 0.0, 1.0)
    return domain.from_unit(u), float(-all_values[pick])
