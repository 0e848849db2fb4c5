"""Monte-Carlo engine: stepping, passage times, survival curves, probes.

All heavy sampling decodes one uint64 counter-based draw per walker-step
against padded alias tables (one table per increment law, selected by
region).  Trial ``i`` under master seed ``s`` always consumes the same
stream regardless of chunking or thread count, so every estimator here is
bit-reproducible.  The jitted loops in :mod:`quadwalk.kernels` and the
vectorized :class:`WalkSampler` implement the same decode; a test pins them
to identical trajectories.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels, rng
from .model import IncrementLaw, Vec2, WalkSpec, law_at, region_of
from .model import CORNER, HORIZONTAL, INTERIOR, VERTICAL

__all__ = [
    "SimConfig",
    "TailEstimate",
    "WalkSampler",
    "step",
    "passage_time",
    "survival_curve",
    "survival_grid",
    "fit_loglog_slope",
    "fit_curve",
    "stabilization_probe",
    "excursion_max_probe",
    "StabilizationEstimate",
]


def _ball_threshold(r: float) -> int:
    """Integer threshold t with ||z|| <= r  iff  x^2 + y^2 <= t."""
    return int(math.floor(r * r + 1e-9))


@contextmanager
def _numba_threads(n: int):
    """Pin the worker count for a kernel call; n <= 0 keeps the default."""
    if n and n > 0:
        from numba import config, get_num_threads, set_num_threads

        old = get_num_threads()
        set_num_threads(min(n, config.NUMBA_NUM_THREADS))
        try:
            yield
        finally:
            set_num_threads(old)
    else:
        yield


def _alias_tables(pmf: list[tuple[int, int, Fraction]], k_pad: int):
    """Exact Vose alias construction, padded with zero-probability atoms to a
    common power-of-two table size so slot selection is a single shift."""
    atoms = list(pmf) + [(0, 0, Fraction(0))] * (k_pad - len(pmf))
    scaled = [p * k_pad for _, _, p in atoms]
    alias = list(range(k_pad))
    thresh = [Fraction(1)] * k_pad
    small = [i for i, q in enumerate(scaled) if q < 1]
    large = [i for i, q in enumerate(scaled) if q >= 1]
    while small and large:
        s = small.pop()
        big = large.pop()
        thresh[s] = scaled[s]
        alias[s] = big
        scaled[big] = scaled[big] - (1 - scaled[s])
        (small if scaled[big] < 1 else large).append(big)
    for i in small + large:
        thresh[i] = Fraction(1)
        alias[i] = i
    thr_u = [min(int(t * (1 << 32) + Fraction(1, 2)), 1 << 32) for t in thresh]
    dx = [a[0] for a in atoms]
    dy = [a[1] for a in atoms]
    return dx, dy, thr_u, alias


class WalkSampler:
    """Flattened alias tables plus vectorized region-dispatched stepping."""

    def __init__(self, spec: WalkSpec, check_closure: bool = False):
        self.spec = spec
        self.R = spec.R
        self.check_closure = check_closure
        laws: list[IncrementLaw] = [spec.interior]
        laws += list(spec.horizontal)
        laws += list(spec.vertical)
        laws += [spec.corner[x][y] for x in range(spec.R) for y in range(spec.R)]
        k_max = max(len(law.atoms) for law in laws)
        k_pad = 1 << max(1, (k_max - 1).bit_length())
        self._shift = np.uint64(64 - k_pad.bit_length() + 1)

        dx_all, dy_all, thr_all, alias_all = [], [], [], []
        for li, law in enumerate(laws):
            dx, dy, thr, alias = _alias_tables(list(law.atoms), k_pad)
            base = li * k_pad
            dx_all += dx
            dy_all += dy
            thr_all += thr
            alias_all += [base + a for a in alias]
        self._k_pad = k_pad
        self._dx = np.array(dx_all, dtype=np.int64)
        self._dy = np.array(dy_all, dtype=np.int64)
        self._thr = np.array(thr_all, dtype=np.uint64)
        self._alias = np.array(alias_all, dtype=np.int64)

        # law id by clamped coordinates: interior 0, horizontal rows 1..R,
        # vertical columns R+1..2R, corner block afterwards.
        R = spec.R
        table = np.empty((R + 1, R + 1), dtype=np.int64)
        for xc in range(R + 1):
            for yc in range(R + 1):
                if xc >= R and yc >= R:
                    table[xc, yc] = 0
                elif xc >= R:
                    table[xc, yc] = 1 + yc
                elif yc >= R:
                    table[xc, yc] = 1 + R + xc
                else:
                    table[xc, yc] = 1 + 2 * R + xc * R + yc
        self._law_table = table.reshape(-1)

    def kernel_args(self) -> tuple:
        """Positional table arguments shared by every jitted kernel."""
        return (
            np.int64(self.R),
            np.int64(self._k_pad),
            self._shift,
            self._thr,
            self._alias,
            self._dx,
            self._dy,
            self._law_table,
        )

    def law_ids(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        R = self.R
        xc = np.minimum(x, R)
        yc = np.minimum(y, R)
        return self._law_table[xc * (R + 1) + yc]

    def decode(self, u: np.ndarray, law_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map raw uint64 draws to displacements under the given laws."""
        slot = (u >> self._shift).astype(np.int64)
        idx = law_ids * self._k_pad + slot
        accept = (u & rng.U32_MASK) < self._thr[idx]
        j = np.where(accept, idx, self._alias[idx])
        return self._dx[j], self._dy[j]

    def advance(self, x: np.ndarray, y: np.ndarray, u: np.ndarray) -> None:
        """One in-place synchronized step of all walkers."""
        lids = self.law_ids(x, y)
        dx, dy = self.decode(u, lids)
        x += dx
        y += dy
        if self.check_closure and (x.min(initial=0) < 0 or y.min(initial=0) < 0):
            raise AssertionError("walker left the quadrant; spec violates closure")


def step(spec: WalkSpec, z: tuple[int, int], rand: np.random.Generator) -> tuple[int, int]:
    """Single region-dispatched step from ``z`` using a numpy Generator."""
    x, y = z
    law = law_at(spec, x, y)
    probs = np.array([float(p) for _, _, p in law.atoms])
    probs /= probs.sum()
    k = rand.choice(len(law.atoms), p=probs)
    dx, dy, _ = law.atoms[k]
    return (x + dx, y + dy)


@dataclass(frozen=True)
class SimConfig:
    """Inputs of a passage-time simulation batch."""

    start: tuple[int, int]
    radius: float
    horizon: int
    trials: int
    master_seed: int

    def __post_init__(self):
        if self.horizon < 1 or self.trials < 1:
            raise ValueError("horizon and trials must be positive")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.start[0] < 0 or self.start[1] < 0:
            raise ValueError("start must lie in the quadrant")


@dataclass(frozen=True)
class TailEstimate:
    """Empirical survival curve of a passage time with a log-log slope fit."""

    grid: tuple[tuple[int, float], ...]
    stderr: tuple[float, ...]
    survivors: tuple[int, ...]
    trials: int
    censored_fraction: float
    fitted_slope: float
    slope_ci: tuple[float, float]
    fit_window: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "grid": [[n, s] for n, s in self.grid],
            "stderr": list(self.stderr),
            "survivors": list(self.survivors),
            "trials": self.trials,
            "censored_fraction": self.censored_fraction,
            "fitted_slope": self.fitted_slope,
            "slope_ci": list(self.slope_ci),
            "fit_window": list(self.fit_window),
        }

    def to_csv(self) -> str:
        lines = ["n,survival,stderr"]
        for (n, s), se in zip(self.grid, self.stderr):
            lines.append(f"{n},{s:.10g},{se:.10g}")
        return "\n".join(lines) + "\n"


def _passage_times_array(
    spec: WalkSpec,
    start: tuple[int, int],
    r2: int,
    horizon: int,
    master_seed: int,
    trials: int,
    threads: int = 0,
    sampler: WalkSampler | None = None,
) -> np.ndarray:
    if sampler is None:
        sampler = WalkSampler(spec)
    tau = np.empty(trials, dtype=np.int64)
    with _numba_threads(threads):
        kernels.passage_times(
            np.int64(start[0]),
            np.int64(start[1]),
            np.int64(r2),
            np.int64(horizon),
            np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF),
            np.int64(0),
            np.int64(trials),
            *sampler.kernel_args(),
            tau,
        )
    return tau


def survival_grid(horizon: int, ratio: float = 1.25) -> np.ndarray:
    """Geometric grid 1, 2, ... rounded from powers of ``ratio``, capped at
    the horizon, duplicates removed."""
    pts = []
    v = 1.0
    while v <= horizon:
        pts.append(int(round(v)))
        v *= ratio
    pts.append(horizon)
    return np.unique(np.array(pts, dtype=np.int64))


def fit_loglog_slope(ns: np.ndarray, survival: np.ndarray) -> float:
    """Least-squares slope of log survival against log n."""
    lx = np.log(ns.astype(float))
    ly = np.log(survival)
    lx = lx - lx.mean()
    return float((lx * (ly - ly.mean())).sum() / (lx * lx).sum())


def _fit_window(ns: np.ndarray, survival: np.ndarray, survivors: np.ndarray):
    """Window [n_min, n_max]: from the first grid point at or below 90%
    survival (but at least 100) to the last with at least 100 survivors."""
    below = ns[survival <= 0.9]
    if below.size == 0:
        raise ValueError("survival never drops to 90%; no fit window")
    n_min = max(100, int(below[0]))
    enough = ns[survivors >= 100]
    if enough.size == 0:
        raise ValueError("no grid point keeps 100 survivors; no fit window")
    n_max = int(enough[-1])
    if n_max <= n_min:
        raise ValueError(f"empty fit window [{n_min}, {n_max}]")
    mask = (ns >= n_min) & (ns <= n_max)
    if mask.sum() < 3:
        raise ValueError(f"fit window [{n_min}, {n_max}] has fewer than 3 grid points")
    return n_min, n_max, mask


def survival_curve(spec: WalkSpec, cfg: SimConfig, threads: int = 0) -> TailEstimate:
    """Simulate passage times into the ball of radius ``cfg.radius`` and fit
    the log-log survival slope.

    The survival value at grid point n is the fraction of trials still
    outside the ball after n steps; right-censoring at the horizon only
    restricts the fit window, it never biases the recorded curve.  The slope
    confidence interval is a percentile bootstrap over trials (1000
    resamples).  Output is bit-identical for fixed (spec, cfg) regardless of
    ``threads``.
    """
    if cfg.radius <= spec.R * math.sqrt(2.0):
        raise ValueError(
            f"radius {cfg.radius} must exceed R*sqrt(2) = {spec.R * math.sqrt(2.0):.4g} "
            "for return-time semantics"
        )
    r2 = _ball_threshold(cfg.radius)
    if cfg.start[0] ** 2 + cfg.start[1] ** 2 <= r2:
        raise ValueError("start lies inside the target ball; every trial hits at time 0")

    tau = _passage_times_array(
        spec, cfg.start, r2, cfg.horizon, cfg.master_seed, cfg.trials, threads
    )

    ns = survival_grid(cfg.horizon)
    order = np.sort(tau)
    survivors = cfg.trials - np.searchsorted(order, ns, side="right")
    survival = survivors / cfg.trials
    stderr = np.sqrt(np.maximum(survival * (1 - survival), 0.0) / cfg.trials)
    censored = float((tau > cfg.horizon).mean())

    n_min, n_max, mask = _fit_window(ns, survival, survivors)
    slope = fit_loglog_slope(ns[mask], survival[mask])
    ci = _bootstrap_slope_ci(tau, ns[mask], cfg.master_seed)

    return TailEstimate(
        grid=tuple((int(n), float(s)) for n, s in zip(ns, survival)),
        stderr=tuple(float(se) for se in stderr),
        survivors=tuple(int(c) for c in survivors),
        trials=cfg.trials,
        censored_fraction=censored,
        fitted_slope=slope,
        slope_ci=ci,
        fit_window=(n_min, n_max),
    )


def _bootstrap_slope_ci(
    tau: np.ndarray, window_ns: np.ndarray, master_seed: int, resamples: int = 1000
) -> tuple[float, float]:
    """Percentile bootstrap of the window slope over trial resamples."""
    m = tau.size
    w = window_ns.size
    pos = np.searchsorted(window_ns, tau, side="left")
    lx = np.log(window_ns.astype(float))
    lx = lx - lx.mean()
    denom = (lx * lx).sum()
    gen = np.random.default_rng([master_seed & 0xFFFFFFFF, 0xB0075])
    slopes = np.empty(resamples)
    for b in range(resamples):
        idx = gen.integers(0, m, m)
        counts = np.bincount(pos[idx], minlength=w + 1)
        surv = m - np.cumsum(counts)[:w]
        ly = np.log(np.maximum(surv, 1) / m)
        slopes[b] = (lx * (ly - ly.mean())).sum() / denom
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return (float(lo), float(hi))


def fit_curve(
    ns: np.ndarray,
    survival: np.ndarray,
    trials: int,
    seed: int = 0,
    resamples: int = 1000,
) -> dict:
    """Fit the window slope of an externally supplied survival curve.

    Trial-level resampling is impossible from an aggregated curve, so the
    confidence interval is a residual bootstrap of the window fit instead.
    """
    ns = np.asarray(ns, dtype=np.int64)
    survival = np.asarray(survival, dtype=float)
    order = np.argsort(ns)
    ns, survival = ns[order], survival[order]
    survivors = np.round(survival * trials).astype(np.int64)
    n_min, n_max, mask = _fit_window(ns, survival, survivors)
    wx = np.log(ns[mask].astype(float))
    wy = np.log(survival[mask])
    slope = fit_loglog_slope(ns[mask], survival[mask])
    intercept = wy.mean() - slope * wx.mean()
    resid = wy - (intercept + slope * wx)
    gen = np.random.default_rng([seed & 0xFFFFFFFF, 0xF17])
    cx = wx - wx.mean()
    denom = (cx * cx).sum()
    slopes = np.empty(resamples)
    for b in range(resamples):
        yb = intercept + slope * wx + gen.choice(resid, size=resid.size, replace=True)
        slopes[b] = (cx * (yb - yb.mean())).sum() / denom
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return {
        "fitted_slope": slope,
        "slope_ci": [float(lo), float(hi)],
        "fit_window": [n_min, n_max],
        "trials": trials,
        "ci_method": "residual-bootstrap",
    }


def passage_time(
    spec: WalkSpec,
    start: tuple[int, int],
    r: float,
    horizon: int,
    master_seed: int,
    trial_index: int = 0,
) -> int | None:
    """First time the walk enters the closed ball of radius ``r``.

    Returns ``None`` when censored at the horizon.  Time 0 counts: a start
    inside the ball returns 0.  Trial ``i`` replays exactly the stream that
    ``survival_curve`` uses for its ``i``-th trial.
    """
    r2 = _ball_threshold(r)
    if start[0] ** 2 + start[1] ** 2 <= r2:
        return 0
    sampler = WalkSampler(spec)
    tau = np.empty(1, dtype=np.int64)
    kernels.passage_times(
        np.int64(start[0]),
        np.int64(start[1]),
        np.int64(r2),
        np.int64(horizon),
        np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF),
        np.int64(trial_index),
        np.int64(trial_index + 1),
        *sampler.kernel_args(),
        tau,
    )
    return int(tau[0]) if tau[0] <= horizon else None


@dataclass(frozen=True)
class StabilizationEstimate:
    """Monte-Carlo estimate of a normalized n-step boundary drift."""

    point: Vec2
    n: int
    estimate: Vec2
    stderr: Vec2
    samples: int
    mean_occupation: float

    def to_dict(self) -> dict:
        return {
            "point": [self.point.x, self.point.y],
            "n": self.n,
            "estimate": [self.estimate.x, self.estimate.y],
            "stderr": [self.stderr.x, self.stderr.y],
            "samples": self.samples,
            "mean_occupation": self.mean_occupation,
        }


def stabilization_probe(
    spec: WalkSpec,
    side: int,
    n: int,
    start: tuple[int, int],
    samples: int,
    seed: int,
    threads: int = 0,
) -> StabilizationEstimate:
    """Estimate the normalized n-step drift near one boundary.

    The estimand is the mean displacement over n steps divided by the
    expected occupation of the boundary region over steps 0..n-1 (a ratio of
    means, so the delta method supplies the standard errors).  The start
    must sit in the probed region with ``||start|| > 2 R n`` so the opposite
    boundary is out of reach.
    """
    region = HORIZONTAL if side == 1 else VERTICAL
    if region_of(spec, *start) != region:
        raise ValueError(f"start {start} is not in boundary region {side}")
    if math.hypot(*start) <= 2 * spec.R * n:
        raise ValueError(
            f"start norm {math.hypot(*start):.1f} must exceed 2*R*n = {2 * spec.R * n}"
        )
    sampler = WalkSampler(spec)
    out = np.empty((samples, 3), dtype=np.int64)
    with _numba_threads(threads):
        kernels.stabilization_sums(
            np.int64(start[0]),
            np.int64(start[1]),
            np.int64(n),
            np.int64(side),
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
            np.int64(samples),
            *sampler.kernel_args(),
            out,
        )
    disp = out[:, :2].astype(float)
    occ = out[:, 2].astype(float)
    mean_occ = occ.mean()
    if mean_occ == 0:
        raise ZeroDivisionError("no boundary occupation observed; cannot normalize")
    v = disp.sum(axis=0) / occ.sum()

    def _ratio_se(a: np.ndarray, ratio: float) -> float:
        var_a = a.var()
        var_b = occ.var()
        cov = ((a - a.mean()) * (occ - mean_occ)).mean()
        var = (var_a - 2 * ratio * cov + ratio * ratio * var_b) / (samples * mean_occ**2)
        return math.sqrt(max(var, 0.0))

    return StabilizationEstimate(
        point=Vec2(float(start[0]), float(start[1])),
        n=n,
        estimate=Vec2(float(v[0]), float(v[1])),
        stderr=Vec2(_ratio_se(disp[:, 0], v[0]), _ratio_se(disp[:, 1], v[1])),
        samples=samples,
        mean_occupation=float(mean_occ),
    )


def excursion_max_probe(
    spec: WalkSpec,
    start: tuple[int, int],
    r: float,
    s_grid: list[float],
    trials: int,
    horizon: int,
    seed: int,
    threads: int = 0,
) -> dict:
    """Tail of the excursion maximum: probability that the walk climbs past
    each level ``s`` before first returning to the ball of radius ``r``.

    Trials still outside the ball at the horizon contribute the maximum seen
    so far, which biases the very far tail down slightly; keep the horizon
    large relative to ``max(s_grid)**2``.  Levels at or below the start norm
    have probability exactly 1 (the maximum includes time 0).
    """
    if math.hypot(*start) <= r:
        raise ValueError("start must lie outside the return ball")
    r2 = _ball_threshold(r)
    sampler = WalkSampler(spec)
    max_sq = np.empty(trials, dtype=np.int64)
    censored = np.empty(trials, dtype=np.int64)
    with _numba_threads(threads):
        kernels.excursion_maxima(
            np.int64(start[0]),
            np.int64(start[1]),
            np.int64(r2),
            np.int64(horizon),
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
            np.int64(trials),
            *sampler.kernel_args(),
            max_sq,
            censored,
        )

    levels = sorted(float(s) for s in s_grid)
    probs = [
        float((max_sq >= _ball_threshold(s)).mean()) if s > 0 else 1.0 for s in levels
    ]
    strict = [
        (s, p) for s, p in zip(levels, probs) if s > math.hypot(*start) and p > 0
    ]
    slope = None
    if len(strict) >= 3:
        xs = np.log([s for s, _ in strict])
        ys = np.log([p for _, p in strict])
        xs = xs - xs.mean()
        slope = float((xs * (ys - ys.mean())).sum() / (xs * xs).sum())
    return {
        "start": list(start),
        "radius": r,
        "levels": levels,
        "probabilities": probs,
        "fitted_slope": slope,
        "trials": trials,
        "censored": int(censored.sum()),
    }
