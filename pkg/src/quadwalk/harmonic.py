"""Wedge-harmonic Lyapunov functions and Monte-Carlo drift verification.

The family ``h(r, theta) = r**beta * cos(beta*theta - beta1)`` (polar
coordinates in the whitened plane, ``beta = (beta1 + beta2) / phi0``) is
harmonic with gradient directions tunable at the two wedge edges.  Powers
``h**alpha`` of it applied to the whitened, boundary-time-compressed walk
are the sub/supermartingales whose drift signs certify the classification;
``drift_estimate`` measures those one-step drifts by simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .classify import transform_matrix
from .errors import QuadwalkError
from .model import Mat2, Vec2, WalkSpec, covariance, region_of
from .model import CORNER, HORIZONTAL, INTERIOR, VERTICAL
from .simulate import WalkSampler

__all__ = [
    "HarmonicParams",
    "DriftEstimate",
    "h_eval",
    "h_gradient",
    "h_hessian",
    "h_truncated",
    "choose_betas",
    "drift_estimate",
    "compressed_passage_times",
]


@dataclass(frozen=True)
class HarmonicParams:
    """Angle parameters of one member of the harmonic family."""

    beta1: float
    beta2: float
    phi0: float
    beta: float

    def __post_init__(self):
        half_pi = math.pi / 2
        if not (-half_pi < self.beta1 < half_pi and -half_pi < self.beta2 < half_pi):
            raise ValueError(f"edge angles ({self.beta1}, {self.beta2}) outside (-pi/2, pi/2)")
        if not (0.0 < self.phi0 < math.pi):
            raise ValueError(f"wedge angle {self.phi0} outside (0, pi)")
        expected = (self.beta1 + self.beta2) / self.phi0
        if abs(self.beta - expected) > 1e-14 * max(1.0, abs(expected)):
            raise ValueError(f"beta={self.beta} inconsistent with (beta1+beta2)/phi0={expected}")

    @classmethod
    def make(cls, beta1: float, beta2: float, phi0: float) -> "HarmonicParams":
        return cls(beta1, beta2, phi0, (beta1 + beta2) / phi0)


def h_eval(z: tuple[float, float], p: HarmonicParams) -> float:
    """Evaluate ``h`` at a point of the whitened plane (angle measured from
    the positive horizontal axis)."""
    x, y = z
    r = math.hypot(x, y)
    if r == 0.0:
        if p.beta > 0:
            return 0.0
        if p.beta == 0:
            return math.cos(p.beta1)
        raise ValueError("h undefined at the origin for negative growth exponent")
    theta = math.atan2(y, x)
    return r**p.beta * math.cos(p.beta * theta - p.beta1)


def h_gradient(z: tuple[float, float], p: HarmonicParams) -> Vec2:
    """Closed-form Cartesian gradient of ``h``."""
    x, y = z
    r = math.hypot(x, y)
    if r == 0.0:
        raise ValueError("gradient undefined at the origin")
    theta = math.atan2(y, x)
    psi = (p.beta - 1) * theta - p.beta1
    scale = p.beta * r ** (p.beta - 1)
    return Vec2(scale * math.cos(psi), -scale * math.sin(psi))


def h_hessian(z: tuple[float, float], p: HarmonicParams) -> Mat2:
    """Closed-form Hessian of ``h``; its trace vanishes identically."""
    x, y = z
    r = math.hypot(x, y)
    if r == 0.0:
        raise ValueError("Hessian undefined at the origin")
    theta = math.atan2(y, x)
    psi = (p.beta - 2) * theta - p.beta1
    c = p.beta * (p.beta - 1) * r ** (p.beta - 2)
    return Mat2(c * math.cos(psi), -c * math.sin(psi), -c * math.sin(psi), -c * math.cos(psi))


def h_truncated(z: tuple[float, float], p: HarmonicParams, b: float) -> float:
    """Level-capped variant ``min((2b)**beta, h(z))``."""
    if b <= 0:
        raise ValueError("truncation level must be positive")
    return min((2.0 * b) ** p.beta, h_eval(z, p))


def choose_betas(
    phi1: float,
    phi2: float,
    phi0: float,
    chi: float,
    epsilon: float | None = None,
    window: str = "below",
) -> HarmonicParams:
    """Pick edge angles so the growth exponent lands in the prescribed open
    window around the characteristic parameter.

    ``window="below"`` gives ``|beta|`` strictly inside ``(|chi|-eps, |chi|)``
    (the supermartingale direction), ``"above"`` gives
    ``(|chi|, |chi|+eps)``; each edge angle is placed at the midpoint of its
    admissible interval, offset ``eps*phi0/4`` from the reflection angle.
    """
    if chi == 0.0:
        raise ValueError("growth window undefined at chi = 0")
    if epsilon is None:
        epsilon = abs(chi) / 4.0
    if not (0.0 < epsilon < abs(chi)):
        raise ValueError(f"epsilon {epsilon} outside (0, |chi|) = (0, {abs(chi)})")
    if window not in ("below", "above"):
        raise ValueError(f"window must be 'below' or 'above', got {window!r}")
    offset = epsilon * phi0 / 4.0
    toward_zero = (window == "below") == (chi > 0)
    shift = -offset if toward_zero else offset
    beta1 = phi1 + shift
    beta2 = phi2 + shift
    params = HarmonicParams.make(beta1, beta2, phi0)
    if math.copysign(1.0, params.beta) != math.copysign(1.0, chi):
        raise QuadwalkError(
            f"selected exponent {params.beta} changed sign relative to chi={chi}; "
            "epsilon too large for this geometry"
        )
    return params


def _h_pow_vec(hx: np.ndarray, hy: np.ndarray, p: HarmonicParams, alpha: float,
               b: float | None) -> np.ndarray:
    r = np.hypot(hx, hy)
    if p.beta < 0 and np.any(r == 0.0):
        raise ValueError("walker reached the origin; h**alpha undefined for beta < 0")
    theta = np.arctan2(hy, hx)
    h = r**p.beta * np.cos(p.beta * theta - p.beta1)
    if b is not None:
        h = np.minimum((2.0 * b) ** p.beta, h)
    return h**alpha


@dataclass(frozen=True)
class DriftEstimate:
    """Monte-Carlo estimate of one compressed-step Lyapunov drift."""

    point: Vec2
    mean: float
    std_error: float
    samples: int
    alpha: float
    N: int
    region: str

    def to_dict(self) -> dict:
        return {
            "point": [self.point.x, self.point.y],
            "mean": self.mean,
            "std_error": self.std_error,
            "samples": self.samples,
            "alpha": self.alpha,
            "N": self.N,
            "region": self.region,
        }


_REGION_LABEL = {INTERIOR: "interior", HORIZONTAL: "boundary1", VERTICAL: "boundary2"}


def drift_estimate(
    spec: WalkSpec,
    z: tuple[int, int],
    alpha: float,
    params: HarmonicParams,
    N: int,
    samples: int,
    seed: int,
    truncation_b: float | None = None,
) -> DriftEstimate:
    """Mean and standard error of ``h**alpha`` over one compressed step.

    One compressed step means one real step when ``z`` is interior and ``N``
    real steps when it sits in a boundary strip (the compression that lets
    stabilized multi-step drifts replace the inhomogeneous one-step ones).
    Corner starts are rejected: the corner is a finite set with no
    asymptotic drift statement attached.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if N < 1:
        raise ValueError("compression factor must be at least 1")
    region = region_of(spec, *z)
    if region == CORNER:
        raise ValueError(f"start {z} lies in the corner block; probe a boundary strip instead")
    steps = 1 if region == INTERIOR else N

    T = transform_matrix(covariance(spec.interior))
    h0 = _h_pow_vec(
        np.array([T.a11 * z[0] + T.a12 * z[1]]),
        np.array([T.a21 * z[0] + T.a22 * z[1]]),
        params,
        alpha,
        truncation_b,
    )[0]

    sampler = WalkSampler(spec)
    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = min(samples, 1 << 18)
    while done < samples:
        m = min(chunk, samples - done)
        x = np.full(m, z[0], dtype=np.int64)
        y = np.full(m, z[1], dtype=np.int64)
        s0 = rng.stream_init(seed, np.arange(done, done + m, dtype=np.uint64))
        for t in range(steps):
            sampler.advance(x, y, rng.draw_at(s0, t))
        hx = T.a11 * x + T.a12 * y
        hy = T.a21 * x + T.a22 * y
        diff = _h_pow_vec(hx, hy, params, alpha, truncation_b) - h0
        total += diff.sum()
        total_sq += (diff * diff).sum()
        done += m

    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return DriftEstimate(
        point=Vec2(float(z[0]), float(z[1])),
        mean=float(mean),
        std_error=float(math.sqrt(var / samples)),
        samples=samples,
        alpha=alpha,
        N=N,
        region=_REGION_LABEL[region],
    )


def compressed_passage_times(
    spec: WalkSpec,
    start: tuple[int, int],
    radius: float,
    horizon: int,
    N: int,
    trials: int,
    seed: int,
) -> np.ndarray:
    """Passage times of the whitened, time-compressed walk into the ball of
    the given radius (measured on the whitened norm).

    Each compressed step consumes one real step from the interior and ``N``
    from the boundary strips or corner.  The bounded-time-change sandwich
    ``n <= real_time <= N*n`` is asserted along every trajectory.  Censored
    trials report ``horizon + 1``.
    """
    T = transform_matrix(covariance(spec.interior))
    sampler = WalkSampler(spec)
    R = spec.R
    x = np.full(trials, start[0], dtype=np.int64)
    y = np.full(trials, start[1], dtype=np.int64)
    s0 = rng.stream_init(seed, np.arange(trials, dtype=np.uint64))
    ctr = np.zeros(trials, dtype=np.uint64)
    real_time = np.zeros(trials, dtype=np.int64)
    ids = np.arange(trials, dtype=np.int64)
    tau = np.full(trials, horizon + 1, dtype=np.int64)
    r2 = radius * radius
    for n in range(1, horizon + 1):
        interior = (x >= R) & (y >= R)
        needed = np.where(interior, 1, N)
        for j in range(int(needed.max())):
            sub = needed > j
            if not sub.all():
                xs, ys = x[sub], y[sub]
                u = rng.draw_vec(s0[sub], ctr[sub])
                sampler.advance(xs, ys, u)
                x[sub], y[sub] = xs, ys
                ctr[sub] += np.uint64(1)
            else:
                u = rng.draw_vec(s0, ctr)
                sampler.advance(x, y, u)
                ctr += np.uint64(1)
        real_time += needed
        if not ((n <= real_time).all() and (real_time <= N * n).all()):
            raise AssertionError("time-change sandwich violated")
        hx = T.a11 * x + T.a12 * y
        hy = T.a21 * x + T.a22 * y
        hit = hx * hx + hy * hy <= r2
        if hit.any():
            tau[ids[hit]] = n
            keep = ~hit
            x, y, s0, ctr, real_time, ids = (
                x[keep], y[keep], s0[keep], ctr[keep], real_time[keep], ids[keep],
            )
            if ids.size == 0:
                break
    return tau
