"""Recurrence/transience classification of a quadrant walk.

The verdict is read off the characteristic parameter
``chi = (phi1 + phi2) / phi0``, where ``phi0`` is the opening angle of the
image of the quadrant under the covariance-whitening map and ``phi1``,
``phi2`` measure how far the whitened effective boundary drifts tilt away
from the respective inward normals.  Positive ``chi`` means recurrent with
passage-time survival exponent ``chi / 2``; negative means transient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import HypothesisError, ReflectionRegimeError
from .model import IncrementLaw, Mat2, Vec2, WalkSpec, validate
from .projection import (
    StationaryMeasure,
    embedded_exact,
    occupation_mc,
    projection_chain,
    truncated_invariant,
)

__all__ = [
    "ClassificationReport",
    "transform_matrix",
    "wedge_angle",
    "boundary_drift",
    "boundary_drift_exact",
    "effective_drift",
    "reflection_angles",
    "chi",
    "classify",
    "stationary_measure",
]

RECURRENT, TRANSIENT, CRITICAL = "Recurrent", "Transient", "Critical"


def transform_matrix(sigma: Mat2) -> Mat2:
    """Upper-triangular whitening map ``T`` with ``T sigma T^t = I``.

    Uniqueness comes from fixing ``T e1`` along the positive horizontal axis
    and requiring a positive diagonal.  Explicitly, with
    ``s = sqrt(det sigma)``::

        T = [[s22, -s12], [0, s]] / (s * sqrt(s22))
    """
    if abs(sigma.a12 - sigma.a21) > 1e-12 * (1 + abs(sigma.a12)):
        raise ValueError(f"matrix not symmetric: {sigma}")
    det = sigma.det()
    if det <= 0 or sigma.a22 <= 0:
        raise ValueError(f"matrix not positive definite (det={det})")
    s = math.sqrt(det)
    sigma2 = math.sqrt(sigma.a22)
    return Mat2(
        sigma.a22 / (s * sigma2),
        -sigma.a12 / (s * sigma2),
        0.0,
        1.0 / sigma2,
    )


def wedge_angle(sigma: Mat2) -> float:
    """Opening angle ``arccos(-rho)`` of the whitened quadrant."""
    det = sigma.det()
    if det <= 0 or sigma.a11 <= 0:
        raise ValueError(f"matrix not positive definite (det={det})")
    rho = sigma.a12 / math.sqrt(sigma.a11 * sigma.a22)
    return math.acos(-rho)


def boundary_drift_exact(spec: WalkSpec, side: int, i: int) -> tuple[Fraction, Fraction]:
    laws = spec.horizontal if side == 1 else spec.vertical
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    return laws[i].mean_exact()


def boundary_drift(spec: WalkSpec, side: int, i: int) -> Vec2:
    """Mean displacement of boundary row ``i`` on the given side."""
    mx, my = boundary_drift_exact(spec, side, i)
    return Vec2(float(mx), float(my))


def effective_drift(spec: WalkSpec, side: int, pi: StationaryMeasure) -> Vec2:
    """Row drifts averaged against the stationary block weights.

    Uses exact rational arithmetic whenever the measure carries exact
    weights; otherwise binary64.
    """
    weights = pi.weights_exact if pi.weights_exact is not None else pi.weights
    if len(weights) != spec.R:
        raise ValueError(f"weights have length {len(weights)}, expected {spec.R}")
    total = sum(weights)
    if isinstance(total, Fraction):
        if total != 1:
            raise ValueError(f"weights sum to {total}, expected 1")
    elif abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights sum to {total}, expected 1")
    if pi.weights_exact is not None:
        mx = Fraction(0)
        my = Fraction(0)
        for i, w in enumerate(pi.weights_exact):
            dx, dy = boundary_drift_exact(spec, side, i)
            mx += w * dx
            my += w * dy
        return Vec2(float(mx), float(my))
    mx = my = 0.0
    for i, w in enumerate(pi.weights):
        d = boundary_drift(spec, side, i)
        mx += w * d.x
        my += w * d.y
    return Vec2(mx, my)


def reflection_angles(
    sigma: Mat2, mu_bar1: Vec2, mu_bar2: Vec2
) -> tuple[float, float, float, float]:
    """Tilt angles of the effective boundary drifts, pre and post whitening.

    ``theta1`` and ``theta2`` locate the raw drifts relative to the inward
    normals of the quadrant (``mu1 = |mu1| (-sin t1, cos t1)`` and
    ``mu2 = |mu2| (cos t2, -sin t2)``); ``phi1`` and ``phi2`` are the
    corresponding angles after the whitening map, measured from the wedge
    normals with the same orientation convention.

    Drifts that vanish or point outside the admissible half-planes
    (``mu1 . e2 > 0``, ``mu2 . e1 > 0``) are rejected: the angle formulas
    presuppose that generic regime.
    """
    if mu_bar1.y <= 0:
        raise ReflectionRegimeError(
            f"horizontal effective drift {mu_bar1.as_tuple()} does not point into "
            "the quadrant (need positive vertical component)"
        )
    if mu_bar2.x <= 0:
        raise ReflectionRegimeError(
            f"vertical effective drift {mu_bar2.as_tuple()} does not point into "
            "the quadrant (need positive horizontal component)"
        )
    s = math.sqrt(sigma.det())
    s22, kappa = sigma.a22, sigma.a12
    rho = kappa / math.sqrt(sigma.a11 * sigma.a22)
    # cos(phi0) = -rho and sin(phi0) = sqrt(1 - rho^2) hold exactly by the
    # definition of the wedge angle; using them avoids an acos/cos round trip.
    cos_phi0 = -rho
    sin_phi0 = math.sqrt(1.0 - rho * rho)

    theta1 = math.atan(-mu_bar1.x / mu_bar1.y)
    theta2 = math.atan(-mu_bar2.y / mu_bar2.x)

    phi1 = math.atan(
        (s22 * math.sin(theta1) + kappa * math.cos(theta1)) / (s * math.cos(theta1))
    )
    a = s22 * math.cos(theta2) + kappa * math.sin(theta2)
    b = s * math.sin(theta2)
    phi2 = math.atan(
        -(a * cos_phi0 - b * sin_phi0) / (a * sin_phi0 + b * cos_phi0)
    )
    return theta1, theta2, phi1, phi2


def chi(phi0: float, phi1: float, phi2: float) -> float:
    """Characteristic parameter ``(phi1 + phi2) / phi0``."""
    if not (0.0 < phi0 < math.pi):
        raise ValueError(f"wedge angle {phi0} outside (0, pi)")
    return (phi1 + phi2) / phi0


@dataclass(frozen=True)
class ClassificationReport:
    """Full classification output for one walk spec."""

    sigma: Mat2
    rho: float
    s: float
    transform: Mat2
    phi0: float
    pi1: StationaryMeasure
    pi2: StationaryMeasure
    mu_bar1: Vec2
    mu_bar2: Vec2
    theta1: float
    theta2: float
    phi1: float
    phi2: float
    chi: float
    verdict: str
    tail_exponent: float
    moment_note: str

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma.rows(),
            "rho": self.rho,
            "s": self.s,
            "transform": self.transform.rows(),
            "phi0": self.phi0,
            "pi1": self.pi1.to_dict(),
            "pi2": self.pi2.to_dict(),
            "mu_bar1": [self.mu_bar1.x, self.mu_bar1.y],
            "mu_bar2": [self.mu_bar2.x, self.mu_bar2.y],
            "theta1": self.theta1,
            "theta2": self.theta2,
            "phi1": self.phi1,
            "phi2": self.phi2,
            "chi": self.chi,
            "verdict": self.verdict,
            "tail_exponent": self.tail_exponent,
            "moment_note": self.moment_note,
        }

    def to_text(self) -> str:
        rows = [
            ("sigma", f"[[{self.sigma.a11:.6g}, {self.sigma.a12:.6g}], "
                      f"[{self.sigma.a21:.6g}, {self.sigma.a22:.6g}]]"),
            ("rho", f"{self.rho:.12g}"),
            ("s = sqrt(det sigma)", f"{self.s:.12g}"),
            ("transform", f"[[{self.transform.a11:.6g}, {self.transform.a12:.6g}], "
                          f"[{self.transform.a21:.6g}, {self.transform.a22:.6g}]]"),
            ("phi0 (wedge angle)", f"{self.phi0:.12g}"),
            ("pi1", f"{[round(w, 9) for w in self.pi1.weights]} ({self.pi1.method})"),
            ("pi2", f"{[round(w, 9) for w in self.pi2.weights]} ({self.pi2.method})"),
            ("mu_bar1", f"({self.mu_bar1.x:.12g}, {self.mu_bar1.y:.12g})"),
            ("mu_bar2", f"({self.mu_bar2.x:.12g}, {self.mu_bar2.y:.12g})"),
            ("theta1, theta2", f"{self.theta1:.12g}, {self.theta2:.12g}"),
            ("phi1, phi2", f"{self.phi1:.12g}, {self.phi2:.12g}"),
            ("chi", f"{self.chi:.12g}"),
            ("verdict", self.verdict),
            ("tail_exponent", f"{self.tail_exponent:.12g}"),
            ("moments", self.moment_note),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def stationary_measure(
    spec: WalkSpec,
    side: int,
    method: str = "auto",
    trunc_K: int | None = None,
    trunc_tol: float = 1e-10,
    mc_steps: int = 10**7,
    seed: int = 0,
) -> StationaryMeasure:
    """Stationary block weights for one side, by the requested solver.

    ``auto`` uses the exact watched-chain solve when the transverse interior
    jump allows it and falls back to truncation otherwise.
    """
    chain = projection_chain(spec, side)
    if method == "auto":
        method = "exact" if chain.left_continuous() else "truncate"
    if method == "exact":
        return embedded_exact(chain)
    if method == "truncate":
        return truncated_invariant(chain, K=trunc_K, tol=trunc_tol)
    if method == "mc":
        return occupation_mc(chain, steps=mc_steps, seed=seed + side)
    raise ValueError(f"unknown method {method!r}")


def classify(
    spec: WalkSpec,
    method: str = "auto",
    tol_crit: float = 1e-9,
    trunc: int | None = None,
    trunc_tol: float = 1e-10,
    mc_steps: int = 10**7,
    seed: int = 0,
) -> ClassificationReport:
    """Assemble the full classification report for a walk spec.

    The hard hypotheses (homogeneity bounds, zero drift, full rank) must
    pass; an unverified truncated irreducibility check is tolerated as a
    warning.  ``tol_crit`` is the half-width of the band around zero inside
    which ``chi`` is reported as Critical rather than forced to a side.
    """
    report = validate(spec, trunc)
    if not report.passed:
        failing = [
            name
            for name, ok in (
                ("homogeneity bounds", report.hypothesis_H),
                ("zero interior drift", report.zero_drift_D),
                ("positive-definite covariance", report.covariance_Sigma),
            )
            if not ok
        ]
        raise HypothesisError(f"model fails hard hypotheses: {', '.join(failing)}")

    sxx, sxy, syy = spec.interior.second_moment_exact()
    sigma = Mat2(float(sxx), float(sxy), float(sxy), float(syy))
    s = math.sqrt(sigma.det())
    rho = sigma.a12 / math.sqrt(sigma.a11 * sigma.a22)
    transform = transform_matrix(sigma)
    phi0 = wedge_angle(sigma)

    pi1 = stationary_measure(spec, 1, method, None, trunc_tol, mc_steps, seed)
    pi2 = stationary_measure(spec, 2, method, None, trunc_tol, mc_steps, seed)
    mu_bar1 = effective_drift(spec, 1, pi1)
    mu_bar2 = effective_drift(spec, 2, pi2)
    theta1, theta2, phi1, phi2 = reflection_angles(sigma, mu_bar1, mu_bar2)
    chi_value = chi(phi0, phi1, phi2)

    if chi_value > tol_crit:
        verdict = RECURRENT
        note = (
            f"return-time moments E[tau^g] finite for g < chi/2 = {chi_value / 2:.6g} "
            "and infinite above it; increment moments all finite (finite support)"
        )
    elif chi_value < -tol_crit:
        verdict = TRANSIENT
        note = "walk escapes with positive probability; tail exponent not applicable"
    else:
        verdict = CRITICAL
        note = (
            "chi is numerically zero: the classification is outside the method's "
            "range (second-order effects decide)"
        )

    return ClassificationReport(
        sigma=sigma,
        rho=rho,
        s=s,
        transform=transform,
        phi0=phi0,
        pi1=pi1,
        pi2=pi2,
        mu_bar1=mu_bar1,
        mu_bar2=mu_bar2,
        theta1=theta1,
        theta2=theta2,
        phi1=phi1,
        phi2=phi2,
        chi=chi_value,
        verdict=verdict,
        tail_exponent=chi_value / 2.0,
        moment_note=note,
    )
