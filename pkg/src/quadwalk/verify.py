"""Drift-sign verification sweeps.

The classification predicts the sign of the expected one-compressed-step
increment of ``h**alpha`` along radius shells: with the growth exponent just
below ``|chi|`` and ``alpha`` in (0, 1) the drift is eventually negative
everywhere; with the exponent just above ``|chi|`` and ``alpha = 1/beta``
the boundary drift is eventually nonnegative.  The constants behind
"eventually" are existential, so the verifier sweeps compression factors and
radius shells and reports the first configuration whose confidence
intervals resolve the predicted signs.
"""

from __future__ import annotations

import math

from .classify import classify
from .errors import QuadwalkError
from .harmonic import choose_betas, drift_estimate
from .model import INTERIOR, WalkSpec, region_of

__all__ = ["verify_drift_signs", "probe_points"]


def probe_points(spec: WalkSpec, radii: list[int]) -> dict[str, list[tuple[int, int]]]:
    """Representative lattice states on each radius shell, by region."""
    R = spec.R
    interior, boundary1, boundary2 = [], [], []
    for rad in radii:
        d = max(R, round(rad / math.sqrt(2.0)))
        interior.append((d, d))
        ray = (max(R, round(rad * 0.894)), max(R, round(rad * 0.447)))
        if ray != (d, d):
            interior.append(ray)
        rows = {0, R - 1}
        for y in rows:
            boundary1.append((rad, y))
            boundary2.append((y, rad))
    interior = [p for p in interior if region_of(spec, *p) == INTERIOR]
    return {
        "interior": sorted(set(interior)),
        "boundary1": sorted(set(boundary1)),
        "boundary2": sorted(set(boundary2)),
    }


def _resolved_negative(est) -> bool:
    return est.mean + 1.96 * est.std_error < 0.0


def verify_drift_signs(
    spec: WalkSpec,
    alpha: float = 0.5,
    epsilon: float | None = None,
    samples: int = 200_000,
    seed: int = 0,
    base_radius: int | None = None,
    n_sweep: tuple[int, ...] = (1, 2, 4, 8),
    resolve_fraction: float = 0.9,
    interior_samples: int | None = None,
) -> dict:
    """Run the supermartingale and submartingale sign checks.

    Below-window check: for each compression factor in ``n_sweep``, estimate
    the ``h**alpha`` drift at every probe point; the check passes at the
    first factor where at least ``resolve_fraction`` of the points in every
    region have a 95% confidence interval strictly below zero.

    Above-window check (recurrent models only): with ``alpha = 1/beta`` the
    boundary drifts must not be significantly negative.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    report = classify(spec)
    if abs(report.chi) < 1e-9:
        raise QuadwalkError("model is critical (chi = 0); drift signs are not predicted")
    below = choose_betas(report.phi1, report.phi2, report.phi0, report.chi, epsilon, "below")

    if base_radius is None:
        base_radius = max(24, 3 * spec.R * max(n_sweep))
    radii = sorted({round(base_radius * (4.0 ** (k / 4.0))) for k in range(5)})
    points = probe_points(spec, radii)
    if interior_samples is None:
        interior_samples = samples

    estimates = []
    below_verdict = {"passed": False, "N": None, "fractions": {}}
    for N in n_sweep:
        round_estimates = []
        fractions = {}
        for region, pts in points.items():
            n_samples = interior_samples if region == "interior" else samples
            ests = [
                drift_estimate(spec, z, alpha, below, N, n_samples, seed + 7919 * N)
                for z in pts
            ]
            round_estimates.extend(
                {**e.to_dict(), "window": "below", "resolved": _resolved_negative(e)}
                for e in ests
            )
            fractions[region] = (
                sum(_resolved_negative(e) for e in ests) / len(ests) if ests else 1.0
            )
        estimates.extend(round_estimates)
        if all(f >= resolve_fraction for f in fractions.values()):
            below_verdict = {"passed": True, "N": N, "fractions": fractions}
            break
        below_verdict = {"passed": False, "N": N, "fractions": fractions}

    above_verdict = {"applicable": False}
    if report.chi > 0:
        above = choose_betas(report.phi1, report.phi2, report.phi0, report.chi, epsilon, "above")
        alpha_above = 1.0 / above.beta
        N_above = below_verdict["N"] or max(n_sweep)
        ok = 0
        total = 0
        for region in ("boundary1", "boundary2"):
            for z in points[region]:
                est = drift_estimate(
                    spec, z, alpha_above, above, N_above, samples, seed + 104729
                )
                resolved = est.mean + 1.96 * est.std_error >= 0.0
                estimates.append(
                    {**est.to_dict(), "window": "above", "resolved": resolved}
                )
                ok += resolved
                total += 1
        above_verdict = {
            "applicable": True,
            "passed": (ok / total >= resolve_fraction) if total else False,
            "N": N_above,
            "fraction": ok / total if total else None,
            "alpha": alpha_above,
        }

    return {
        "chi": report.chi,
        "alpha_below": alpha,
        "beta_below": below.beta,
        "radii": radii,
        "samples": samples,
        "estimates": estimates,
        "below_window": below_verdict,
        "above_window": above_verdict,
    }
