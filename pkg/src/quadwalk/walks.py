"""Builders for the two canonical reflected walks on the quadrant.

Both walks absorb an i.i.d. driving increment ``zeta`` and push the result
back into the quadrant: the Lindley walk clamps each coordinate at zero
(``(z + zeta)+``), the mirror walk reflects it (``|z + zeta|``).  Either
way the result is a partially homogeneous walk whose homogeneity depth is
the largest downward jump of ``zeta``, with boundary laws obtained by
folding ``zeta`` through the respective map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import HypothesisError
from .model import IncrementLaw, Mat2, Vec2, WalkSpec, covariance, interior_mean

__all__ = [
    "IncrementReport",
    "validate_increment_A",
    "mirror_spec",
    "lindley_spec",
    "lindley_exponent",
]


@dataclass(frozen=True)
class IncrementReport:
    """Admissibility report for a driving increment law."""

    mean: Vec2
    mean_zero: bool
    R: int
    sigma: Mat2
    sigma_positive_definite: bool
    rho: float

    @property
    def passed(self) -> bool:
        return self.mean_zero and self.sigma_positive_definite and self.R >= 1

    def to_dict(self) -> dict:
        return {
            "mean": [self.mean.x, self.mean.y],
            "mean_zero": self.mean_zero,
            "R": self.R,
            "sigma": self.sigma.rows(),
            "sigma_positive_definite": self.sigma_positive_definite,
            "rho": self.rho,
            "passed": self.passed,
        }


def validate_increment_A(zeta: IncrementLaw) -> IncrementReport:
    """Check that a driving increment has zero mean, a positive-definite
    second-moment matrix, and bounded downward jumps.

    All moments are finite automatically (finite support), so only the mean,
    the matrix rank, and the jump bound ``R`` need deciding.  The report is
    informational; the builders reject laws whose report fails.
    """
    mx, my = zeta.mean_exact()
    sxx, sxy, syy = zeta.second_moment_exact()
    det = sxx * syy - sxy * sxy
    pd = sxx > 0 and det > 0
    rho = float(sxy) / math.sqrt(float(sxx) * float(syy)) if pd else math.nan
    R = max(-zeta.min_dx(), -zeta.min_dy(), 0)
    return IncrementReport(
        mean=Vec2(float(mx), float(my)),
        mean_zero=(mx == 0 and my == 0),
        R=R,
        sigma=Mat2(float(sxx), float(sxy), float(sxy), float(syy)),
        sigma_positive_definite=pd,
        rho=rho,
    )


def _fold_law(zeta: IncrementLaw, x_anchor: int | None, y_anchor: int | None, mirror: bool) -> IncrementLaw:
    """One-step law of the folded walk at a state whose coordinates sit at the
    given anchors (``None`` marks a coordinate deep enough to never fold)."""
    pmf: dict[tuple[int, int], Fraction] = {}
    for dx, dy, p in zeta.atoms:
        fx = dx if x_anchor is None else _fold_coord(x_anchor, dx, mirror)
        fy = dy if y_anchor is None else _fold_coord(y_anchor, dy, mirror)
        key = (fx, fy)
        pmf[key] = pmf.get(key, Fraction(0)) + p
    return IncrementLaw(tuple((dx, dy, p) for (dx, dy), p in pmf.items()))


def _fold_coord(anchor: int, d: int, mirror: bool) -> int:
    landed = anchor + d
    if landed >= 0:
        return d
    return (-landed if mirror else 0) - anchor


def _build_spec(zeta: IncrementLaw, mirror: bool) -> WalkSpec:
    report = validate_increment_A(zeta)
    if not report.passed:
        raise HypothesisError(
            "driving increment inadmissible: "
            f"mean=({report.mean.x}, {report.mean.y}), "
            f"positive_definite={report.sigma_positive_definite}, R={report.R}"
        )
    R = report.R
    horizontal = tuple(_fold_law(zeta, None, y, mirror) for y in range(R))
    vertical = tuple(_fold_law(zeta, x, None, mirror) for x in range(R))
    corner = tuple(
        tuple(_fold_law(zeta, x, y, mirror) for y in range(R)) for x in range(R)
    )
    return WalkSpec(R=R, interior=zeta, horizontal=horizontal, vertical=vertical, corner=corner)


def mirror_spec(zeta: IncrementLaw) -> WalkSpec:
    """Walk spec of the mirror-reflected walk ``M' = |M + zeta|``."""
    return _build_spec(zeta, mirror=True)


def lindley_spec(zeta: IncrementLaw) -> WalkSpec:
    """Walk spec of the Lindley walk ``L' = (L + zeta)+``."""
    return _build_spec(zeta, mirror=False)


def lindley_exponent(rho: float) -> float:
    """Closed-form passage-time tail exponent for the reflected walks.

    For increment correlation ``rho`` in ``(0, 1)`` (the recurrent regime)
    the survival probability of the return time decays like
    ``n ** -(1 - pi / (2 * arccos(-rho)))``.
    """
    if not (0.0 < rho < 1.0):
        raise ValueError(f"correlation {rho} outside the recurrent range (0, 1)")
    return 1.0 - math.pi / (2.0 * math.acos(-rho))


def diagonal_increment(rho: Fraction | str | float) -> IncrementLaw:
    """Unit-covariance four-point increment on the diagonal lattice with the
    requested correlation: atoms ``(+-1, +-1)`` weighted to give
    ``E[dx dy] = rho`` and identity marginal second moments."""
    r = Fraction(rho) if not isinstance(rho, float) else Fraction(rho).limit_denominator(10**6)
    if not (-1 < r < 1):
        raise ValueError(f"correlation {r} outside (-1, 1)")
    p = (1 + r) / 4
    q = (1 - r) / 4
    return IncrementLaw(((1, 1, p), (-1, -1, p), (1, -1, q), (-1, 1, q)))
