"""Walk specification, increment laws, and hypothesis validation.

A walk on the quadrant is specified by a homogeneity depth ``R`` together
with one interior increment law, ``R`` horizontal-boundary laws (one per row
``y < R``), ``R`` vertical-boundary laws (one per column ``x < R``), and an
``R x R`` array of corner laws.  Probabilities are stored as exact rationals
so that drift and covariance checks involve no floating-point drift; only
angle computations downstream use binary64.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import SchemaError

__all__ = [
    "Vec2",
    "Mat2",
    "IncrementLaw",
    "WalkSpec",
    "ValidationReport",
    "interior_mean",
    "covariance",
    "validate",
    "region_of",
    "law_at",
    "default_corner_laws",
    "spec_to_json",
    "spec_from_json",
    "load_spec",
    "save_spec",
    "law_from_json",
    "load_law",
]

INTERIOR, HORIZONTAL, VERTICAL, CORNER = "interior", "horizontal", "vertical", "corner"


@dataclass(frozen=True)
class Vec2:
    """A point or vector of the plane with finite components."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite vector ({self.x}, {self.y})")

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def dot(self, other: "Vec2") -> float:
        return self.x * other.x + self.y * other.y

    def cross(self, other: "Vec2") -> float:
        return self.x * other.y - self.y * other.x

    def scaled(self, c: float) -> "Vec2":
        return Vec2(c * self.x, c * self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Mat2:
    """A real 2x2 matrix with finite entries."""

    a11: float
    a12: float
    a21: float
    a22: float

    def __post_init__(self):
        for v in (self.a11, self.a12, self.a21, self.a22):
            if not math.isfinite(v):
                raise ValueError("non-finite matrix entry")

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a21

    def matvec(self, v: Vec2) -> Vec2:
        return Vec2(self.a11 * v.x + self.a12 * v.y, self.a21 * v.x + self.a22 * v.y)

    def matmul(self, other: "Mat2") -> "Mat2":
        return Mat2(
            self.a11 * other.a11 + self.a12 * other.a21,
            self.a11 * other.a12 + self.a12 * other.a22,
            self.a21 * other.a11 + self.a22 * other.a21,
            self.a21 * other.a12 + self.a22 * other.a22,
        )

    def transpose(self) -> "Mat2":
        return Mat2(self.a11, self.a21, self.a12, self.a22)

    def rows(self) -> list[list[float]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]


def _as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, int):
        return Fraction(p)
    if isinstance(p, str):
        try:
            return Fraction(p)
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"cannot parse probability {p!r}") from exc
    raise SchemaError(
        f"probability must be a rational string or integer, got {type(p).__name__}"
    )


@dataclass(frozen=True)
class IncrementLaw:
    """Finite-support probability mass function on the integer lattice.

    Atoms are stored sorted lexicographically by ``(dx, dy)`` with exact
    rational weights that must be strictly positive and sum to one.
    """

    atoms: tuple[tuple[int, int, Fraction], ...]

    def __post_init__(self):
        if not self.atoms:
            raise SchemaError("increment law has no atoms")
        cleaned = []
        for atom in self.atoms:
            dx, dy, p = atom
            if not (isinstance(dx, int) and isinstance(dy, int)):
                raise SchemaError(f"atom displacement must be integer, got {atom!r}")
            p = _as_fraction(p)
            if p <= 0:
                raise SchemaError(f"atom {(dx, dy)} has non-positive probability {p}")
            cleaned.append((dx, dy, p))
        cleaned.sort(key=lambda a: (a[0], a[1]))
        keys = [(dx, dy) for dx, dy, _ in cleaned]
        if len(set(keys)) != len(keys):
            raise SchemaError("duplicate atoms in increment law")
        total = sum(p for _, _, p in cleaned)
        if total != 1:
            raise SchemaError(f"probabilities sum to {total}, expected exactly 1")
        object.__setattr__(self, "atoms", tuple(cleaned))

    @classmethod
    def from_dict(cls, pmf: dict[tuple[int, int], Fraction | int | str]) -> "IncrementLaw":
        return cls(tuple((dx, dy, _as_fraction(p)) for (dx, dy), p in pmf.items()))

    def as_dict(self) -> dict[tuple[int, int], Fraction]:
        return {(dx, dy): p for dx, dy, p in self.atoms}

    def mean_exact(self) -> tuple[Fraction, Fraction]:
        mx = sum((p * dx for dx, _, p in self.atoms), Fraction(0))
        my = sum((p * dy for _, dy, p in self.atoms), Fraction(0))
        return mx, my

    def second_moment_exact(self) -> tuple[Fraction, Fraction, Fraction]:
        """Entries (E[dx^2], E[dx dy], E[dy^2]) in exact arithmetic."""
        sxx = sum((p * dx * dx for dx, _, p in self.atoms), Fraction(0))
        sxy = sum((p * dx * dy for dx, dy, p in self.atoms), Fraction(0))
        syy = sum((p * dy * dy for _, dy, p in self.atoms), Fraction(0))
        return sxx, sxy, syy

    def min_dx(self) -> int:
        return min(dx for dx, _, _ in self.atoms)

    def min_dy(self) -> int:
        return min(dy for _, dy, _ in self.atoms)

    def marginal(self, axis: int) -> dict[int, Fraction]:
        """Exact marginal pmf of the displacement along ``axis`` (0 = x, 1 = y)."""
        out: dict[int, Fraction] = {}
        for dx, dy, p in self.atoms:
            key = dx if axis == 0 else dy
            out[key] = out.get(key, Fraction(0)) + p
        return out


def interior_mean(law: IncrementLaw) -> Vec2:
    """Mean displacement of a law, computed exactly then converted to binary64."""
    mx, my = law.mean_exact()
    return Vec2(float(mx), float(my))


def covariance(law: IncrementLaw) -> Mat2:
    """Second-moment matrix of a law (uncentred); equals the step covariance
    whenever the mean displacement is zero."""
    sxx, sxy, syy = law.second_moment_exact()
    return Mat2(float(sxx), float(sxy), float(sxy), float(syy))


@dataclass(frozen=True)
class WalkSpec:
    """Partially homogeneous walk on the quadrant.

    ``horizontal[y]`` applies at states ``(x, y)`` with ``x >= R`` and
    ``y < R``; ``vertical[x]`` at ``x < R <= y``; ``corner[x][y]`` in the
    finite corner block.  The interior law applies when both coordinates are
    at least ``R``.
    """

    R: int
    interior: IncrementLaw
    horizontal: tuple[IncrementLaw, ...]
    vertical: tuple[IncrementLaw, ...]
    corner: tuple[tuple[IncrementLaw, ...], ...]

    def __post_init__(self):
        if not isinstance(self.R, int) or self.R < 1:
            raise SchemaError(f"homogeneity depth must be a positive integer, got {self.R}")
        if len(self.horizontal) != self.R:
            raise SchemaError(
                f"expected {self.R} horizontal laws, got {len(self.horizontal)}"
            )
        if len(self.vertical) != self.R:
            raise SchemaError(f"expected {self.R} vertical laws, got {len(self.vertical)}")
        if len(self.corner) != self.R or any(len(row) != self.R for row in self.corner):
            raise SchemaError(f"corner laws must form an {self.R}x{self.R} array")

    def max_jump(self) -> int:
        """Largest coordinate displacement over every stored law."""
        laws = [self.interior, *self.horizontal, *self.vertical]
        laws += [law for row in self.corner for law in row]
        return max(
            max(abs(dx), abs(dy)) for law in laws for dx, dy, _ in law.atoms
        )


def region_of(spec: WalkSpec, x: int, y: int) -> str:
    if x >= spec.R:
        return INTERIOR if y >= spec.R else HORIZONTAL
    return VERTICAL if y >= spec.R else CORNER


def law_at(spec: WalkSpec, x: int, y: int) -> IncrementLaw:
    """One-step increment law at state ``(x, y)`` via region dispatch."""
    if x < 0 or y < 0:
        raise ValueError(f"state ({x}, {y}) outside the quadrant")
    if x >= spec.R:
        return spec.interior if y >= spec.R else spec.horizontal[y]
    return spec.vertical[x] if y >= spec.R else spec.corner[x][y]


def default_corner_laws(
    R: int,
    horizontal: Sequence[IncrementLaw],
    vertical: Sequence[IncrementLaw],
) -> tuple[tuple[IncrementLaw, ...], ...]:
    """Convenience corner block: reuse the nearest boundary law, clipped to
    displacements that stay in the quadrant and renormalized.

    The corner state ``(x, y)`` with ``x >= y`` copies ``horizontal[y]``
    (it sits against the horizontal boundary), otherwise ``vertical[x]``.
    """
    rows = []
    for x in range(R):
        col = []
        for y in range(R):
            base = horizontal[y] if x >= y else vertical[x]
            kept = [(dx, dy, p) for dx, dy, p in base.atoms if dx >= -x and dy >= -y]
            if not kept:
                raise SchemaError(
                    f"no admissible atoms remain when clipping the default corner law at ({x}, {y})"
                )
            total = sum(p for _, _, p in kept)
            col.append(IncrementLaw(tuple((dx, dy, p / total) for dx, dy, p in kept)))
        rows.append(tuple(col))
    return tuple(rows)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the model hypothesis checks.

    Failing entries carry a witness so that every failure is reproducible:
    offending atoms for the homogeneity bounds, the drift vector for the
    zero-drift check, and the determinant for the covariance check.
    """

    hypothesis_H: bool
    hypothesis_H_witnesses: tuple[tuple[str, int, int, tuple[int, int]], ...]
    zero_drift_D: bool
    drift_witness: Vec2
    covariance_Sigma: bool
    sigma_det: float
    irreducibility_I: str  # "verified-on-truncation" | "not-verified"
    irreducibility_trunc: int
    moment_exponents: tuple[float, float, float]
    left_continuous: bool

    @property
    def passed(self) -> bool:
        """Hard hypotheses only; irreducibility failures are warnings."""
        return self.hypothesis_H and self.zero_drift_D and self.covariance_Sigma

    def to_dict(self) -> dict:
        return {
            "hypothesis_H": {
                "passed": self.hypothesis_H,
                "witnesses": [
                    {"region": reg, "index": [i, j], "atom": list(atom)}
                    for reg, i, j, atom in self.hypothesis_H_witnesses
                ],
            },
            "zero_drift_D": {
                "passed": self.zero_drift_D,
                "drift": [self.drift_witness.x, self.drift_witness.y],
            },
            "covariance_Sigma": {"passed": self.covariance_Sigma, "det": self.sigma_det},
            "irreducibility_I": {
                "status": self.irreducibility_I,
                "trunc": self.irreducibility_trunc,
            },
            "moment_exponents": {
                "nu_interior": _inf_str(self.moment_exponents[0]),
                "nu_1": _inf_str(self.moment_exponents[1]),
                "nu_2": _inf_str(self.moment_exponents[2]),
            },
            "left_continuous": self.left_continuous,
            "passed": self.passed,
        }


def _inf_str(v: float):
    return "inf" if math.isinf(v) else v


def _homogeneity_witnesses(spec: WalkSpec):
    """Atoms that could carry the walk out of the quadrant, by region."""
    R = spec.R
    bad = []
    for dx, dy, _ in spec.interior.atoms:
        if dx < -R or dy < -R:
            bad.append((INTERIOR, -1, -1, (dx, dy)))
    for y, law in enumerate(spec.horizontal):
        for dx, dy, _ in law.atoms:
            if dx < -R or dy < -y:
                bad.append((HORIZONTAL, -1, y, (dx, dy)))
    for x, law in enumerate(spec.vertical):
        for dx, dy, _ in law.atoms:
            if dy < -R or dx < -x:
                bad.append((VERTICAL, x, -1, (dx, dy)))
    for x, row in enumerate(spec.corner):
        for y, law in enumerate(row):
            for dx, dy, _ in law.atoms:
                if dx < -x or dy < -y:
                    bad.append((CORNER, x, y, (dx, dy)))
    return tuple(bad)


def _check_irreducibility(spec: WalkSpec, trunc: int) -> bool:
    """Breadth-first communication check on the box ``[0, trunc]^2``.

    For each boundary side, states of the interior plus that side must
    communicate through paths avoiding the opposite boundary and the corner.
    Truncation artefacts are avoided by only requiring two-way reachability
    for states in the core box ``[0, trunc - 2R]^2``.
    """
    R = spec.R

    def allowed_1(x, y):  # interior + horizontal side
        return x >= R
    def allowed_2(x, y):  # interior + vertical side
        return y >= R

    for allowed, base in ((allowed_1, (R, 0)), (allowed_2, (0, R))):
        nodes = {
            (x, y)
            for x in range(trunc + 1)
            for y in range(trunc + 1)
            if allowed(x, y)
        }
        fwd: dict[tuple[int, int], list[tuple[int, int]]] = {z: [] for z in nodes}
        rev: dict[tuple[int, int], list[tuple[int, int]]] = {z: [] for z in nodes}
        for (x, y) in nodes:
            for dx, dy, _ in law_at(spec, x, y).atoms:
                w = (x + dx, y + dy)
                if w in nodes:
                    fwd[(x, y)].append(w)
                    rev[w].append((x, y))

        def bfs(start, adj):
            seen = {start}
            queue = deque([start])
            while queue:
                z = queue.popleft()
                for w in adj[z]:
                    if w not in seen:
                        seen.add(w)
                        queue.append(w)
            return seen

        reach_fwd = bfs(base, fwd)
        reach_rev = bfs(base, rev)
        core_limit = trunc - 2 * R
        core = {z for z in nodes if z[0] <= core_limit and z[1] <= core_limit}
        if not core or not core <= (reach_fwd & reach_rev):
            return False
    return True


def validate(spec: WalkSpec, trunc: int | None = None) -> ValidationReport:
    """Check the model hypotheses and report pass/fail with witnesses.

    Arrays and pmfs are validated structurally at construction; this
    routine decides the homogeneity bounds, zero interior drift, full-rank
    covariance, truncated irreducibility, and left-continuity.  The result
    is deterministic: identical specs produce identical reports.
    """
    if trunc is None:
        trunc = 8 * spec.R
    if trunc < 4 * spec.R:
        raise ValueError(f"truncation level {trunc} too small; need at least {4 * spec.R}")

    witnesses = _homogeneity_witnesses(spec)
    mx, my = spec.interior.mean_exact()
    sxx, sxy, syy = spec.interior.second_moment_exact()
    det_exact = sxx * syy - sxy * sxy
    irreducible = _check_irreducibility(spec, trunc)
    left_cont = spec.interior.min_dx() >= -1 and spec.interior.min_dy() >= -1

    return ValidationReport(
        hypothesis_H=not witnesses,
        hypothesis_H_witnesses=witnesses,
        zero_drift_D=(mx == 0 and my == 0),
        drift_witness=Vec2(float(mx), float(my)),
        covariance_Sigma=det_exact > 0,
        sigma_det=float(det_exact),
        irreducibility_I="verified-on-truncation" if irreducible else "not-verified",
        irreducibility_trunc=trunc,
        moment_exponents=(math.inf, math.inf, math.inf),
        left_continuous=left_cont,
    )


# ---------------------------------------------------------------------------
# JSON serialization.  Model files are a single object
#   {"R": int, "interior": [[dx, dy, "p/q"], ...],
#    "horizontal": [law, ...], "vertical": [law, ...],
#    "corner": [[law, ...], ...]}
# with laws as atom lists ordered lexicographically by (dx, dy), and
# probabilities as rational ("3/8") or decimal ("0.375") strings.
# ---------------------------------------------------------------------------

def _law_to_json(law: IncrementLaw) -> list:
    return [[dx, dy, str(p)] for dx, dy, p in law.atoms]


def law_from_json(data) -> IncrementLaw:
    if not isinstance(data, list):
        raise SchemaError("increment law must be a JSON array of [dx, dy, prob] triples")
    atoms = []
    for entry in data:
        if not (isinstance(entry, list) and len(entry) == 3):
            raise SchemaError(f"malformed atom {entry!r}")
        dx, dy, p = entry
        if isinstance(p, float):
            raise SchemaError(
                f"probability {p!r} is a JSON float; use a rational or decimal string"
            )
        if not (isinstance(dx, int) and isinstance(dy, int)):
            raise SchemaError(f"malformed atom {entry!r}")
        atoms.append((dx, dy, _as_fraction(p)))
    return IncrementLaw(tuple(atoms))


def spec_to_json(spec: WalkSpec) -> dict:
    return {
        "R": spec.R,
        "interior": _law_to_json(spec.interior),
        "horizontal": [_law_to_json(law) for law in spec.horizontal],
        "vertical": [_law_to_json(law) for law in spec.vertical],
        "corner": [[_law_to_json(law) for law in row] for row in spec.corner],
    }


def spec_from_json(data) -> WalkSpec:
    if not isinstance(data, dict):
        raise SchemaError("model file must contain a JSON object")
    missing = {"R", "interior", "horizontal", "vertical", "corner"} - set(data)
    if missing:
        raise SchemaError(f"model object missing keys: {sorted(missing)}")
    R = data["R"]
    if not isinstance(R, int):
        raise SchemaError(f"R must be an integer, got {R!r}")
    try:
        horizontal = tuple(law_from_json(law) for law in data["horizontal"])
        vertical = tuple(law_from_json(law) for law in data["vertical"])
        corner = tuple(
            tuple(law_from_json(law) for law in row) for row in data["corner"]
        )
    except TypeError as exc:
        raise SchemaError("boundary/corner entries must be arrays of laws") from exc
    return WalkSpec(
        R=R,
        interior=law_from_json(data["interior"]),
        horizontal=horizontal,
        vertical=vertical,
        corner=corner,
    )


def load_spec(path) -> WalkSpec:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"model file {path} is not valid JSON: {exc}") from exc
    return spec_from_json(data)


def save_spec(spec: WalkSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec_to_json(spec), fh, indent=1)
        fh.write("\n")


def load_law(path) -> IncrementLaw:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise SchemaError(f"cannot read increment file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"increment file {path} is not valid JSON: {exc}") from exc
    return law_from_json(data)
