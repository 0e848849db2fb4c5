"""One-dimensional projection chains and their stationary measures.

Near a boundary the coordinate transverse to it evolves on ``Z+`` with
row-specific transition laws below the homogeneity depth ``R`` and a single
shift-invariant increment law above it.  The boundary-occupation weights
``pi`` on ``{0, ..., R-1}`` of that chain are what average the per-row drift
vectors into the effective boundary drift.

Three solvers are provided:

* ``embedded_exact`` — exact rational solve of the watched chain on
  ``{0, ..., R-1}``; valid when the interior transverse jump is at least -1,
  in which case excursions above re-enter through ``R-1`` and the watched
  chain depends on finitely many model entries.
* ``truncated_invariant`` — fold mass above a level ``K`` onto ``K``, power
  iterate, renormalize on ``{0, ..., R-1}``, and double ``K`` until the
  restriction is stable.
* ``occupation_mc`` — simulate the chain and report occupation-time ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse

from .errors import ConvergenceError, NotLeftContinuousError
from .model import WalkSpec

__all__ = [
    "ProjectionChain",
    "StationaryMeasure",
    "projection_chain",
    "embedded_exact",
    "truncated_invariant",
    "occupation_mc",
    "watched_matrix",
    "truncated_matrix",
]


@dataclass(frozen=True)
class ProjectionChain:
    """Transition data of a transverse-coordinate chain on ``Z+``.

    ``boundary_rows[i]`` is the exact landing pmf from state ``i < R``;
    ``interior_increment`` is the exact displacement pmf applying from every
    state ``i >= R``.
    """

    R: int
    boundary_rows: tuple[dict[int, Fraction], ...]
    interior_increment: dict[int, Fraction]

    def __post_init__(self):
        if len(self.boundary_rows) != self.R:
            raise ValueError("need one boundary row per state below R")
        for i, row in enumerate(self.boundary_rows):
            if sum(row.values()) != 1:
                raise ValueError(f"boundary row {i} does not sum to 1")
            if any(j < 0 for j in row):
                raise ValueError(f"boundary row {i} can land below 0")
        if sum(self.interior_increment.values()) != 1:
            raise ValueError("interior increment pmf does not sum to 1")
        if min(self.interior_increment) < -self.R:
            raise ValueError("interior transverse jump exceeds the homogeneity depth")

    def left_continuous(self) -> bool:
        """Interior transverse jumps at least -1, so excursions above the
        boundary block re-enter through state R-1."""
        return min(self.interior_increment) >= -1

    def row_pmf(self, i: int) -> dict[int, Fraction]:
        """Exact landing pmf from state ``i``."""
        if i < self.R:
            return dict(self.boundary_rows[i])
        return {i + d: p for d, p in self.interior_increment.items()}


@dataclass(frozen=True)
class StationaryMeasure:
    """Probability weights on ``{0, ..., R-1}`` with solver metadata.

    ``weights_exact`` is populated only by the exact solver; ``weights``
    always holds binary64 values.  ``residual`` is the solver-specific
    convergence diagnostic (0 for exact, last restriction change for the
    truncated solver, largest batch-means standard error for Monte Carlo).
    """

    weights: tuple[float, ...]
    method: str  # "exact-embedded" | "truncated" | "occupation-mc"
    residual: float
    weights_exact: tuple[Fraction, ...] | None = None
    trunc_level: int | None = None
    sample_count: int | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(w <= 0 for w in self.weights):
            raise ValueError(f"stationary weights must be strictly positive: {self.weights}")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"stationary weights sum to {sum(self.weights)}")

    def to_dict(self) -> dict:
        out = {
            "weights": list(self.weights),
            "method": self.method,
            "residual": self.residual,
            "diagnostics": dict(self.diagnostics),
        }
        if self.weights_exact is not None:
            out["weights_exact"] = [str(w) for w in self.weights_exact]
        if self.trunc_level is not None:
            out["diagnostics"]["trunc_level"] = self.trunc_level
        if self.sample_count is not None:
            out["diagnostics"]["sample_count"] = self.sample_count
        return out


def projection_chain(spec: WalkSpec, side: int) -> ProjectionChain:
    """Marginalize the walk onto the coordinate transverse to one boundary.

    ``side=1`` tracks the y coordinate near the horizontal boundary (rows
    from the horizontal laws), ``side=2`` the x coordinate near the vertical
    one.  Rows are exact landing pmfs; their sums are exactly 1.
    """
    if side not in (1, 2):
        raise ValueError(f"side must be 1 or 2, got {side}")
    axis = 1 if side == 1 else 0
    laws = spec.horizontal if side == 1 else spec.vertical
    rows = []
    for i, law in enumerate(laws):
        landing: dict[int, Fraction] = {}
        for d, p in law.marginal(axis).items():
            landing[i + d] = landing.get(i + d, Fraction(0)) + p
        rows.append(landing)
    return ProjectionChain(
        R=spec.R,
        boundary_rows=tuple(rows),
        interior_increment=spec.interior.marginal(axis),
    )


def watched_matrix(chain: ProjectionChain) -> list[list[Fraction]]:
    """Exact transition matrix of the chain watched on ``{0, ..., R-1}``,
    folding every landing at or above ``R-1`` onto ``R-1``."""
    R = chain.R
    q = [[Fraction(0)] * R for _ in range(R)]
    for i in range(R):
        for j, p in chain.boundary_rows[i].items():
            q[i][min(j, R - 1)] += p
    return q


def _solve_stationary_exact(q: list[list[Fraction]]) -> list[Fraction]:
    """Solve pi q = pi, sum(pi) = 1 by Gaussian elimination over rationals."""
    n = len(q)
    # Rows of (q^T - I), with the last equation replaced by normalization.
    a = [[q[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    a[n - 1] = [Fraction(1)] * n
    b = [Fraction(0)] * (n - 1) + [Fraction(1)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            raise ValueError("watched chain is reducible; stationary vector not unique")
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        b[col] *= inv
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [vr - factor * vc for vr, vc in zip(a[r], a[col])]
                b[r] -= factor * b[col]
    return b


def embedded_exact(chain: ProjectionChain) -> StationaryMeasure:
    """Exact stationary weights via the watched chain on ``{0, ..., R-1}``.

    Raises ``NotLeftContinuousError`` when the interior transverse jump can
    exceed one unit downward, since excursions could then re-enter the block
    anywhere and the watched transition matrix is no longer determined by
    the boundary rows alone.
    """
    if not chain.left_continuous():
        raise NotLeftContinuousError(
            "interior transverse jumps below -1: the watched chain is not exactly "
            "computable; use truncated_invariant or occupation_mc"
        )
    q = watched_matrix(chain)
    _check_irreducible(q)
    pi = _solve_stationary_exact(q)
    if any(w <= 0 for w in pi):
        raise ValueError(f"stationary solve produced non-positive weights {pi}")
    return StationaryMeasure(
        weights=tuple(float(w) for w in pi),
        method="exact-embedded",
        residual=0.0,
        weights_exact=tuple(pi),
    )


def _check_irreducible(q: list[list[Fraction]]) -> None:
    n = len(q)
    adj = [[j for j in range(n) if q[i][j] > 0] for i in range(n)]

    def reach(start, graph):
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in graph[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    radj = [[i for i in range(n) if j in adj[i]] for j in range(n)]
    if len(reach(0, adj)) != n or len(reach(0, radj)) != n:
        raise ValueError("watched chain on the boundary block is reducible")


def truncated_matrix(chain: ProjectionChain, K: int) -> np.ndarray:
    """Dense transition matrix of the chain truncated to ``{0, ..., K}`` with
    mass above ``K`` folded onto ``K`` (stochasticity preserved)."""
    P = np.zeros((K + 1, K + 1))
    for i in range(chain.R):
        for j, p in chain.boundary_rows[i].items():
            P[i, min(j, K)] += float(p)
    inc = sorted(chain.interior_increment.items())
    for i in range(chain.R, K + 1):
        for d, p in inc:
            P[i, min(i + d, K)] += float(p)
    return P


def _truncated_sparse(chain: ProjectionChain, K: int) -> sparse.csr_matrix:
    """Sparse variant of :func:`truncated_matrix`; rows above the boundary
    block are a folded band, so storage is linear in ``K``."""
    rows, cols, vals = [], [], []
    for i in range(chain.R):
        for j, p in chain.boundary_rows[i].items():
            rows.append(i)
            cols.append(min(j, K))
            vals.append(float(p))
    inc = sorted(chain.interior_increment.items())
    states = np.arange(chain.R, K + 1)
    for d, p in inc:
        rows.append(states)
        cols.append(np.minimum(states + d, K))
        vals.append(np.full(states.size, float(p)))
    rows = np.concatenate([np.atleast_1d(r) for r in rows])
    cols = np.concatenate([np.atleast_1d(c) for c in cols])
    vals = np.concatenate([np.atleast_1d(v) for v in vals])
    return sparse.csr_matrix((vals, (rows, cols)), shape=(K + 1, K + 1))


def _power_iterate(P, tol: float, budget: int) -> tuple[np.ndarray, float, int]:
    """Stationary vector of a stochastic matrix by damped power iteration.

    Damping with the identity removes periodicity without changing the
    stationary vector; the reported residual is for the undamped matrix.
    """
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    half = 0.5 * P
    sweeps = 0
    residual = math.inf
    check_every = 32
    while sweeps < budget:
        for _ in range(check_every):
            pi = 0.5 * pi + pi @ half
        sweeps += check_every
        residual = float(np.abs(pi @ P - pi).sum())
        if residual < tol:
            pi /= pi.sum()
            return pi, residual, sweeps
    raise ConvergenceError(
        f"power iteration residual {residual:.3e} above tol {tol:.1e} "
        f"after {sweeps} sweeps at truncation {n - 1}",
        residual=residual,
    )


def truncated_invariant(
    chain: ProjectionChain,
    K: int | None = None,
    tol: float = 1e-10,
    budget: int = 10**6,
) -> StationaryMeasure:
    """Stationary weights via truncation, power iteration, and K-doubling.

    Starting from ``K`` (default ``max(64, 8R)``), the chain is folded at
    ``K``, solved to power-iteration residual below ``tol``, and its
    restriction to ``{0, ..., R-1}`` renormalized.  ``K`` doubles until the
    restriction moves by less than ``tol`` in l1, which becomes the reported
    residual.
    """
    R = chain.R
    if K is None:
        K = max(64, 8 * R)
    if K < 4 * R:
        raise ValueError(f"truncation level {K} too small; need at least {4 * R}")
    prev = None
    history = []
    while True:
        P = _truncated_sparse(chain, K)
        pi, pi_residual, sweeps = _power_iterate(P, tol, budget)
        restricted = pi[:R] / pi[:R].sum()
        history.append({"K": K, "sweeps": sweeps, "power_residual": pi_residual})
        if prev is not None:
            change = float(np.abs(restricted - prev).sum())
            if change < tol:
                return StationaryMeasure(
                    weights=tuple(float(w) for w in restricted),
                    method="truncated",
                    residual=change,
                    trunc_level=K,
                    diagnostics={"stages": history},
                )
            if K >= 2**22:
                raise ConvergenceError(
                    f"restriction still moving by {change:.3e} at truncation {K}",
                    residual=change,
                )
        prev = restricted
        K *= 2


def occupation_mc(
    chain: ProjectionChain,
    steps: int,
    seed: int,
    batches: int = 64,
) -> StationaryMeasure:
    """Occupation-time ratios of the block states over a long simulation.

    The chain starts at 0 and runs for ``steps`` steps; the weight of block
    state ``i`` is its occupation count divided by the total block
    occupation.  The residual is the largest batch-means standard error.
    Interior excursions are simulated in vectorized blocks of i.i.d.
    displacements, so only the (rare) block visits cost Python time.
    """
    R = chain.R
    if steps < 1:
        raise ValueError("steps must be positive")
    rng = np.random.default_rng(np.random.PCG64(seed))

    row_vals = []
    row_probs = []
    for i in range(R):
        items = sorted(chain.boundary_rows[i].items())
        row_vals.append(np.array([j for j, _ in items]))
        row_probs.append(np.array([float(p) for _, p in items]))
    inc_items = sorted(chain.interior_increment.items())
    inc_vals = np.array([d for d, _ in inc_items])
    inc_probs = np.array([float(p) for _, p in inc_items])
    inc_probs = inc_probs / inc_probs.sum()

    visit_times: list[int] = []
    visit_states: list[int] = []
    state = 0
    n = 0
    block = 1 << 14
    while n < steps:
        if state < R:
            visit_times.append(n)
            visit_states.append(state)
            state = int(rng.choice(row_vals[state], p=row_probs[state]))
            n += 1
            continue
        draws = rng.choice(inc_vals, size=block, p=inc_probs)
        path = state + np.cumsum(draws)
        below = np.nonzero(path < R)[0]
        take = below[0] + 1 if below.size else block
        take = min(take, steps - n)
        state = int(path[take - 1])
        n += take

    if not visit_times:
        raise ConvergenceError(
            f"no visits to the boundary block in {steps} steps; "
            "the chain looks transient from state 0"
        )

    times = np.array(visit_times)
    states = np.array(visit_states)
    counts = np.bincount(states, minlength=R).astype(float)
    total = counts.sum()
    if total < 1e-3 * steps:
        note = (
            f"boundary block occupied for {int(total)} of {steps} steps (<0.1%); "
            "estimates may be noisy"
        )
    else:
        note = ""
    weights = counts / total

    batch_idx = np.minimum(times * batches // steps, batches - 1)
    per_batch = np.zeros((batches, R))
    np.add.at(per_batch, (batch_idx, states), 1.0)
    batch_tot = per_batch.sum(axis=1)
    used = batch_tot > 0
    ratios = per_batch[used] / batch_tot[used, None]
    if used.sum() >= 2:
        stderr = ratios.std(axis=0, ddof=1) / math.sqrt(used.sum())
        residual = float(stderr.max())
    else:
        stderr = np.full(R, np.nan)
        residual = math.inf

    if np.any(weights <= 0):
        raise ConvergenceError(
            f"some block states unvisited after {steps} steps: counts {counts.tolist()}"
        )
    diagnostics = {"stderr": stderr.tolist(), "block_visits": int(total)}
    if note:
        diagnostics["warning"] = note
    return StationaryMeasure(
        weights=tuple(float(w) for w in weights),
        method="occupation-mc",
        residual=residual,
        sample_count=steps,
        diagnostics=diagnostics,
    )
