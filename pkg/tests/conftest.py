"""Shared fixtures: canonical increment laws and walk specs.

The R=2 and R=3 specs are built so their transverse chains have hand-solvable
watched-chain stationary vectors ((1/3, 2/3) and (1/3, 1/3, 1/3)), giving
exact targets for the stationary-measure solvers.
"""

from fractions import Fraction as F

import pytest

from quadwalk import (
    IncrementLaw,
    WalkSpec,
    default_corner_laws,
    diagonal_increment,
    lindley_spec,
    mirror_spec,
)


def law(d):
    return IncrementLaw.from_dict(d)


FOUR_POINT = law({(1, 0): F(1, 4), (-1, 0): F(1, 4), (0, 1): F(1, 4), (0, -1): F(1, 4)})

EIGHT_NEIGHBOUR = law(
    {(dx, dy): F(1, 8) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)}
)


def make_r2_spec() -> WalkSpec:
    horizontal = (
        law({(0, 1): F(1, 2), (1, 0): F(1, 4), (-1, 0): F(1, 4)}),
        law({(1, 0): F(1, 2), (0, -1): F(1, 4), (0, 1): F(1, 4)}),
    )
    vertical = (
        law({(1, 0): F(1, 2), (0, 1): F(1, 4), (0, -1): F(1, 4)}),
        law({(0, 1): F(1, 2), (-1, 0): F(1, 4), (1, 0): F(1, 4)}),
    )
    return WalkSpec(
        R=2,
        interior=FOUR_POINT,
        horizontal=horizontal,
        vertical=vertical,
        corner=default_corner_laws(2, horizontal, vertical),
    )


def make_r3_spec() -> WalkSpec:
    horizontal = (
        law({(0, 1): F(1, 2), (1, 0): F(1, 4), (-1, 0): F(1, 4)}),
        law({(0, 1): F(1, 4), (0, -1): F(1, 4), (1, 0): F(1, 2)}),
        law({(-1, 2): F(1, 4), (1, -2): F(1, 4), (0, 0): F(1, 2)}),
    )
    vertical = (
        law({(1, 0): F(1, 2), (0, 1): F(1, 4), (0, -1): F(1, 4)}),
        law({(1, 0): F(1, 4), (-1, 0): F(1, 4), (0, 1): F(1, 2)}),
        law({(2, -1): F(1, 4), (-2, 1): F(1, 4), (0, 0): F(1, 2)}),
    )
    return WalkSpec(
        R=3,
        interior=FOUR_POINT,
        horizontal=horizontal,
        vertical=vertical,
        corner=default_corner_laws(3, horizontal, vertical),
    )


def transpose_spec(spec: WalkSpec) -> WalkSpec:
    """Swap the two coordinates everywhere."""

    def t(l: IncrementLaw) -> IncrementLaw:
        return IncrementLaw(tuple((dy, dx, p) for dx, dy, p in l.atoms))

    return WalkSpec(
        R=spec.R,
        interior=t(spec.interior),
        horizontal=tuple(t(l) for l in spec.vertical),
        vertical=tuple(t(l) for l in spec.horizontal),
        corner=tuple(
            tuple(t(spec.corner[x][y]) for x in range(spec.R)) for y in range(spec.R)
        ),
    )


@pytest.fixture(scope="session")
def mirror_half():
    return mirror_spec(diagonal_increment(F(1, 2)))


@pytest.fixture(scope="session")
def lindley_half():
    return lindley_spec(diagonal_increment(F(1, 2)))


@pytest.fixture(scope="session")
def lindley_neg_half():
    return lindley_spec(diagonal_increment(F(-1, 2)))


@pytest.fixture(scope="session")
def mirror_eight():
    return mirror_spec(EIGHT_NEIGHBOUR)


@pytest.fixture(scope="session")
def r2_spec():
    return make_r2_spec()


@pytest.fixture(scope="session")
def r3_spec():
    return make_r3_spec()
