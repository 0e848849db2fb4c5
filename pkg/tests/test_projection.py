import math
from fractions import Fraction as F

import numpy as np
import pytest

from quadwalk import NotLeftContinuousError
from quadwalk.projection import (
    ProjectionChain,
    embedded_exact,
    occupation_mc,
    projection_chain,
    truncated_invariant,
    truncated_matrix,
    watched_matrix,
)
from conftest import law, make_r2_spec, transpose_spec


class TestProjectionChain:
    def test_rows_sum_to_one_each_side(self, r2_spec, r3_spec):
        for spec in (r2_spec, r3_spec):
            for side in (1, 2):
                chain = projection_chain(spec, side)
                for row in chain.boundary_rows:
                    assert sum(row.values()) == 1
                assert sum(chain.interior_increment.values()) == 1

    def test_side2_equals_side1_of_transpose(self, r3_spec):
        direct = projection_chain(r3_spec, 2)
        via_transpose = projection_chain(transpose_spec(r3_spec), 1)
        assert direct == via_transpose

    def test_marginalization_r2(self, r2_spec):
        chain = projection_chain(r2_spec, 1)
        # row 0: dy in {+1: 1/2, 0: 1/2} -> landing {1: 1/2, 0: 1/2}
        assert chain.boundary_rows[0] == {0: F(1, 2), 1: F(1, 2)}
        # row 1: dy in {0: 1/2, -1: 1/4, +1: 1/4} shifted by 1
        assert chain.boundary_rows[1] == {0: F(1, 4), 1: F(1, 2), 2: F(1, 4)}
        assert chain.interior_increment == {-1: F(1, 4), 0: F(1, 2), 1: F(1, 4)}

    def test_left_continuity_flag(self, r2_spec):
        assert projection_chain(r2_spec, 1).left_continuous()
        heavy = ProjectionChain(
            R=2,
            boundary_rows=(
                {0: F(1, 2), 1: F(1, 2)},
                {0: F(1, 2), 2: F(1, 2)},
            ),
            interior_increment={-2: F(1, 2), 2: F(1, 2)},
        )
        assert not heavy.left_continuous()


class TestEmbeddedExact:
    def test_r1_trivial(self, mirror_half):
        pi = embedded_exact(projection_chain(mirror_half, 1))
        assert pi.weights == (1.0,)
        assert pi.weights_exact == (F(1),)
        assert pi.residual == 0.0

    def test_doubly_stochastic_2x2(self):
        chain = ProjectionChain(
            R=2,
            boundary_rows=(
                {0: F(1, 2), 1: F(1, 2)},
                {0: F(1, 2), 1: F(1, 2)},
            ),
            interior_increment={-1: F(1, 2), 1: F(1, 2)},
        )
        pi = embedded_exact(chain)
        assert pi.weights_exact == (F(1, 2), F(1, 2))

    def test_hand_solved_2x2(self):
        # watched matrix [[1/3, 2/3], [1/2, 1/2]] has stationary (3/7, 4/7)
        chain = ProjectionChain(
            R=2,
            boundary_rows=(
                {0: F(1, 3), 1: F(2, 3)},
                {0: F(1, 2), 1: F(1, 2)},
            ),
            interior_increment={-1: F(1, 2), 1: F(1, 2)},
        )
        assert watched_matrix(chain) == [[F(1, 3), F(2, 3)], [F(1, 2), F(1, 2)]]
        pi = embedded_exact(chain)
        assert pi.weights_exact == (F(3, 7), F(4, 7))

    def test_r2_spec_exact_value(self, r2_spec):
        pi = embedded_exact(projection_chain(r2_spec, 1))
        assert pi.weights_exact == (F(1, 3), F(2, 3))

    def test_r3_spec_exact_value(self, r3_spec):
        for side in (1, 2):
            pi = embedded_exact(projection_chain(r3_spec, side))
            assert pi.weights_exact == (F(1, 3), F(1, 3), F(1, 3))

    def test_rejects_heavy_downward_jumps(self):
        chain = ProjectionChain(
            R=2,
            boundary_rows=(
                {0: F(1, 2), 1: F(1, 2)},
                {0: F(1, 2), 1: F(1, 2)},
            ),
            interior_increment={-2: F(1, 2), 2: F(1, 2)},
        )
        with pytest.raises(NotLeftContinuousError):
            embedded_exact(chain)


class TestTruncatedInvariant:
    def test_r1_reflected_walk(self):
        chain = ProjectionChain(
            R=1,
            boundary_rows=({1: F(1)},),
            interior_increment={-1: F(1, 2), 1: F(1, 2)},
        )
        pi = truncated_invariant(chain)
        assert pi.weights == (1.0,)
        # the full truncated invariant vector is approximately uniform off 0:
        P = truncated_matrix(chain, 64)
        from quadwalk.projection import _power_iterate
        vec, _, _ = _power_iterate(P, 1e-12, 10**6)
        interior = vec[1:-1]
        assert interior.max() / interior.min() < 1.01

    def test_agrees_with_exact(self, r2_spec, r3_spec):
        for spec in (r2_spec, r3_spec):
            chain = projection_chain(spec, 1)
            exact = embedded_exact(chain)
            trunc = truncated_invariant(chain, tol=1e-10)
            assert np.abs(np.array(trunc.weights) - np.array(exact.weights)).max() < 1e-8

    def test_doubling_stops_with_stable_restriction(self, r3_spec):
        chain = projection_chain(r3_spec, 2)
        pi = truncated_invariant(chain, tol=1e-10)
        assert pi.residual < 1e-10
        assert pi.trunc_level >= 128

    def test_invariance_identity_on_window(self, r2_spec):
        chain = projection_chain(r2_spec, 1)
        K = 128
        P = truncated_matrix(chain, K)
        from quadwalk.projection import _power_iterate
        vec, residual, _ = _power_iterate(P, 1e-10, 10**6)
        assert np.abs(vec @ P - vec).sum() <= 1e-10

    def test_positivity(self, r2_spec, r3_spec):
        for spec in (r2_spec, r3_spec):
            pi = truncated_invariant(projection_chain(spec, 1))
            assert min(pi.weights) > 0


class TestOccupationMC:
    def test_r1_always_unit(self, mirror_half):
        pi = occupation_mc(projection_chain(mirror_half, 1), steps=10_000, seed=3)
        assert pi.weights == (1.0,)

    def test_agrees_with_exact_within_3_sigma(self, r2_spec):
        chain = projection_chain(r2_spec, 1)
        exact = np.array(embedded_exact(chain).weights)
        mc = occupation_mc(chain, steps=2_000_000, seed=11)
        stderr = np.array(mc.diagnostics["stderr"])
        assert (np.abs(np.array(mc.weights) - exact) < 3 * stderr + 1e-12).all()

    def test_two_seeds_agree(self, r3_spec):
        chain = projection_chain(r3_spec, 1)
        a = occupation_mc(chain, steps=1_000_000, seed=5)
        b = occupation_mc(chain, steps=1_000_000, seed=6)
        se = np.hypot(np.array(a.diagnostics["stderr"]), np.array(b.diagnostics["stderr"]))
        assert (np.abs(np.array(a.weights) - np.array(b.weights)) < 3 * se + 1e-12).all()

    def test_deterministic_given_seed(self, r2_spec):
        chain = projection_chain(r2_spec, 1)
        a = occupation_mc(chain, steps=100_000, seed=9)
        b = occupation_mc(chain, steps=100_000, seed=9)
        assert a.weights == b.weights


class TestEmbeddedChainInterpretation:
    def test_block_visit_transitions_match_watched_chain(self, r2_spec):
        """Simulating the transverse chain and recording block-visit states
        reproduces the watched transition matrix and its stationary vector."""
        chain = projection_chain(r2_spec, 1)
        R = chain.R
        gen = np.random.default_rng(17)
        rows = [sorted(r.items()) for r in chain.boundary_rows]
        inc = sorted(chain.interior_increment.items())
        inc_vals = np.array([d for d, _ in inc])
        inc_probs = np.array([float(p) for _, p in inc])

        state = 0
        visits = []
        for _ in range(200_000):
            if state < R:
                visits.append(state)
                vals, probs = zip(*rows[state])
                state = int(gen.choice(vals, p=np.array([float(p) for p in probs])))
            else:
                state += int(gen.choice(inc_vals, p=inc_probs))
        visits = np.array(visits)
        counts = np.zeros((R, R))
        np.add.at(counts, (visits[:-1], visits[1:]), 1.0)
        empirical = counts / counts.sum(axis=1, keepdims=True)
        exact = np.array([[float(q) for q in row] for row in watched_matrix(chain)])
        # empirical stationary vector of the visit sequence
        emp_pi = np.bincount(visits, minlength=R) / visits.size
        exact_pi = np.array(embedded_exact(chain).weights)
        n_transitions = counts.sum()
        assert np.abs(empirical - exact).max() < 3.5 / math.sqrt(n_transitions / R)
        assert np.abs(emp_pi - exact_pi).max() < 3.5 / math.sqrt(visits.size)
