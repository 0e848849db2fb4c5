import math
from fractions import Fraction as F

import numpy as np
import pytest

from quadwalk import (
    Mat2,
    ReflectionRegimeError,
    Vec2,
    boundary_drift,
    chi,
    classify,
    diagonal_increment,
    effective_drift,
    lindley_exponent,
    lindley_spec,
    mirror_spec,
    reflection_angles,
    transform_matrix,
    wedge_angle,
)
from quadwalk.projection import StationaryMeasure
from conftest import law

FIG1_SIGMA = Mat2(3.0, -1.0, -1.0, 3.0)


def oracle_transform(sigma: Mat2) -> np.ndarray:
    """Whitening map via reverse Cholesky: the unique upper-triangular T with
    positive diagonal and T sigma T^t = I, computed without the closed form."""
    S = np.array(sigma.rows())
    J = np.array([[0.0, 1.0], [1.0, 0.0]])
    L = np.linalg.cholesky(J @ S @ J)
    U = J @ L @ J  # upper-triangular factor of S = U U^t
    return np.linalg.inv(U)


def oriented_angle(w, z) -> float:
    """Angle t with R_t(w) parallel to z (counterclockwise positive)."""
    return math.atan2(w[0] * z[1] - w[1] * z[0], w[0] * z[0] + w[1] * z[1])


def oracle_angles(sigma: Mat2, mu1: Vec2, mu2: Vec2) -> tuple[float, float]:
    """Tilt angles measured directly as oriented angles between the whitened
    normals and whitened drifts."""
    T = oracle_transform(sigma)
    rot90 = np.array([[0.0, -1.0], [1.0, 0.0]])
    te1, te2 = T @ [1.0, 0.0], T @ [0.0, 1.0]
    v1, v2 = T @ [mu1.x, mu1.y], T @ [mu2.x, mu2.y]
    phi1 = oriented_angle(rot90 @ te1, v1)
    phi2 = oriented_angle(v2, rot90.T @ te2)
    return phi1, phi2


def random_pd_matrix(gen: np.random.Generator) -> Mat2:
    angle = gen.uniform(0, math.pi)
    ev = np.exp(gen.uniform(np.log(0.1), np.log(10.0), size=2))
    c, s = math.cos(angle), math.sin(angle)
    Q = np.array([[c, -s], [s, c]])
    S = Q @ np.diag(ev) @ Q.T
    return Mat2(S[0, 0], S[0, 1], S[1, 0], S[1, 1])


class TestTransform:
    def test_identity(self):
        T = transform_matrix(Mat2(1, 0, 0, 1))
        assert T.rows() == [[1.0, 0.0], [0.0, 1.0]]

    def test_fig1_matrix(self):
        T = transform_matrix(FIG1_SIGMA)
        c = 1.0 / (2.0 * math.sqrt(6.0))
        assert T.a11 == pytest.approx(3 * c, abs=1e-15)
        assert T.a12 == pytest.approx(1 * c, abs=1e-15)
        assert T.a21 == 0.0
        assert T.a22 == pytest.approx(2 * math.sqrt(2) * c, abs=1e-15)

    def test_diagonal(self):
        T = transform_matrix(Mat2(4, 0, 0, 1))
        assert T.rows() == [[0.5, 0.0], [0.0, 1.0]]

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="det"):
            transform_matrix(Mat2(1, 2, 2, 1))

    def test_whitens_random_matrices(self):
        gen = np.random.default_rng(1)
        for _ in range(300):
            sigma = random_pd_matrix(gen)
            T = transform_matrix(sigma)
            Tn = np.array(T.rows())
            S = np.array(sigma.rows())
            assert np.abs(Tn @ S @ Tn.T - np.eye(2)).max() < 1e-12
            assert T.a21 == 0.0 and T.a11 > 0 and T.a22 > 0


class TestWedgeAngle:
    def test_uncorrelated(self):
        assert wedge_angle(Mat2(1, 0, 0, 1)) == pytest.approx(math.pi / 2, abs=1e-15)

    def test_fig1(self):
        assert wedge_angle(FIG1_SIGMA) == pytest.approx(math.acos(1 / 3), abs=1e-15)

    def test_extreme_correlation(self):
        rho = 1 - 1e-9
        assert wedge_angle(Mat2(1, rho, rho, 1)) == pytest.approx(math.pi, abs=1e-4)


class TestDrifts:
    def test_point_mass_row(self):
        spec = _spec_with_row(law({(0, 1): F(1)}))
        assert boundary_drift(spec, 1, 0).as_tuple() == (0.0, 1.0)

    def test_symmetric_row(self):
        spec = _spec_with_row(law({(1, 1): F(1, 2), (-1, 1): F(1, 2)}))
        assert boundary_drift(spec, 1, 0).as_tuple() == (0.0, 1.0)

    def test_mirror_row_drift_vertical(self, mirror_eight):
        d = boundary_drift(mirror_eight, 1, 0)
        assert d.x == 0.0 and d.y > 0.0

    def test_effective_drift_r1_is_row_drift(self, mirror_eight):
        pi = StationaryMeasure(weights=(1.0,), method="exact-embedded", residual=0.0,
                               weights_exact=(F(1),))
        assert effective_drift(mirror_eight, 1, pi) == boundary_drift(mirror_eight, 1, 0)

    def test_effective_drift_convex_combination(self, r2_spec):
        pi = StationaryMeasure(weights=(1 / 3, 2 / 3), method="truncated", residual=0.0)
        d = effective_drift(r2_spec, 1, pi)
        assert d.x == pytest.approx(1 / 3, abs=1e-15)
        assert d.y == pytest.approx(1 / 6, abs=1e-15)

    def test_effective_drift_hand_example(self):
        # pi = (1/3, 2/3) against rows with means (0,3) and (3,0)
        rows = (
            law({(0, 3): F(1)}),
            law({(3, 0): F(1)}),
        )
        spec = _spec_with_rows_r2(rows)
        pi = StationaryMeasure(weights=(1 / 3, 2 / 3), method="truncated", residual=0.0)
        d = effective_drift(spec, 1, pi)
        assert (d.x, d.y) == (pytest.approx(2.0), pytest.approx(1.0))

    def test_unnormalized_weights_rejected(self, r2_spec):
        bad = StationaryMeasure(weights=(0.5, 0.5), method="truncated", residual=0.0)
        object.__setattr__(bad, "weights", (0.5, 0.6))
        with pytest.raises(ValueError):
            effective_drift(r2_spec, 1, bad)


def _spec_with_row(row):
    from quadwalk import WalkSpec
    col = law({(1, 0): F(1, 2), (0, 1): F(1, 4), (0, -1): F(1, 4)})
    corner = law({(1, 0): F(1, 2), (0, 1): F(1, 2)})
    return WalkSpec(R=1, interior=law({(1, 0): F(1, 4), (-1, 0): F(1, 4),
                                       (0, 1): F(1, 4), (0, -1): F(1, 4)}),
                    horizontal=(row,), vertical=(col,), corner=((corner,),))


def _spec_with_rows_r2(rows):
    from quadwalk import WalkSpec, default_corner_laws
    cols = (
        law({(1, 0): F(1, 2), (0, 1): F(1, 4), (0, -1): F(1, 4)}),
        law({(1, 0): F(1, 2), (0, 1): F(1, 4), (0, -1): F(1, 4)}),
    )
    return WalkSpec(R=2, interior=law({(1, 0): F(1, 4), (-1, 0): F(1, 4),
                                       (0, 1): F(1, 4), (0, -1): F(1, 4)}),
                    horizontal=rows, vertical=cols,
                    corner=default_corner_laws(2, rows, cols))


class TestReflectionAngles:
    def test_orthogonal_identity_transform(self):
        t1, t2, p1, p2 = reflection_angles(Mat2(1, 0, 0, 1), Vec2(0, 1), Vec2(1, 0))
        assert (t1, t2, p1, p2) == (0.0, 0.0, 0.0, 0.0)

    def test_fig1_side1(self):
        t1, _, p1, _ = reflection_angles(FIG1_SIGMA, Vec2(-1, 1), Vec2(2, 1))
        assert t1 == pytest.approx(math.pi / 4, abs=1e-15)
        assert p1 == pytest.approx(math.atan(1 / math.sqrt(2)), abs=1e-14)
        assert p1 > 0

    def test_fig1_side2(self):
        _, t2, _, p2 = reflection_angles(FIG1_SIGMA, Vec2(-1, 1), Vec2(2, 1))
        assert t2 == pytest.approx(-math.asin(1 / math.sqrt(5)), abs=1e-14)
        assert p2 == pytest.approx(math.atan(-5 / (4 * math.sqrt(2))), abs=1e-14)
        assert p2 < 0

    def test_outward_drift_rejected(self):
        with pytest.raises(ReflectionRegimeError):
            reflection_angles(FIG1_SIGMA, Vec2(1, -1), Vec2(1, 0))
        with pytest.raises(ReflectionRegimeError):
            reflection_angles(FIG1_SIGMA, Vec2(0, 1), Vec2(0, 1))

    def test_matches_geometric_oracle(self):
        gen = np.random.default_rng(7)
        for _ in range(500):
            sigma = random_pd_matrix(gen)
            mu1 = Vec2(gen.uniform(-2, 2), gen.uniform(0.1, 2))
            mu2 = Vec2(gen.uniform(0.1, 2), gen.uniform(-2, 2))
            _, _, p1, p2 = reflection_angles(sigma, mu1, mu2)
            o1, o2 = oracle_angles(sigma, mu1, mu2)
            assert p1 == pytest.approx(o1, abs=1e-9)
            assert p2 == pytest.approx(o2, abs=1e-9)

    def test_scale_invariance(self):
        gen = np.random.default_rng(11)
        for _ in range(100):
            sigma = random_pd_matrix(gen)
            mu1 = Vec2(gen.uniform(-2, 2), gen.uniform(0.1, 2))
            mu2 = Vec2(gen.uniform(0.1, 2), gen.uniform(-2, 2))
            c = float(np.exp(gen.uniform(-3, 3)))
            base = reflection_angles(sigma, mu1, mu2)
            scaled_sigma = Mat2(c * sigma.a11, c * sigma.a12, c * sigma.a21, c * sigma.a22)
            scaled = reflection_angles(scaled_sigma, mu1.scaled(c), mu2.scaled(c))
            assert wedge_angle(scaled_sigma) == pytest.approx(wedge_angle(sigma), abs=1e-12)
            for a, b in zip(base, scaled):
                assert a == pytest.approx(b, abs=1e-12)


class TestChi:
    def test_orthogonal_closed_form(self):
        # arccos(-1/2) = 2 pi / 3 gives chi = 1/2 under orthogonal reflection
        phi0 = math.acos(-0.5)
        p = phi0 - math.pi / 2
        assert chi(phi0, p, p) == pytest.approx(0.5, abs=1e-14)

    def test_uncorrelated_orthogonal_is_critical(self):
        phi0 = math.pi / 2
        p = phi0 - math.pi / 2
        assert chi(phi0, p, p) == 0.0

    def test_fig1_composition(self):
        # frozen from the formulas: phi1 = atan(1/sqrt 2), phi2 = atan(-5/(4 sqrt 2))
        phi0 = math.acos(1 / 3)
        p1 = math.atan(1 / math.sqrt(2))
        p2 = math.atan(-5 / (4 * math.sqrt(2)))
        value = chi(phi0, p1, p2)
        assert value == pytest.approx(-0.0880285, abs=1e-6)
        assert value < 0

    def test_invalid_wedge_angle(self):
        with pytest.raises(ValueError):
            chi(0.0, 0.1, 0.1)


class TestClassify:
    def test_mirror_half_recurrent(self, mirror_half):
        rep = classify(mirror_half)
        assert rep.verdict == "Recurrent"
        assert rep.chi == pytest.approx(0.5, abs=1e-12)
        assert rep.tail_exponent == pytest.approx(0.25, abs=1e-12)

    def test_lindley_negative_transient(self, lindley_neg_half):
        rep = classify(lindley_neg_half)
        assert rep.verdict == "Transient"
        assert rep.chi == pytest.approx(-1.0, abs=1e-12)

    def test_uncorrelated_mirror_critical(self, mirror_eight):
        rep = classify(mirror_eight)
        assert rep.verdict == "Critical"
        assert abs(rep.chi) < 1e-12

    def test_orthogonal_identity_on_builders(self):
        for builder in (mirror_spec, lindley_spec):
            for rho in (F(1, 4), F(1, 2), F(4, 5), F(-1, 4), F(-3, 5)):
                rep = classify(builder(diagonal_increment(rho)))
                expected = 2.0 - math.pi / math.acos(-float(rho))
                assert rep.chi == pytest.approx(expected, abs=1e-12)
                # orthogonality of effective drifts
                assert rep.mu_bar1.x == 0.0 and rep.mu_bar1.y > 0
                assert rep.mu_bar2.y == 0.0 and rep.mu_bar2.x > 0

    def test_consistency_with_closed_form_exponent(self):
        for rho in (0.25, 0.5, 0.8):
            frac = F(rho).limit_denominator(100)
            for builder in (mirror_spec, lindley_spec):
                rep = classify(builder(diagonal_increment(frac)))
                assert rep.chi / 2 == pytest.approx(lindley_exponent(float(frac)), abs=1e-12)

    def test_transform_contract_in_report(self, lindley_half):
        rep = classify(lindley_half)
        T = np.array(rep.transform.rows())
        S = np.array(rep.sigma.rows())
        assert np.abs(T @ S @ T.T - np.eye(2)).max() < 1e-12

    def test_report_serializes(self, mirror_half):
        d = classify(mirror_half).to_dict()
        assert d["verdict"] == "Recurrent"
        assert isinstance(d["pi1"]["weights"], list)
        text = classify(mirror_half).to_text()
        assert "chi" in text and "Recurrent" in text


class TestLindleyExponent:
    def test_half(self):
        assert lindley_exponent(0.5) == pytest.approx(0.25, abs=1e-15)

    def test_limits(self):
        assert lindley_exponent(1 - 1e-12) == pytest.approx(0.5, abs=1e-5)
        assert lindley_exponent(1e-12) == pytest.approx(0.0, abs=1e-9)

    def test_rejects_outside_recurrent_range(self):
        for rho in (-0.5, 0.0, 1.0, 1.5):
            with pytest.raises(ValueError):
                lindley_exponent(rho)
