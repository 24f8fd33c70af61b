import math

import numpy as np
import pytest

from mzi_lab import (
    DegenerateWorkingPoint,
    GaussianState,
    InterferometerConfig,
    InvalidArgument,
    LossModel,
    Observable,
    ResourceSpec,
    SingleModeState,
    double_hd_csv_sensitivity,
    homodyne_sensitivity,
    output_mode_a,
    output_state,
    parity_expectation,
    parity_sensitivity,
    qfi_closed,
    symmetric_moment,
)
from mzi_lab.measurements import sensitivity_profile, signal_and_variance


def single_mode(cov, mean):
    return SingleModeState(np.asarray(cov, dtype=float), np.asarray(mean, dtype=float))


class TestParityExpectation:
    def test_vacuum(self):
        assert parity_expectation(single_mode(np.eye(2) / 2.0, [0.0, 0.0])) == pytest.approx(1.0)

    def test_coherent(self):
        d = np.array([1.1, -0.4])
        state = single_mode(np.eye(2) / 2.0, d)
        assert parity_expectation(state) == pytest.approx(math.exp(-(d @ d)), rel=1e-12)

    def test_thermal(self):
        nbar = 1.7
        state = single_mode((2.0 * nbar + 1.0) * np.eye(2) / 2.0, [0.0, 0.0])
        assert parity_expectation(state) == pytest.approx(1.0 / (2.0 * nbar + 1.0), rel=1e-12)


class TestMomentExpansions:
    """The second and fourth output moments in closed trigonometric form."""

    def test_csv_p_quadrature_moments(self):
        alpha, r = 0.9, 0.7
        resource = ResourceSpec.csv(alpha, r)
        for phi in (0.4, 2.1):
            out = output_state(InterferometerConfig(resource, phi, LossModel.lossless()))
            expected_p2 = (
                4.0 + 4.0 * math.cos(phi) + 3.0 * math.exp(-2 * r)
                - 4.0 * math.exp(-2 * r) * math.cos(phi)
                + math.exp(-2 * r) * math.cos(2 * phi)
                + 2.0 * math.exp(2 * r) * math.sin(phi) ** 2
                + 8.0 * alpha**2 * math.sin(phi) ** 2
            ) / 16.0
            assert symmetric_moment(out, (1, 1)) == pytest.approx(expected_p2, rel=1e-12)
            # the signal magnitude alpha sin(phi)/sqrt(2); its sign is a
            # phase-direction convention
            assert abs(symmetric_moment(out, (1,))) == pytest.approx(
                alpha * math.sin(phi) / math.sqrt(2.0), rel=1e-12
            )

    def test_tmsv_x_squared_moment(self):
        s = 0.8
        resource = ResourceSpec.tmsv(s)
        for phi in (0.4, 2.1):
            out = output_state(InterferometerConfig(resource, phi, LossModel.lossless()))
            expected = (
                math.cosh(s) ** 2 + math.sinh(s) ** 2 - math.sin(phi) ** 2 * math.sinh(2 * s)
            ) / 2.0
            assert symmetric_moment(out, (0, 0)) == pytest.approx(expected, rel=1e-12)

    def test_tmsv_product_moments(self):
        s = 0.8
        resource = ResourceSpec.tmsv(s)
        for phi in (0.3, 1.1, 2.7):
            out = output_state(InterferometerConfig(resource, phi, LossModel.lossless()))
            assert symmetric_moment(out, (0, 2)) == pytest.approx(
                math.sinh(2 * s) * math.cos(phi) ** 2 / 2.0, rel=1e-12
            )
            expected_fourth = (
                (17.0 + 4.0 * math.cos(2 * phi)) * math.cosh(4 * s)
                - 1.0 - 4.0 * math.cos(2 * phi)
                + 6.0 * math.cos(4 * phi) * math.sinh(2 * s) ** 2
                - 16.0 * math.sin(phi) ** 2 * math.sinh(4 * s)
            ) / 64.0
            assert symmetric_moment(out, (0, 0, 2, 2)) == pytest.approx(expected_fourth, rel=1e-12)


class TestParitySensitivity:
    def test_variance_is_involution_complement(self):
        cfg = InterferometerConfig(ResourceSpec.tmsv(0.8), 1.1, LossModel.symmetric(0.9))
        result = parity_sensitivity(cfg)
        signal = parity_expectation(output_mode_a(cfg))
        assert result.variance == pytest.approx(1.0 - signal**2, abs=1e-12)
        assert 0.0 <= result.variance <= 1.0

    def test_error_identity(self):
        cfg = InterferometerConfig(ResourceSpec.csv(1.0, 0.6), 2.5, LossModel.one_arm(0.8))
        result = parity_sensitivity(cfg)
        assert result.error == pytest.approx(result.variance / result.slope**2, rel=1e-12)

    def test_degenerate_point_raises(self):
        # For a lossless TMSV the parity expectation peaks at phi = pi/2.
        cfg = InterferometerConfig(ResourceSpec.tmsv(0.8), math.pi / 2.0, LossModel.lossless())
        with pytest.raises(DegenerateWorkingPoint):
            parity_sensitivity(cfg)


class TestHomodyneSensitivity:
    def test_csv_p_quadrature_at_pi(self):
        # At phi = pi the output mode a is a pure squeezed state and the
        # sensitivity equals 1/(alpha^2 e^{2r}) exactly.
        alpha, r = 1.1, 0.8
        cfg = InterferometerConfig(ResourceSpec.csv(alpha, r), math.pi, LossModel.lossless())
        result = homodyne_sensitivity(cfg, Observable.quadrature(math.pi / 2.0))
        assert result.error == pytest.approx(1.0 / (alpha**2 * math.exp(2 * r)), rel=1e-9)

    def test_error_identity(self):
        cfg = InterferometerConfig(ResourceSpec.tmsv(0.8), 0.9, LossModel.symmetric(0.8))
        result = homodyne_sensitivity(cfg, Observable.quadrature_squared(0.0))
        assert result.error == pytest.approx(result.variance / result.slope**2, rel=1e-12)

    def test_parity_observable_rejected(self):
        cfg = InterferometerConfig(ResourceSpec.tmsv(0.8), 0.9, LossModel.lossless())
        with pytest.raises(InvalidArgument):
            homodyne_sensitivity(cfg, Observable.parity())

    def test_double_hd_wrapper(self):
        cfg = InterferometerConfig(ResourceSpec.csv(1.0, 0.6), 1.2, LossModel.symmetric(0.9))
        direct = homodyne_sensitivity(cfg, Observable.quadrature_sum(0.3, 1.9))
        wrapped = double_hd_csv_sensitivity(cfg, 0.3, 1.9)
        assert wrapped.error == pytest.approx(direct.error, rel=1e-14)

    def test_never_below_qcrb(self):
        resource = ResourceSpec.tmsv(1.0)
        for loss in (LossModel.lossless(), LossModel.symmetric(0.8)):
            qcrb = qfi_closed(resource, loss).qcrb
            for phi in (0.3, 0.9, 1.4):
                cfg = InterferometerConfig(resource, phi, loss)
                result = homodyne_sensitivity(cfg, Observable.quadrature_squared(0.0))
                assert result.error >= qcrb


class TestVectorizedProfile:
    """The grid path must agree with the scalar moment machinery."""

    @pytest.mark.parametrize(
        "obs",
        [
            Observable.parity(),
            Observable.quadrature(math.pi / 2.0),
            Observable.quadrature_squared(0.4),
            Observable.product(0.2, 1.1),
            Observable.quadrature_sum(0.7, 2.3),
        ],
    )
    def test_profile_matches_scalar(self, obs):
        resource = ResourceSpec.csv(0.9, 0.6)
        loss = LossModel(0.85, 0.7)
        phis = np.array([0.3, 1.2, 2.6, 4.4])
        profile = sensitivity_profile(resource, loss, phis, obs)
        for i, phi in enumerate(phis):
            cfg = InterferometerConfig(resource, float(phi), loss)
            if obs.kind.value == "parity_a":
                expected = parity_sensitivity(cfg).error
            else:
                expected = homodyne_sensitivity(cfg, obs).error
            assert profile[i] == pytest.approx(expected, rel=1e-9)

    def test_signal_and_variance_rotation(self):
        # X_theta moments computed through mode rotations agree with a
        # direct projection of the covariance.
        state = output_state(
            InterferometerConfig(ResourceSpec.csv(0.8, 0.5), 0.7, LossModel.lossless())
        )
        theta = 0.9
        w = np.array([math.cos(theta), math.sin(theta), 0.0, 0.0])
        signal, variance = signal_and_variance(state, Observable.quadrature(theta))
        assert signal == pytest.approx(w @ state.mean, rel=1e-12)
        assert variance == pytest.approx(w @ state.cov @ w, rel=1e-12)
