"""Estimator-level phase sensitivities via error propagation.

Each observable yields an error ``var(O) / |d<O>/dphi|^2``.  Supported
observables: parity of output mode a, single quadratures and squared
quadratures of mode a, and products/sums of one quadrature per output mode.
All quadrature moments go through the symmetric-ordered moment machinery of
:mod:`mzi_lab.states`; every observable here involves only mutually
commuting quadratures, so symmetric ordering equals operator ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateWorkingPoint, InvalidArgument, NumericFailure
from .interferometer import InterferometerConfig, output_grid, output_mode_a, output_state
from .states import GaussianState, SingleModeState, apply_symplectic, symmetric_moment

__all__ = [
    "ObservableKind",
    "Observable",
    "SensitivityResult",
    "parity_expectation",
    "parity_sensitivity",
    "homodyne_sensitivity",
    "double_hd_csv_sensitivity",
    "slope_richardson",
]

#: Central-difference step for phase slopes.
SLOPE_STEP = 1e-5

#: Below this slope magnitude a working point is treated as blind.
DEGENERATE_SLOPE = 1e-10


class ObservableKind(Enum):
    PARITY_A = "parity_a"
    QUADRATURE_A = "quadrature_a"
    QUADRATURE_SQUARED_A = "quadrature_squared_a"
    PRODUCT_QUAD_AB = "product_quad_ab"
    SUM_QUAD_AB = "sum_quad_ab"


def _wrap_angle(angle):
    return float(angle) % (2.0 * math.pi)


@dataclass(frozen=True)
class Observable:
    """A measured observable, with local-oscillator angles where relevant.

    ``angle = 0`` measures ``X``, ``angle = pi/2`` measures ``P``.
    """

    kind: ObservableKind
    angle_a: float = 0.0
    angle_b: float = 0.0

    @classmethod
    def parity(cls):
        return cls(ObservableKind.PARITY_A)

    @classmethod
    def quadrature(cls, angle):
        return cls(ObservableKind.QUADRATURE_A, angle_a=_wrap_angle(angle))

    @classmethod
    def quadrature_squared(cls, angle):
        return cls(ObservableKind.QUADRATURE_SQUARED_A, angle_a=_wrap_angle(angle))

    @classmethod
    def product(cls, angle_a, angle_b):
        return cls(
            ObservableKind.PRODUCT_QUAD_AB,
            angle_a=_wrap_angle(angle_a),
            angle_b=_wrap_angle(angle_b),
        )

    @classmethod
    def quadrature_sum(cls, angle_a, angle_b):
        return cls(
            ObservableKind.SUM_QUAD_AB,
            angle_a=_wrap_angle(angle_a),
            angle_b=_wrap_angle(angle_b),
        )


@dataclass(frozen=True)
class SensitivityResult:
    """Error-propagation result at a fixed working point."""

    error: float
    signal: float
    variance: float
    slope: float
    phi: float


def parity_expectation(mode_a: SingleModeState) -> float:
    """Expectation of ``(-1)^{a†a}``, i.e. pi times the Wigner function at the origin."""
    det = float(np.linalg.det(mode_a.cov))
    if det <= 0.0:
        raise NumericFailure(f"covariance determinant must be positive, got {det}")
    d = mode_a.mean
    quad = float(d @ np.linalg.solve(mode_a.cov, d))
    return math.exp(-quad / 2.0) / (2.0 * math.sqrt(det))


def slope_richardson(fn, x, step=SLOPE_STEP):
    """Richardson-refined central difference of a smooth scalar function."""
    coarse = (fn(x + step) - fn(x - step)) / (2.0 * step)
    fine = (fn(x + step / 2.0) - fn(x - step / 2.0)) / step
    return (4.0 * fine - coarse) / 3.0


def _mode_rotation(angle_a, angle_b):
    """Symplectic rotating each mode so its new X quadrature is X_angle."""
    out = np.zeros((4, 4))
    for block, angle in ((0, angle_a), (2, angle_b)):
        c, s = math.cos(angle), math.sin(angle)
        out[block, block] = c
        out[block, block + 1] = s
        out[block + 1, block] = -s
        out[block + 1, block + 1] = c
    return out


def signal_and_variance(state: GaussianState, obs: Observable):
    """Mean and variance of a quadrature-type observable on an output state.

    The state is rotated so the requested quadratures become the X axes and
    the moments are read off with :func:`symmetric_moment`.
    """
    if obs.kind is ObservableKind.PARITY_A:
        raise InvalidArgument("parity has no quadrature moments; use parity_expectation")
    rotated = apply_symplectic(state, _mode_rotation(obs.angle_a, obs.angle_b))
    if obs.kind is ObservableKind.QUADRATURE_A:
        signal = symmetric_moment(rotated, (0,))
        variance = symmetric_moment(rotated, (0, 0)) - signal**2
    elif obs.kind is ObservableKind.QUADRATURE_SQUARED_A:
        signal = symmetric_moment(rotated, (0, 0))
        variance = symmetric_moment(rotated, (0, 0, 0, 0)) - signal**2
    elif obs.kind is ObservableKind.PRODUCT_QUAD_AB:
        signal = symmetric_moment(rotated, (0, 2))
        variance = symmetric_moment(rotated, (0, 0, 2, 2)) - signal**2
    elif obs.kind is ObservableKind.SUM_QUAD_AB:
        signal = symmetric_moment(rotated, (0,)) + symmetric_moment(rotated, (2,))
        second = (
            symmetric_moment(rotated, (0, 0))
            + 2.0 * symmetric_moment(rotated, (0, 2))
            + symmetric_moment(rotated, (2, 2))
        )
        variance = second - signal**2
    else:
        raise InvalidArgument(f"unknown observable kind {obs.kind}")
    return signal, variance


def _error_from(signal, variance, slope, phi):
    if abs(slope) < DEGENERATE_SLOPE:
        raise DegenerateWorkingPoint(
            f"signal slope {slope:.3e} at phi={phi:.6f} is below {DEGENERATE_SLOPE:.0e}"
        )
    return SensitivityResult(
        error=float(variance / slope**2),
        signal=float(signal),
        variance=float(variance),
        slope=float(slope),
        phi=float(phi),
    )


def parity_sensitivity(cfg: InterferometerConfig) -> SensitivityResult:
    """Phase sensitivity of the parity measurement on output mode a.

    Parity squares to the identity, so the variance is ``1 - <Pi>^2``; the
    slope is a Richardson-refined central difference of the expectation.
    """

    def signal_at(phi):
        return parity_expectation(
            output_mode_a(InterferometerConfig(cfg.resource, phi, cfg.loss))
        )

    signal = signal_at(cfg.phi)
    variance = 1.0 - signal**2
    slope = slope_richardson(signal_at, cfg.phi)
    return _error_from(signal, variance, slope, cfg.phi)


def homodyne_sensitivity(cfg: InterferometerConfig, obs: Observable) -> SensitivityResult:
    """Phase sensitivity of a quadrature-type observable.

    Raises:
        InvalidArgument: if ``obs`` is the parity observable.
        DegenerateWorkingPoint: if the signal slope vanishes at ``cfg.phi``.
    """
    if obs.kind is ObservableKind.PARITY_A:
        raise InvalidArgument("use parity_sensitivity for the parity observable")

    def signal_at(phi):
        state = output_state(InterferometerConfig(cfg.resource, phi, cfg.loss))
        return signal_and_variance(state, obs)[0]

    signal, variance = signal_and_variance(output_state(cfg), obs)
    slope = slope_richardson(signal_at, cfg.phi)
    return _error_from(signal, variance, slope, cfg.phi)


def double_hd_csv_sensitivity(
    cfg: InterferometerConfig, angle_a: float, angle_b: float
) -> SensitivityResult:
    """Sensitivity of the two-port quadrature sum ``X_{angle_a} + X_{angle_b}``."""
    return homodyne_sensitivity(cfg, Observable.quadrature_sum(angle_a, angle_b))


# -- vectorized profiles ------------------------------------------------------
#
# Grid versions of the signal/variance/sensitivity computations, used by the
# working-point optimizers.  They evaluate the same formulas as the scalar
# path above directly on stacked covariances (the test suite pins the two
# paths against each other).


def _angle_vectors(obs):
    wa = np.array([math.cos(obs.angle_a), math.sin(obs.angle_a)])
    wb = np.array([math.cos(obs.angle_b), math.sin(obs.angle_b)])
    return wa, wb


def _grid_signal_variance(covs, means, obs):
    wa, wb = _angle_vectors(obs)
    ga = covs[:, :2, :2]
    gb = covs[:, 2:, 2:]
    gab = covs[:, :2, 2:]
    ma = means[:, :2] @ wa
    mb = means[:, 2:] @ wb
    va = np.einsum("i,nij,j->n", wa, ga, wa)
    vb = np.einsum("i,nij,j->n", wb, gb, wb)
    cab = np.einsum("i,nij,j->n", wa, gab, wb)
    if obs.kind is ObservableKind.QUADRATURE_A:
        return ma, va
    if obs.kind is ObservableKind.QUADRATURE_SQUARED_A:
        return va + ma**2, 2.0 * va**2 + 4.0 * va * ma**2
    if obs.kind is ObservableKind.PRODUCT_QUAD_AB:
        signal = cab + ma * mb
        variance = va * vb + cab**2 + va * mb**2 + vb * ma**2 + 2.0 * cab * ma * mb
        return signal, variance
    if obs.kind is ObservableKind.SUM_QUAD_AB:
        return ma + mb, va + vb + 2.0 * cab
    raise InvalidArgument(f"no grid moments for observable kind {obs.kind}")


def _grid_parity(covs, means):
    dets = np.linalg.det(covs[:, :2, :2])
    sol = np.linalg.solve(covs[:, :2, :2], means[:, :2, None])[:, :, 0]
    quad = np.einsum("ni,ni->n", means[:, :2], sol)
    return np.exp(-quad / 2.0) / (2.0 * np.sqrt(dets))


def sensitivity_profile(resource, loss, phis, obs: Observable):
    """Error-propagation sensitivity on a grid of phases.

    Returns an array shaped like ``phis``; blind working points (slope below
    :data:`DEGENERATE_SLOPE`) and negative variances from roundoff map to
    ``inf`` rather than raising, so optimizers can scan freely.

    The center grid and the four slope stencils are evaluated through one
    stacked pipeline call.
    """
    phis = np.asarray(phis, dtype=float)
    n = phis.shape[0]
    h = SLOPE_STEP
    stacked = np.concatenate([phis + shift for shift in (0.0, h, -h, h / 2.0, -h / 2.0)])
    covs, means = output_grid(resource, loss, stacked)

    if obs.kind is ObservableKind.PARITY_A:
        values = _grid_parity(covs, means)
    else:
        values = _grid_signal_variance(covs, means, obs)[0]
    center, s_p, s_m, s_hp, s_hm = (values[k * n : (k + 1) * n] for k in range(5))
    if obs.kind is ObservableKind.PARITY_A:
        signal = center
        variance = 1.0 - signal**2
    else:
        signal = center
        variance = _grid_signal_variance(covs[:n], means[:n], obs)[1]
    coarse = (s_p - s_m) / (2.0 * h)
    fine = (s_hp - s_hm) / h
    slope = (4.0 * fine - coarse) / 3.0

    out = np.full(phis.shape, np.inf)
    ok = (np.abs(slope) >= DEGENERATE_SLOPE) & (variance >= 0.0)
    out[ok] = variance[ok] / slope[ok] ** 2
    return out
