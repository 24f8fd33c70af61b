"""Lossy Mach-Zehnder pipeline: splitter, per-arm loss, phase shift, splitter.

The phase is imprinted on mode a by ``exp(-i phi a†a)``; photon loss acts
between the first splitter and the phase shifter (loss and phase shifting
commute, so this placement is a convention, tested rather than assumed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument
from .states import (
    GaussianState,
    Mode,
    ResourceSpec,
    SingleModeState,
    apply_loss,
    apply_symplectic,
    beam_splitter,
    make_input,
    phase_shifter,
    reduce_to_mode,
)

__all__ = ["LossModel", "InterferometerConfig", "output_state", "output_mode_a"]


@dataclass(frozen=True)
class LossModel:
    """Pair of arm transmissivities ``(eta_a, eta_b)``."""

    eta_a: float = 1.0
    eta_b: float = 1.0

    def __post_init__(self):
        for name, eta in (("eta_a", self.eta_a), ("eta_b", self.eta_b)):
            if not 0.0 <= eta <= 1.0:
                raise InvalidArgument(f"{name} must lie in [0, 1], got {eta}")

    @classmethod
    def lossless(cls):
        return cls(1.0, 1.0)

    @classmethod
    def symmetric(cls, eta):
        """Identical loss in both arms."""
        return cls(float(eta), float(eta))

    @classmethod
    def one_arm(cls, eta):
        """Loss only in the phase-shifter arm (mode a)."""
        return cls(float(eta), 1.0)

    @classmethod
    def from_stages(cls, eta_p=1.0, eta_a2=1.0, eta_a3=1.0, eta_b2=1.0, eta_b3=1.0, eta_d=1.0):
        """Collapse preparation, evolution and detection losses per arm.

        All loss points of the physical interferometer commute with the
        beam splitters and the phase shifter once preparation and detection
        losses are arm-symmetric, so they multiply into a single pair of
        evolution transmissivities.
        """
        return cls(eta_p * eta_a2 * eta_a3 * eta_d, eta_p * eta_b2 * eta_b3 * eta_d)

    @property
    def is_lossless(self):
        return self.eta_a == 1.0 and self.eta_b == 1.0


@dataclass(frozen=True)
class InterferometerConfig:
    resource: ResourceSpec
    phi: float
    loss: LossModel


def output_state(cfg: InterferometerConfig) -> GaussianState:
    """State at the interferometer output ports.

    Applies, in order: the first 50:50 splitter, the loss channel, the
    phase shifter on mode a, and the second 50:50 splitter.
    """
    state = apply_symplectic(make_input(cfg.resource), beam_splitter(math.pi / 4.0))
    state = apply_loss(state, cfg.loss.eta_a, cfg.loss.eta_b)
    post = beam_splitter(-math.pi / 4.0) @ phase_shifter(cfg.phi)
    return apply_symplectic(state, post)


def output_mode_a(cfg: InterferometerConfig) -> SingleModeState:
    """Reduced state of output mode a (the mode read by single-port detectors)."""
    return reduce_to_mode(output_state(cfg), Mode.A)


# -- vectorized fast path -----------------------------------------------------
#
# The optimizers evaluate the pipeline on dense phase grids; doing that one
# dataclass at a time is needlessly slow.  The helpers below compute the
# output covariance/mean for a whole array of phases at once.  They share
# no logic shortcuts with output_state beyond the (tested) fact that the
# first splitter and the loss channel do not depend on phi.


@lru_cache(maxsize=512)
def _post_loss_cov_mean(resource: ResourceSpec, loss: LossModel):
    state = apply_symplectic(make_input(resource), beam_splitter(math.pi / 4.0))
    state = apply_loss(state, loss.eta_a, loss.eta_b)
    return state.cov, state.mean


def output_grid(resource: ResourceSpec, loss: LossModel, phis):
    """Output covariances and means for an array of phases.

    Args:
        resource: input resource.
        loss: arm transmissivities.
        phis: array of phase values, shape (n,).

    Returns:
        Tuple ``(covs, means)`` of shapes (n, 4, 4) and (n, 4).
    """
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    cov_l, mean_l = _post_loss_cov_mean(resource, loss)
    b2 = beam_splitter(-math.pi / 4.0)
    c, s = np.cos(phis), np.sin(phis)
    n = phis.shape[0]
    rot = np.zeros((n, 4, 4))
    rot[:, 0, 0] = c
    rot[:, 0, 1] = s
    rot[:, 1, 0] = -s
    rot[:, 1, 1] = c
    rot[:, 2, 2] = 1.0
    rot[:, 3, 3] = 1.0
    post = b2[None, :, :] @ rot
    covs = post @ cov_l[None, :, :] @ np.transpose(post, (0, 2, 1))
    covs = (covs + np.transpose(covs, (0, 2, 1))) / 2.0
    means = np.einsum("nij,j->ni", post, mean_l)
    return covs, means
