"""Truncated Fock-basis oracle for cross-checking the Gaussian pipeline.

Everything here is brute force by design: states are density matrices over
``{|n, m> : n, m < cutoff}``, channels are explicit unitaries or Kraus sums,
and expectation values are plain operator traces.  The oracle is meant for
small mean photon numbers where truncation leakage is negligible; it is a
validator, never a production path.

Basis convention: ``|n, m>`` maps to flat index ``n * cutoff + m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import CutoffTooSmall, InvalidArgument
from .interferometer import LossModel
from .states import ResourceKind, ResourceSpec

__all__ = [
    "FockState",
    "build_fock_input",
    "apply_beam_splitter",
    "apply_phase",
    "apply_loss_fock",
    "fock_output_state",
    "oracle_expectation",
    "oracle_qfi",
    "uhlmann_fidelity",
]

_LEAKAGE_BOUND = 1e-8
_SLD_FLOOR = 1e-12


@dataclass(frozen=True)
class FockState:
    """Two-mode density matrix over a truncated number basis."""

    dm: np.ndarray
    cutoff: int

    def __post_init__(self):
        dm = np.asarray(self.dm, dtype=complex)
        d = self.cutoff * self.cutoff
        if dm.shape != (d, d):
            raise InvalidArgument(f"expected a {d}x{d} density matrix, got {dm.shape}")
        object.__setattr__(self, "dm", dm)

    def reduced_a(self):
        n = self.cutoff
        return np.einsum("imjm->ij", self.dm.reshape(n, n, n, n))

    def reduced_b(self):
        n = self.cutoff
        return np.einsum("imin->mn", self.dm.reshape(n, n, n, n))


# -- single-mode building blocks ----------------------------------------------


def annihilation(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1)


def quadrature_x(cutoff):
    a = annihilation(cutoff)
    return (a + a.T) / math.sqrt(2.0)


def quadrature_p(cutoff):
    a = annihilation(cutoff)
    return -1j * (a - a.T) / math.sqrt(2.0)


def parity_matrix(cutoff):
    return np.diag((-1.0) ** np.arange(cutoff))


def coherent_ket(alpha, cutoff):
    if alpha == 0.0:
        amp = np.zeros(cutoff)
        amp[0] = 1.0
        return amp
    n = np.arange(cutoff)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, cutoff))]))
    return np.exp(n * math.log(alpha) - 0.5 * log_fact - alpha**2 / 2.0)


def squeezed_vacuum_ket(r, cutoff):
    """Squeezed vacuum in the anti-squeezed-X convention (even-photon series)."""
    amp = np.zeros(cutoff)
    amp[0] = 1.0 / math.sqrt(math.cosh(r))
    t = math.tanh(r)
    m = 1
    while 2 * m < cutoff:
        # c_{m} / c_{m-1} = tanh(r) * sqrt((2m-1)(2m)) / (2m)
        amp[2 * m] = amp[2 * (m - 1)] * t * math.sqrt((2 * m - 1) * (2 * m)) / (2 * m)
        m += 1
    return amp


def tmsv_ket(s, cutoff):
    """Two-mode squeezed vacuum in Schmidt form, flattened over |n, n>."""
    lam = math.tanh(s)
    ket = np.zeros(cutoff * cutoff)
    weights = math.sqrt(1.0 - lam * lam) * lam ** np.arange(cutoff)
    ket[np.arange(cutoff) * cutoff + np.arange(cutoff)] = weights
    return ket


def _check_leakage(norm_sq):
    leak = 1.0 - norm_sq
    if leak > _LEAKAGE_BOUND:
        raise CutoffTooSmall(
            f"truncation leaks {leak:.3e} probability (> {_LEAKAGE_BOUND:.0e}); raise the cutoff"
        )


def _input_ket(spec: ResourceSpec, cutoff):
    if spec.kind is ResourceKind.TMSV:
        ket = tmsv_ket(spec.s, cutoff)
    else:
        ket_a = coherent_ket(spec.alpha, cutoff)
        if spec.kind is ResourceKind.CSV:
            ket_b = squeezed_vacuum_ket(spec.r, cutoff)
        else:
            ket_b = np.zeros(cutoff)
            ket_b[0] = 1.0
        ket = np.kron(ket_a, ket_b)
    _check_leakage(float(ket @ ket))
    return ket / math.sqrt(float(ket @ ket))


def build_fock_input(spec: ResourceSpec, cutoff: int) -> FockState:
    """Density matrix of the input resource, renormalized after truncation.

    Raises:
        CutoffTooSmall: if more than 1e-8 of the state leaks past the cutoff.
    """
    ket = _input_ket(spec, cutoff).astype(complex)
    return FockState(np.outer(ket, ket.conj()), cutoff)


# -- channels -------------------------------------------------------------------


@lru_cache(maxsize=8)
def _beam_splitter_unitary(theta, cutoff):
    """exp(theta (a†b - b†a)) assembled sector by sector.

    The generator conserves total photon number, so it block-diagonalizes
    over sectors n + m = k; each truncated sector exponentiates to an
    orthogonal block, keeping the assembled matrix exactly unitary on the
    truncated space.
    """
    u = np.zeros((cutoff * cutoff, cutoff * cutoff))
    for k in range(2 * cutoff - 1):
        ns = np.arange(max(0, k - cutoff + 1), min(cutoff - 1, k) + 1)
        idx = ns * cutoff + (k - ns)
        dim = len(ns)
        gen = np.zeros((dim, dim))
        for i in range(dim - 1):
            # <n+1, m-1| (a†b - b†a) |n, m> = sqrt((n+1) m)
            coupling = math.sqrt((ns[i] + 1.0) * (k - ns[i]))
            gen[i + 1, i] = coupling
            gen[i, i + 1] = -coupling
        u[np.ix_(idx, idx)] = expm(theta * gen) if dim > 1 else 1.0
    u.setflags(write=False)
    return u


def apply_beam_splitter(state: FockState, theta: float) -> FockState:
    u = _beam_splitter_unitary(float(theta), state.cutoff)
    return FockState(u @ state.dm @ u.T, state.cutoff)


def _phase_vector(phi, cutoff):
    return np.repeat(np.exp(-1j * phi * np.arange(cutoff)), cutoff)


def apply_phase(state: FockState, phi: float) -> FockState:
    """Phase shifter on mode a: ``|n, m> -> e^{-i n phi} |n, m>``."""
    ph = _phase_vector(phi, state.cutoff)
    return FockState(ph[:, None] * state.dm * ph.conj()[None, :], state.cutoff)


def _loss_kraus(eta, cutoff):
    """K_k |n> = sqrt(C(n,k) eta^{n-k} (1-eta)^k) |n-k>."""
    if eta == 1.0:
        return [np.eye(cutoff)]
    ns = np.arange(cutoff)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1.0, cutoff))]))
    ops = []
    for k in range(cutoff):
        n = ns[k:]
        log_binom = log_fact[n] - log_fact[k] - log_fact[n - k]
        if eta > 0.0:
            log_eta = (n - k) * math.log(eta)
        else:
            log_eta = np.where(n == k, 0.0, -math.inf)
        amp = np.exp(0.5 * (log_binom + log_eta + k * math.log(1.0 - eta)))
        op = np.zeros((cutoff, cutoff))
        op[n - k, n] = amp
        ops.append(op)
    return ops


def _apply_loss_single_mode(x, kraus_list):
    """Kraus sum over one mode with its ket/bra axes leading.

    Each loss Kraus operator K_k carries a single band (it shifts photon
    number down by k), so ``sum_k K_k rho K_k^dagger`` reduces to weighted
    shifted blocks: ``out[i, j] += amp_k[i] amp_k[j] x[i+k, j+k]``.
    """
    n = x.shape[0]
    out = np.zeros_like(x)
    for k, op in enumerate(kraus_list):
        amp = np.diagonal(op[: n - k, k:]) if k else np.diagonal(op)
        block = x[k:, k:]
        out[: n - k, : n - k] += amp[:, None, None] * amp[None, :, None] * block
    return out


def apply_loss_fock(state: FockState, eta_a: float, eta_b: float) -> FockState:
    """Per-mode photon loss as an explicit Kraus sum."""
    for name, eta in (("eta_a", eta_a), ("eta_b", eta_b)):
        if not 0.0 <= eta <= 1.0:
            raise InvalidArgument(f"{name} must lie in [0, 1], got {eta}")
    n = state.cutoff
    dm4 = state.dm.reshape(n, n, n, n)
    if eta_a < 1.0:
        x = dm4.transpose(0, 2, 1, 3).reshape(n, n, n * n)
        x = _apply_loss_single_mode(x, _loss_kraus(eta_a, n))
        dm4 = x.reshape(n, n, n, n).transpose(0, 2, 1, 3)
    if eta_b < 1.0:
        x = dm4.transpose(1, 3, 0, 2).reshape(n, n, n * n)
        x = _apply_loss_single_mode(x, _loss_kraus(eta_b, n))
        dm4 = x.reshape(n, n, n, n).transpose(2, 0, 3, 1)
    return FockState(np.ascontiguousarray(dm4).reshape(n * n, n * n), n)


def fock_output_state(resource: ResourceSpec, phi: float, loss: LossModel, cutoff: int) -> FockState:
    """Full interferometer pipeline in the truncated basis."""
    n = cutoff
    u1 = _beam_splitter_unitary(math.pi / 4.0, n)
    u2 = _beam_splitter_unitary(-math.pi / 4.0, n)
    ket = u1 @ _input_ket(resource, n)
    if loss.is_lossless:
        ket = _phase_vector(phi, n) * ket
        ket = u2 @ ket
        return FockState(np.outer(ket, ket.conj()), n)
    state = FockState(np.outer(ket, ket.conj()), n)
    state = apply_loss_fock(state, loss.eta_a, loss.eta_b)
    state = apply_phase(state, phi)
    return FockState(u2 @ state.dm @ u2.T, n)


# -- observables and figures of merit -------------------------------------------


def _mode_operator(name, cutoff):
    x, p = quadrature_x(cutoff), quadrature_p(cutoff)
    single = {
        "parity": parity_matrix(cutoff).astype(complex),
        "x": x.astype(complex),
        "p": p,
        "x2": (x @ x).astype(complex),
        "p2": p @ p,
        "x4": np.linalg.matrix_power(x, 4).astype(complex),
        "p4": np.linalg.matrix_power(p, 4),
        "n": np.diag(np.arange(cutoff, dtype=float)).astype(complex),
    }
    eye = np.eye(cutoff)
    if name.endswith("_a") and name[:-2] in single:
        return np.kron(single[name[:-2]], eye)
    if name.endswith("_b") and name[:-2] in single:
        return np.kron(eye, single[name[:-2]])
    if name == "xx_ab":
        return np.kron(x, x).astype(complex)
    if name == "pp_ab":
        return np.kron(p, p)
    if name == "x2x2_ab":
        return np.kron(x @ x, x @ x).astype(complex)
    if name == "n_total":
        nmat = np.diag(np.arange(cutoff, dtype=float))
        return (np.kron(nmat, eye) + np.kron(eye, nmat)).astype(complex)
    raise InvalidArgument(f"unknown operator name {name!r}")


def oracle_expectation(state: FockState, op: str) -> float:
    """Trace of the density matrix against a named operator.

    Supported names: ``parity_a``, ``x_a``, ``p_a``, ``x2_a``, ``p2_a``,
    ``x4_a``, ``p4_a`` (likewise ``_b``), ``xx_ab``, ``pp_ab``,
    ``x2x2_ab``, ``n_total``.
    """
    matrix = _mode_operator(op, state.cutoff)
    return float(np.real(np.einsum("ij,ji->", state.dm, matrix)))


def oracle_qfi(resource: ResourceSpec, phi: float, loss: LossModel, cutoff: int, dphi=1e-4) -> float:
    """Fisher information from the symmetric logarithmic derivative.

    Eigendecomposes the phase-encoded state, builds the SLD matrix elements
    ``2 <i|d rho|j> / (p_i + p_j)`` over eigenpairs with ``p_i + p_j``
    above 1e-12, and returns ``Tr[rho L^2]``.  The derivative is a central
    difference with step ``dphi``, Richardson-refined with a second pass at
    ``dphi/2`` (the raw difference has relative bias ``(dn * dphi)^2 / 6``
    on coherences between Fock layers ``dn`` apart, which matters at large
    cutoffs).  The beam splitter after the phase shifter is a fixed unitary
    and cannot change the information, so it is omitted here.
    """
    n = cutoff
    u1 = _beam_splitter_unitary(math.pi / 4.0, n)
    ket = u1 @ _input_ket(resource, n)
    state = FockState(np.outer(ket, ket.conj()), n)
    if not loss.is_lossless:
        state = apply_loss_fock(state, loss.eta_a, loss.eta_b)
    rho = apply_phase(state, phi).dm

    probs, vecs = np.linalg.eigh(rho)

    def central_difference(step):
        plus = _phase_vector(step, n)
        return (plus[:, None] * rho * plus.conj()[None, :] - plus.conj()[:, None] * rho * plus[None, :]) / (
            2.0 * step
        )

    drho = (4.0 * central_difference(dphi / 2.0) - central_difference(dphi)) / 3.0
    m = vecs.conj().T @ drho @ vecs
    denom = probs[:, None] + probs[None, :]
    mask = denom > _SLD_FLOOR
    return float(np.sum(2.0 * np.abs(m[mask]) ** 2 / denom[mask]))


def _matrix_sqrt_psd(matrix):
    w, v = np.linalg.eigh(matrix)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def uhlmann_fidelity(s1: FockState, s2: FockState) -> float:
    """Bures fidelity ``Tr sqrt(sqrt(rho) sigma sqrt(rho))`` (amplitude convention).

    Computed as the nuclear norm of ``sqrt(rho) sqrt(sigma)``.  The full
    SVD is kept deliberately: the many near-zero singular values still
    carry a few parts in 1e7 of the trace for lossy states, which matters
    at the agreement levels the oracle is used for.
    """
    if s1.cutoff != s2.cutoff:
        raise InvalidArgument("states live on different cutoffs")
    product = _matrix_sqrt_psd(s1.dm) @ _matrix_sqrt_psd(s2.dm)
    return float(np.sum(np.linalg.svd(product, compute_uv=False)))
