"""Delay-Doppler effective channel synthesis.

The DD channel matrix of each (user, antenna) pair is block circulant, so
the transmit/receive DFT precoders turn it into a diagonal matrix.  The
fast path below never materializes the MN x MN matrix: per-path tap
coefficients are accumulated on a (Doppler shift, delay shift) grid and a
2-D transform produces the diagonal directly.  The dense construction is
kept as a test oracle and for structural checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import ChannelParams

__all__ = [
    "EffectiveChannel",
    "build_dd_channel_matrix",
    "effective_diagonal_gains",
    "mrt_gains",
    "dft_matrix",
    "shifted_identity",
    "dump_gains",
]


def dft_matrix(X: int) -> np.ndarray:
    """Unitary X-point DFT matrix with entries exp(+j*2*pi*k*l/X)/sqrt(X)."""
    k = np.arange(X)
    return np.exp(2j * np.pi * np.outer(k, k) / X) / np.sqrt(X)


def shifted_identity(X: int, s: int) -> np.ndarray:
    """Identity with rows circularly shifted by s (row r picks column (r-s) mod X)."""
    out = np.zeros((X, X))
    r = np.arange(X)
    out[r, (r - s) % X] = 1.0
    return out


def _leakage_taps(params: ChannelParams, q: int, ell: int):
    """Yield (doppler_shift s, coefficient) pairs for one propagation path.

    The coefficient excludes the antenna steering phase; s is the Doppler
    row shift of the I_N(s) (x) I_M(l) term.
    """
    N = params.N
    k = int(params.doppler_ints[q, ell])
    kf = float(params.doppler_fracs[q, ell])
    l = int(params.delay_bins[q, ell])
    base = params.gains[q, ell] / np.sqrt(params.L)
    phase = np.exp(-2j * np.pi * (k + kf) * l / (params.M * N))
    if kf == 0.0:
        # single-tap collapse: only i = 0 survives
        yield (-((0 - k) % N)) % N, base * phase
        return
    for i in range(-params.N_ql, params.N_ql + 1):
        x = -i - kf
        num = np.exp(-2j * np.pi * x) - 1.0
        den = N * (np.exp(-2j * np.pi * x / N) - 1.0)
        coeff = base * (num / den) * phase
        yield (-((i - k) % N)) % N, coeff


def _steering(params: ChannelParams, q: int, ell: int, d: int) -> complex:
    # antennas indexed d = 1..D as in the steering phase exp(-j*pi*sin(theta)*(d-1))
    return np.exp(-1j * np.pi * np.sin(params.angles[q, ell]) * (d - 1))


def build_dd_channel_matrix(params: ChannelParams, q: int, d: int) -> np.ndarray:
    """Dense MN x MN DD channel matrix for user q, antenna d (1-based d)."""
    M, N = params.M, params.N
    H = np.zeros((M * N, M * N), dtype=complex)
    for ell in range(params.L):
        steer = _steering(params, q, ell, d)
        l = int(params.delay_bins[q, ell])
        shift_M = shifted_identity(M, l)
        for s, coeff in _leakage_taps(params, q, ell):
            H += (coeff * steer) * np.kron(shifted_identity(N, s), shift_M)
    return H


def effective_diagonal_gains(params: ChannelParams, q: int, d: int) -> np.ndarray:
    """Length-MN diagonal of the precoded channel for user q, antenna d.

    Accumulates tap coefficients c[s, l] (first columns of the circulant
    blocks), then applies an M-point DFT over delay and an N-point inverse
    DFT over Doppler shifts; entry index is k*M + l.
    """
    M, N = params.M, params.N
    C = np.zeros((N, M), dtype=complex)
    for ell in range(params.L):
        steer = _steering(params, q, ell, d)
        l = int(params.delay_bins[q, ell])
        for s, coeff in _leakage_taps(params, q, ell):
            C[s, l] += coeff * steer
    lam = N * np.fft.ifft(np.fft.fft(C, axis=1), axis=0)
    return lam.reshape(-1)


@dataclass(frozen=True)
class EffectiveChannel:
    """Per-user, per-bin effective MRT gains consumed by all optimizers.

    gamma[q, i, b] is the effective gain (1/W) seen by user q of the beam
    steered at user i on bin b; the diagonal i == q is the self gain.
    h_eff[q, b, :] collects the bin-b diagonal entries over antennas.
    """

    gamma: np.ndarray       # [Q, Q, MN], real nonnegative
    h_eff: np.ndarray       # [Q, MN, D], complex
    noise: np.ndarray       # [Q], watts
    degenerate_bins: tuple[tuple[int, int], ...] = ()  # (user i, bin) with zero channel

    @property
    def Q(self) -> int:
        return self.gamma.shape[0]

    @property
    def MN(self) -> int:
        return self.gamma.shape[2]

    def gamma_self(self, q: int) -> np.ndarray:
        return self.gamma[q, q, :]


def mrt_gains(params: ChannelParams) -> EffectiveChannel:
    """Compute the full gamma tensor under maximum ratio transmission.

    The beam for user i on bin b points along h_eff[i, b]; bins where that
    vector is identically zero get gamma 0 for every observer and are
    flagged instead of raising, so a degenerate draw cannot abort a batch.
    """
    Q, D = params.Q, params.D
    MN = params.M * params.N
    h_eff = np.empty((Q, MN, D), dtype=complex)
    for q in range(Q):
        for d in range(1, D + 1):
            h_eff[q, :, d - 1] = effective_diagonal_gains(params, q, d)

    norms = np.linalg.norm(h_eff, axis=2)  # [Q, MN]
    gamma = np.zeros((Q, Q, MN))
    degenerate = []
    for i in range(Q):
        for b in range(MN):
            nb = norms[i, b]
            if nb == 0.0:
                degenerate.append((i, b))
                continue
            w = h_eff[i, b, :] / nb
            proj = np.abs(h_eff[:, b, :].conj() @ w) ** 2  # |h_qb^H w_ib|^2 per q
            gamma[:, i, b] = proj / params.noise_power
    return EffectiveChannel(
        gamma=gamma,
        h_eff=h_eff,
        noise=np.full(Q, params.noise_power),
        degenerate_bins=tuple(degenerate),
    )


def dump_gains(channel: EffectiveChannel, path: str) -> None:
    """Write the gamma tensor as columnar text: user, peer, bin, value."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("user peer bin gamma\n")
        Q, MN = channel.Q, channel.MN
        for q in range(Q):
            for i in range(Q):
                for b in range(MN):
                    fh.write(f"{q} {i} {b} {channel.gamma[q, i, b]:.12e}\n")
