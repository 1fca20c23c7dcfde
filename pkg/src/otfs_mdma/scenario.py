"""Scenario configuration, delay-Doppler grid partitioning and random channel draws.

Bins are indexed b = k*M + l (0-based) for Doppler row k and delay column l.
All powers are kept in linear watts internally; config files may give them
in dBm and they are converted once at load time.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "ScenarioConfig",
    "RsPartition",
    "ChannelParams",
    "ConfigError",
    "dbm_to_watt",
    "watt_to_dbm",
    "path_loss_db",
    "partition_dd_grid",
    "sample_scenario",
    "load_config",
]


class ConfigError(ValueError):
    """Invalid scenario configuration."""


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_w) + 30.0


@dataclass(frozen=True)
class ScenarioConfig:
    """All physical and algorithmic parameters of one experiment."""

    M: int = 2                  # delay bins
    N: int = 4                  # Doppler bins
    delta_M: int = 1            # RS side length along delay
    delta_N: int = 2            # RS side length along Doppler
    Q: int = 3                  # users
    D: int = 10                 # BS antennas
    P: float = dbm_to_watt(45.0)        # total power budget (W)
    C_min: tuple[float, ...] | float = 0.0   # per-user rate floor (bits/s/Hz)
    alpha: tuple[float, ...] | float = 1.0   # per-user weights
    L_q: int = 5                # propagation paths per user
    subcarrier_spacing: float = 15e3     # Hz
    noise_power: float = dbm_to_watt(-108.0)  # per-user noise (W)
    N_ql: int = 5               # Doppler-leakage truncation window
    distance_range: tuple[float, float] = (200.0, 500.0)  # m
    doppler_max: float = 0.5    # fraction of subcarrier spacing
    delay_max: float = 0.5      # fraction of 1/subcarrier_spacing
    eps_brb: float = 0.05       # BRB relative accuracy (termination at (1+eps))
    delta_p: int = 50           # DP power-grid resolution (number of steps)
    eta: float = 1000.0         # penalty factor for the binary relaxation
    zeta: float = 0.92          # SA cooling factor
    rng_seed: int = 0

    def __post_init__(self):
        if self.M <= 0 or self.N <= 0 or self.delta_M <= 0 or self.delta_N <= 0:
            raise ConfigError("grid dimensions must be positive")
        if self.M % self.delta_M != 0 or self.N % self.delta_N != 0:
            raise ConfigError(
                f"grid {self.M}x{self.N} not divisible by slot {self.delta_M}x{self.delta_N}"
            )
        if self.Q < 1 or self.D < 1:
            raise ConfigError("need Q >= 1 users and D >= 1 antennas")
        if self.P <= 0:
            raise ConfigError("power budget must be positive")
        if self.eps_brb <= 0:
            raise ConfigError("eps_brb must be positive")
        if not 0.0 < self.zeta < 1.0:
            raise ConfigError("cooling factor zeta must lie in (0, 1)")
        if self.delta_p < 1:
            raise ConfigError("delta_p must be at least 1")
        if np.any(np.asarray(self.alpha_vec) <= 0):
            raise ConfigError("all user weights must be positive")
        if np.any(np.asarray(self.c_min_vec) < 0):
            raise ConfigError("rate floors must be nonnegative")
        lo, hi = self.distance_range
        if not 0 < lo <= hi:
            raise ConfigError("distance_range must satisfy 0 < lo <= hi")

    @property
    def MN(self) -> int:
        return self.M * self.N

    @property
    def R(self) -> int:
        return self.MN // (self.delta_M * self.delta_N)

    @property
    def alpha_vec(self) -> np.ndarray:
        return _broadcast_user(self.alpha, self.Q)

    @property
    def c_min_vec(self) -> np.ndarray:
        return _broadcast_user(self.C_min, self.Q)

    @property
    def nu_max_hz(self) -> float:
        return self.doppler_max * self.subcarrier_spacing

    @property
    def tau_max_s(self) -> float:
        return self.delay_max / self.subcarrier_spacing

    def with_(self, **kw) -> "ScenarioConfig":
        return replace(self, **kw)


def _broadcast_user(value, Q: int) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(Q, float(arr[0]))
    if arr.size != Q:
        raise ConfigError(f"per-user value has length {arr.size}, expected {Q}")
    return arr


@dataclass(frozen=True)
class RsPartition:
    """Partition of the M x N bin grid into R rectangular resource slots."""

    M: int
    N: int
    delta_M: int
    delta_N: int
    slots: tuple[tuple[int, ...], ...]

    @property
    def R(self) -> int:
        return len(self.slots)

    def slot_of_bin(self, b: int) -> int:
        k, l = divmod(b, self.M)
        return (k // self.delta_N) * (self.M // self.delta_M) + l // self.delta_M


def partition_dd_grid(M: int, N: int, delta_M: int, delta_N: int) -> RsPartition:
    """Split the grid into R = MN/(delta_M*delta_N) contiguous rectangles.

    Slot origins are enumerated row-major over (Doppler block, delay block) so
    the ordering is deterministic.
    """
    if M <= 0 or N <= 0 or delta_M <= 0 or delta_N <= 0:
        raise ConfigError("grid dimensions must be positive")
    if M % delta_M != 0 or N % delta_N != 0:
        raise ConfigError(
            f"grid {M}x{N} not divisible by slot {delta_M}x{delta_N}"
        )
    slots = []
    for kb in range(N // delta_N):
        for lb in range(M // delta_M):
            bins = tuple(
                k * M + l
                for k in range(kb * delta_N, (kb + 1) * delta_N)
                for l in range(lb * delta_M, (lb + 1) * delta_M)
            )
            slots.append(bins)
    return RsPartition(M=M, N=N, delta_M=delta_M, delta_N=delta_N, slots=tuple(slots))


def path_loss_db(distance_m: float) -> float:
    """Large-scale path loss in dB at the given BS-user distance."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m}")
    return -30.5 - 36.7 * math.log10(distance_m)


@dataclass(frozen=True)
class ChannelParams:
    """Per-user multipath parameters drawn for one trial.

    Arrays are shaped [Q, L]: complex gains (variance sigma_q, the 1/sqrt(L)
    normalization is applied at channel synthesis), integer delay bins,
    integer Doppler bins, fractional Doppler in [-0.5, 0.5] and departure
    angles in radians.  Users are ordered by descending average power sigma.
    """

    gains: np.ndarray       # complex, [Q, L]
    delay_bins: np.ndarray  # int, [Q, L]
    doppler_ints: np.ndarray    # int, [Q, L]
    doppler_fracs: np.ndarray   # float, [Q, L]
    angles: np.ndarray      # float, [Q, L]
    distances: np.ndarray   # float, [Q]
    sigmas: np.ndarray      # float, [Q]
    M: int
    N: int
    D: int
    N_ql: int
    noise_power: float

    @property
    def Q(self) -> int:
        return self.gains.shape[0]

    @property
    def L(self) -> int:
        return self.gains.shape[1]


def _split_doppler(x: float) -> tuple[int, float]:
    """Split x into nearest integer k and fraction in [-0.5, 0.5].

    Exact .5 ties round the integer part toward zero so the fraction keeps
    magnitude 0.5.
    """
    if x >= 0:
        k = math.ceil(x - 0.5)
    else:
        k = math.floor(x + 0.5)
    return k, x - k


def sample_scenario(config: ScenarioConfig, seed: int | None = None) -> ChannelParams:
    """Draw one random channel realization.

    Distances ~ U[distance_range]; per-path complex gains are circularly
    symmetric Gaussian with variance sigma_q; departure angle is a per-user
    mean U[0, pi/2] plus per-path spread U[-pi/8, pi/8]; Doppler
    ~ U[-nu_max, nu_max] split into integer and fractional bins; delay
    ~ U[0, tau_max] quantized to integer bins.  Users are re-sorted by
    descending sigma.
    """
    rng = np.random.default_rng(config.rng_seed if seed is None else seed)
    Q, L = config.Q, config.L_q
    M, N = config.M, config.N
    T = 1.0 / config.subcarrier_spacing

    lo, hi = config.distance_range
    distances = rng.uniform(lo, hi, size=Q)
    sigmas = np.array([10.0 ** (path_loss_db(d) / 10.0) for d in distances])

    order = np.argsort(-sigmas, kind="stable")
    distances = distances[order]
    sigmas = sigmas[order]

    std = np.sqrt(sigmas / 2.0)[:, None]
    gains = std * (rng.standard_normal((Q, L)) + 1j * rng.standard_normal((Q, L)))

    theta_bar = rng.uniform(0.0, np.pi / 2.0, size=Q)
    theta_hat = rng.uniform(-np.pi / 8.0, np.pi / 8.0, size=(Q, L))
    angles = theta_bar[:, None] + theta_hat

    nu = rng.uniform(-config.nu_max_hz, config.nu_max_hz, size=(Q, L))
    doppler_ints = np.empty((Q, L), dtype=int)
    doppler_fracs = np.empty((Q, L))
    for q in range(Q):
        for p in range(L):
            k, frac = _split_doppler(nu[q, p] * N * T)
            doppler_ints[q, p] = k
            doppler_fracs[q, p] = frac

    tau = rng.uniform(0.0, config.tau_max_s, size=(Q, L))
    l_max = int(math.floor(config.tau_max_s * M * config.subcarrier_spacing))
    delay_bins = np.clip(np.rint(tau * M * config.subcarrier_spacing).astype(int), 0, l_max)

    return ChannelParams(
        gains=gains,
        delay_bins=delay_bins,
        doppler_ints=doppler_ints,
        doppler_fracs=doppler_fracs,
        angles=angles,
        distances=distances,
        sigmas=sigmas,
        M=M,
        N=N,
        D=config.D,
        N_ql=config.N_ql,
        noise_power=config.noise_power,
    )


# --- config file parsing ------------------------------------------------

_DBM_KEYS = {"P", "noise_power"}
_INT_KEYS = {"M", "N", "delta_M", "delta_N", "Q", "D", "L_q", "N_ql", "delta_p", "rng_seed"}
_LIST_KEYS = {"C_min", "alpha", "distance_range"}
_DBM_RE = re.compile(r"^\s*(-?\d+(?:\.\d+)?)\s*dBm\s*$", re.IGNORECASE)


def _parse_scalar(key: str, raw: str):
    m = _DBM_RE.match(raw)
    if m:
        return dbm_to_watt(float(m.group(1)))
    if key in _INT_KEYS:
        return int(raw)
    return float(raw)


def load_config(path: str) -> ScenarioConfig:
    """Load a flat key-value config file.

    Lines look like ``key = value`` (``:`` also accepted); ``#`` starts a
    comment.  Keys are the ScenarioConfig field names; power-like values may
    be written as e.g. ``45 dBm``.  Per-user fields accept comma-separated
    lists.
    """
    fields = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, raw = line.partition("=")
            elif ":" in line:
                key, _, raw = line.partition(":")
            else:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = key.strip(), raw.strip()
            if not hasattr(ScenarioConfig, "__dataclass_fields__") or key not in ScenarioConfig.__dataclass_fields__:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                if key in _LIST_KEYS and "," in raw:
                    value = tuple(_parse_scalar(key, part) for part in raw.split(","))
                else:
                    value = _parse_scalar(key, raw)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {raw!r}") from exc
            fields[key] = value
    return ScenarioConfig(**fields)
