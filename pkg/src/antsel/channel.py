"""Complete channel matrix, configuration reduction and the SNR / capacity objectives.

Indexing is 0-based: column ``a*n + k`` of the complete matrix is transmit
antenna ``a`` in state ``k``; row ``b*n + l`` is receive antenna ``b`` in
state ``l``.  All logarithms are base 2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np


@dataclass(frozen=True)
class SystemDims:
    n_t: int
    n_r: int
    n: int

    def __post_init__(self):
        for name in ("n_t", "n_r", "n"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def tx_cols(self) -> int:
        return self.n * self.n_t

    @property
    def rx_rows(self) -> int:
        return self.n * self.n_r

    @property
    def n_antennas(self) -> int:
        return self.n_t + self.n_r

    @property
    def total_bits(self) -> int:
        return self.n * (self.n_t + self.n_r)

    @property
    def n_configs(self) -> int:
        return self.n ** (self.n_t + self.n_r)

    @classmethod
    def parse(cls, text: str) -> "SystemDims":
        """Parse ``"n_t,n_r,n"``."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 3:
            raise ValueError(f"dims must look like 'n_t,n_r,n', got {text!r}")
        return cls(*(int(p) for p in parts))

    def __str__(self):
        return f"{self.n_t},{self.n_r},{self.n}"


@dataclass(frozen=True)
class Configuration:
    """One selected state per transmit and per receive antenna."""

    tx_states: tuple[int, ...]
    rx_states: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "tx_states", tuple(int(s) for s in self.tx_states))
        object.__setattr__(self, "rx_states", tuple(int(s) for s in self.rx_states))

    def validate(self, dims: SystemDims) -> None:
        if len(self.tx_states) != dims.n_t or len(self.rx_states) != dims.n_r:
            raise ValueError(
                f"configuration has {len(self.tx_states)} tx / {len(self.rx_states)} rx "
                f"states, dims expect {dims.n_t} / {dims.n_r}"
            )
        for s in self.tx_states + self.rx_states:
            if not 0 <= s < dims.n:
                raise ValueError(f"state {s} out of range [0, {dims.n})")

    @property
    def key(self) -> tuple[int, ...]:
        """Lexicographic sort key (transmit states first)."""
        return self.tx_states + self.rx_states

    def cols(self, n: int) -> np.ndarray:
        return np.arange(len(self.tx_states)) * n + np.asarray(self.tx_states, dtype=int)

    def rows(self, n: int) -> np.ndarray:
        return np.arange(len(self.rx_states)) * n + np.asarray(self.rx_states, dtype=int)

    @classmethod
    def from_key(cls, key, dims: SystemDims) -> "Configuration":
        key = tuple(int(k) for k in key)
        return cls(key[: dims.n_t], key[dims.n_t :])

    def __str__(self):
        tx = "".join(map(str, self.tx_states))
        rx = "".join(map(str, self.rx_states))
        return f"{tx}|{rx}"


@dataclass(frozen=True)
class FullChannel:
    dims: SystemDims
    g: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=complex)
        expected = (self.dims.rx_rows, self.dims.tx_cols)
        if g.shape != expected:
            raise ValueError(f"channel shape {g.shape} != {expected}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("channel contains non-finite entries")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)


@dataclass
class PowerAllocation:
    total_power: float
    per_stream: np.ndarray
    gains: np.ndarray
    water_level: float
    achieved_objective: float
    degenerate: bool = False


def sample_channel(dims: SystemDims, rng: np.random.Generator) -> FullChannel:
    """Draw i.i.d. CN(0, 1) entries (real and imaginary parts each N(0, 1/2))."""
    shape = (dims.rx_rows, dims.tx_cols)
    scale = np.sqrt(0.5)
    g = rng.normal(scale=scale, size=shape) + 1j * rng.normal(scale=scale, size=shape)
    return FullChannel(dims, g)


def reduce(ch: FullChannel, cfg: Configuration) -> np.ndarray:
    """Reduced n_r x n_t channel of ``cfg``."""
    cfg.validate(ch.dims)
    n = ch.dims.n
    return ch.g[np.ix_(cfg.rows(n), cfg.cols(n))]


def snr_objective(ch: FullChannel, cfg: Configuration) -> float:
    """Sum of squared magnitudes of the reduced channel (the trace objective)."""
    h = reduce(ch, cfg)
    return float(np.sum(h.real**2 + h.imag**2))


def logdet_hpd(m: np.ndarray) -> float:
    """log2 det of a Hermitian positive-definite matrix via Cholesky."""
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise FloatingPointError("non-finite entries in log-det argument")
    chol = np.linalg.cholesky(m)
    return float(2.0 * np.sum(np.log2(np.abs(np.diagonal(chol, axis1=-2, axis2=-1)))))


def batched_logdet_hpd(m: np.ndarray) -> np.ndarray:
    """log2 det over the leading axis of a stack of HPD matrices."""
    chol = np.linalg.cholesky(m)
    return 2.0 * np.sum(np.log2(np.abs(np.diagonal(chol, axis1=-2, axis2=-1))), axis=-1)


def capacity_of(h: np.ndarray, p_over_nt: float) -> float:
    """log2 det(I + p HᴴH) of an already reduced matrix."""
    if p_over_nt < 0:
        raise ValueError("p_over_nt must be non-negative")
    h = np.asarray(h, dtype=complex)
    m = np.eye(h.shape[1]) + p_over_nt * (h.conj().T @ h)
    return logdet_hpd(m)


def capacity_objective(ch: FullChannel, cfg: Configuration, p_over_nt: float) -> float:
    """Capacity with symmetric power ``p_over_nt`` per transmit antenna."""
    return capacity_of(reduce(ch, cfg), p_over_nt)


def waterfill_gains(gains, total_power: float) -> PowerAllocation:
    """Water-filling over eigen-mode gains ``gains`` (squared singular values).

    The water level is found exactly: with gains sorted in descending order,
    try k = 1..m active streams and keep the largest k whose level exceeds
    the k-th inverse gain.
    """
    if total_power < 0:
        raise ValueError("total_power must be non-negative")
    gains = np.sort(np.clip(np.asarray(gains, dtype=float).ravel(), 0.0, None))[::-1]
    per_stream = np.zeros_like(gains)
    # a gain whose inverse overflows can never receive power
    positive = gains[gains > 1.0 / np.finfo(float).max]
    if positive.size == 0:
        return PowerAllocation(total_power, per_stream, gains, 0.0, 0.0, degenerate=True)
    inv = 1.0 / positive
    csum = np.cumsum(inv)
    level, k = 0.0, positive.size
    for k in range(positive.size, 0, -1):
        level = (total_power + csum[k - 1]) / k
        if level >= inv[k - 1]:
            break
    # same as level - inv on the active set, without cancelling huge inverses
    per_stream[:k] = np.maximum(0.0, (total_power - (k * inv[:k] - csum[k - 1])) / k)
    value = float(np.sum(np.log2(1.0 + per_stream[:k] * positive[:k])))
    return PowerAllocation(total_power, per_stream, gains, float(level), value)


def waterfilling(h: np.ndarray, total_power: float) -> PowerAllocation:
    s = np.linalg.svd(np.asarray(h, dtype=complex), compute_uv=False)
    return waterfill_gains(s**2, total_power)


def snr_optimal_value(h: np.ndarray, total_power: float) -> float:
    """Received SNR with rank-one beamforming along the principal right-singular vector."""
    if total_power < 0:
        raise ValueError("total_power must be non-negative")
    h = np.asarray(h, dtype=complex)
    top = np.linalg.eigvalsh(h.conj().T @ h)[-1]
    return float(total_power * max(top, 0.0))


def all_configurations(dims: SystemDims) -> np.ndarray:
    """Every configuration key as rows of an int array, in lexicographic order."""
    return np.array(list(product(range(dims.n), repeat=dims.n_antennas)), dtype=np.int64).reshape(
        -1, dims.n_antennas
    )


def iter_config_keys(dims: SystemDims, chunk: int = 200_000):
    """Yield lexicographically ordered chunks of configuration keys."""
    total = dims.n_configs
    k = dims.n_antennas
    powers = dims.n ** np.arange(k - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        yield (idx[:, None] // powers[None, :]) % dims.n


def reduce_batch(ch: FullChannel, keys: np.ndarray) -> np.ndarray:
    """Stack of reduced matrices for a batch of configuration keys."""
    d = ch.dims
    keys = np.asarray(keys, dtype=np.int64)
    cols = np.arange(d.n_t) * d.n + keys[:, : d.n_t]
    rows = np.arange(d.n_r) * d.n + keys[:, d.n_t :]
    return ch.g[rows[:, :, None], cols[:, None, :]]


def capacity_batch(ch: FullChannel, keys: np.ndarray, p_over_nt: float) -> np.ndarray:
    h = reduce_batch(ch, keys)
    gram = np.einsum("kba,kbc->kac", h.conj(), h)
    m = np.eye(ch.dims.n_t) + p_over_nt * gram
    return batched_logdet_hpd(m)


def snr_batch(ch: FullChannel, keys: np.ndarray) -> np.ndarray:
    h = reduce_batch(ch, keys)
    return np.sum(h.real**2 + h.imag**2, axis=(1, 2))
