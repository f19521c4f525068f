"""Data and measurement noise models.

Data errors come from a BSC(epsilon).  A measured row of weight ``w`` is
flipped when an odd number of its ``w`` ancilla interactions fail, each
independently with probability ``q``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .gf2 import BitMatrix, BitVector

# stream ids for counter-based generators
STREAM_TRIALS = 1
STREAM_TABLES = 2


class NoiseConfigError(ValueError):
    pass


def row_flip_probability(weight: int, q: float) -> float:
    """Probability that an odd number of ``weight`` interactions fail."""
    if not 0.0 <= q <= 0.5:
        raise NoiseConfigError(f"q={q} outside [0, 0.5]")
    return sum(comb(weight, i) * q**i * (1 - q) ** (weight - i) for i in range(1, weight + 1, 2))


def row_flip_probability_closed(weight: int, q: float) -> float:
    return (1.0 - (1.0 - 2.0 * q) ** weight) / 2.0


def mean_flip_probability(row_weights, q: float) -> float:
    weights = list(row_weights)
    if not weights:
        return 0.0
    return sum(row_flip_probability(w, q) for w in weights) / len(weights)


def average_delta(H_o: BitMatrix, q: float) -> float:
    """Mean row flip probability over the measured rows of ``H_o``."""
    return mean_flip_probability(H_o.row_weights(), q)


@dataclass(frozen=True)
class NoiseSpec:
    """Channel parameters for one simulation point.

    ``delta_mode`` is ``"uniform"`` (every measured bit flips with ``delta``)
    or ``"per_row"`` (row ``j`` flips with ``row_flip_probability(w_j, q)``).
    """

    epsilon: float
    q: float | None = None
    delta: float | None = None
    delta_mode: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 0.5:
            raise NoiseConfigError(f"epsilon={self.epsilon} outside [0, 0.5)")
        if self.q is not None and not 0.0 <= self.q <= 0.5:
            raise NoiseConfigError(f"q={self.q} outside [0, 0.5]")
        if self.delta is not None and not 0.0 <= self.delta < 0.5:
            raise NoiseConfigError(f"delta={self.delta} outside [0, 0.5)")
        if self.delta_mode not in ("uniform", "per_row"):
            raise NoiseConfigError(f"unknown delta_mode {self.delta_mode!r}")

    def resolve_delta(self, H_o: BitMatrix | None = None) -> float:
        """Scalar delta used by the decoder: explicit, else averaged from ``q``."""
        if self.delta is not None:
            return self.delta
        if self.q is None or H_o is None:
            raise NoiseConfigError("delta unresolved: give delta, or q together with H_o")
        return average_delta(H_o, self.q)

    def flip_probabilities(self, row_weights) -> np.ndarray:
        """Per-bit flip probability of the measured syndrome."""
        m = len(row_weights)
        if self.delta_mode == "per_row":
            if self.q is None:
                raise NoiseConfigError("per_row mode requires q")
            return np.array([row_flip_probability(w, self.q) for w in row_weights])
        if self.delta is not None:
            return np.full(m, self.delta)
        if self.q is None:
            raise NoiseConfigError("uniform mode requires delta or q")
        return np.full(m, mean_flip_probability(row_weights, self.q))

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "q": self.q, "delta": self.delta,
                "delta_mode": self.delta_mode, "seed": self.seed}


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for ``(seed, *key)``, stable across processes."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean ``(..., width)`` array into ``uint64`` words, column ``j`` -> bit ``j``."""
    width = bits.shape[-1]
    if width > 64:
        raise ValueError("at most 64 bits per word")
    weights = np.left_shift(np.uint64(1), np.arange(width, dtype=np.uint64))
    return (bits.astype(np.uint64) * weights).sum(axis=-1, dtype=np.uint64)


def sample_errors(count: int, n: int, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """``count`` packed BSC(epsilon) error patterns of length ``n``."""
    return pack_bits(rng.random((count, n)) < epsilon)


def sample_error(n: int, epsilon: float, rng: np.random.Generator) -> BitVector:
    return BitVector(n, int(sample_errors(1, n, epsilon, rng)[0]))


def sample_syndrome_flips(count: int, probabilities: np.ndarray,
                          rng: np.random.Generator) -> np.ndarray:
    """Packed flip patterns; bit ``j`` set with probability ``probabilities[j]``."""
    return pack_bits(rng.random((count, len(probabilities))) < probabilities)


def sample_syndrome_noise(m: int, spec: NoiseSpec, row_weights, rng: np.random.Generator) -> BitVector:
    if len(row_weights) != m:
        raise NoiseConfigError(f"{len(row_weights)} row weights for m={m}")
    probs = spec.flip_probabilities(row_weights)
    return BitVector(m, int(sample_syndrome_flips(1, probs, rng)[0]))
