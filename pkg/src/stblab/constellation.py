"""Square QAM constellations with Gray bit labeling.

Labels double as bit patterns: the integer label of a point, read MSB
first, is its bit word.  4-QAM uses bits (b1, b0) where b1 picks the sign
of the real part (0 -> +) and b0 the sign of the imaginary part.  16-QAM
extends the same rule per axis with a (sign, magnitude) pair per axis:
bits are (re_sign, re_mag, im_sign, im_mag) and the per-axis Gray sequence
is -3 -> (1,1), -1 -> (1,0), +1 -> (0,0), +3 -> (0,1).

Points are normalized to unit average energy (1/sqrt(2) for 4-QAM,
1/sqrt(10) for 16-QAM) so all transmit-power bookkeeping lives in the
channel scaling.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class Constellation:
    order: int
    points: np.ndarray  # indexed by label
    bits_per_symbol: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def _axis_level(sign_bit: int, mag_bit: int) -> int:
    # per-axis Gray pair -> amplitude level in {-3, -1, +1, +3}
    return (1 - 2 * sign_bit) * (1 + 2 * mag_bit)


@lru_cache(maxsize=None)
def make_constellation(order: int) -> Constellation:
    """Build the 4-QAM or 16-QAM constellation."""
    if order == 4:
        points = np.empty(4, dtype=np.complex128)
        for label in range(4):
            b1, b0 = (label >> 1) & 1, label & 1
            points[label] = ((1 - 2 * b1) + 1j * (1 - 2 * b0)) / np.sqrt(2)
        return Constellation(order=4, points=points, bits_per_symbol=2)
    if order == 16:
        points = np.empty(16, dtype=np.complex128)
        for label in range(16):
            b3, b2, b1, b0 = (label >> 3) & 1, (label >> 2) & 1, (label >> 1) & 1, label & 1
            points[label] = (_axis_level(b3, b2) + 1j * _axis_level(b1, b0)) / np.sqrt(10)
        return Constellation(order=16, points=points, bits_per_symbol=4)
    raise ContractViolation(f"unsupported constellation order {order} (use 4 or 16)")


def modulate(bits, c: Constellation) -> np.ndarray:
    """Map a bit sequence to symbols, MSB of each label first.

    The bit count must be divisible by log2(order).
    """
    b = np.asarray(bits, dtype=np.int64).ravel()
    if np.any((b != 0) & (b != 1)):
        raise ContractViolation("bits must be 0 or 1")
    bps = c.bits_per_symbol
    if b.size % bps != 0:
        raise ContractViolation(f"bit count {b.size} not divisible by {bps}")
    groups = b.reshape(-1, bps)
    labels = groups @ (1 << np.arange(bps - 1, -1, -1))
    return c.points[labels]


def demodulate_hard(symbols, c: Constellation) -> np.ndarray:
    """Nearest-point hard decisions, returned as a flat bit array.

    Euclidean nearest point; exact ties go to the lowest bit label.
    """
    s = np.asarray(symbols, dtype=np.complex128).ravel()
    labels = nearest_labels(s, c.points)
    return labels_to_bits(labels, c.bits_per_symbol)


def nearest_labels(symbols: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Labels of the nearest points; first (lowest) label wins ties."""
    d2 = np.abs(symbols[..., None] - points) ** 2
    return np.argmin(d2, axis=-1)


def labels_to_bits(labels: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((labels[..., None] >> shifts) & 1).reshape(*labels.shape[:-1], -1)


# popcount lookup for label XOR words, enough for 16-QAM labels
BIT_ERRORS = np.array([bin(i).count("1") for i in range(16)], dtype=np.int64)
