"""Quasi-static Rayleigh channels, AWGN, SNR conventions, phase adaptation.

The transmission model throughout is

    r = sqrt(Es / (M * N0)) * H @ X + n,

with H constant over a frame, redrawn independently between frames, and n
having i.i.d. CN(0, n0) entries.  ``scale_for_snr`` turns a target SNR into
the pair (es_scale, n0) for that model; three named conventions cover the
different SNR definitions the experiments use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import CodeSpec
from .errors import ContractViolation

SNR_CONVENTIONS = ("per-model-eq", "qostbc-frobenius", "golden-eq")
PHASE_GRIDS = ("full", "half")


@dataclass(frozen=True)
class ChannelRealization:
    """One frame's N x M gain matrix with its per-entry variance."""

    h: np.ndarray
    sigma2: float
    frame_index: int = 0

    @property
    def n_rx(self) -> int:
        return self.h.shape[0]

    @property
    def n_tx(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class PhaseSite:
    """A phase-adaptation site: gain (i, j) rotated to level k of K.

    Indices are 1-based to match the h_ij notation: i is the transmit
    antenna, j the receive antenna.  Levels satisfy 1 <= k <= K; on the
    default "full" grid the rotation is e^(i 2 pi k / K), so k = K is a
    no-op.  The "half" grid uses e^(i pi k / K) (the circulant experiments'
    step).
    """

    i: int
    j: int
    k: int
    K: int
    grid: str = "full"

    def __post_init__(self):
        if not 1 <= self.k <= self.K:
            raise ContractViolation(f"phase level k={self.k} outside 1..{self.K}")
        if self.grid not in PHASE_GRIDS:
            raise ContractViolation(f"unknown phase grid {self.grid!r}")

    @property
    def angle(self) -> float:
        step = 2 * np.pi if self.grid == "full" else np.pi
        return step * self.k / self.K


@dataclass(frozen=True)
class SnrSpec:
    """Target SNR plus the convention defining it.

    ``es_over_n0`` holds the requested linear SNR in the experiment's own
    convention; the name follows the baseline definition SNR = Es/N0, which
    is exactly what it is under "per-model-eq".  The other conventions
    derive Es/N0 from it:

    per-model-eq      SNR = Es/N0
    qostbc-frobenius  SNR = (Es/N0) * E||H||_F^2 / 4   (M = 4 codes)
    golden-eq         SNR = (Es/N0) * sigma2 * (2 + tau^2 + mu^2)
                          = (Es/N0) * sigma2 * 5       (M = 2 Golden codes)
    """

    es_over_n0: float
    convention: str = "per-model-eq"

    def __post_init__(self):
        if self.es_over_n0 <= 0:
            raise ContractViolation("es_over_n0 must be positive")
        if self.convention not in SNR_CONVENTIONS:
            raise ContractViolation(
                f"unknown SNR convention {self.convention!r}; known: {', '.join(SNR_CONVENTIONS)}"
            )


def draw_cn(rng: np.random.Generator, shape, var: float) -> np.ndarray:
    """I.i.d. circularly-symmetric complex Gaussian entries, variance var each."""
    scale = np.sqrt(var / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_channel(m: int, n: int, sigma2: float, rng: np.random.Generator) -> ChannelRealization:
    """Draw one N x M quasi-static Rayleigh realization, CN(0, sigma2) entries."""
    if sigma2 <= 0:
        raise ContractViolation("sigma2 must be positive")
    return ChannelRealization(h=draw_cn(rng, (n, m), sigma2), sigma2=sigma2)


def apply_phase(h: np.ndarray, sites: list[PhaseSite]) -> np.ndarray:
    """Rotate the listed gains; all other entries are returned bit-identical."""
    h = np.asarray(h, dtype=np.complex128)
    out = h.copy()
    n, m = out.shape
    for s in sites:
        if not (1 <= s.i <= m and 1 <= s.j <= n):
            raise ContractViolation(f"site ({s.i}, {s.j}) outside a {n}x{m} channel")
        out[s.j - 1, s.i - 1] = h[s.j - 1, s.i - 1] * np.exp(1j * s.angle)
    return out


def add_awgn(signal: np.ndarray, n0: float, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. CN(0, n0) noise per entry; n0 = 0 returns the input unchanged."""
    if n0 < 0:
        raise ContractViolation("n0 must be non-negative")
    signal = np.asarray(signal, dtype=np.complex128)
    if n0 == 0:
        return signal
    return signal + draw_cn(rng, signal.shape, n0)


def es_over_n0_for(spec: SnrSpec, m: int, n: int, sigma2: float) -> float:
    """Resolve the convention-specific target SNR into a literal Es/N0."""
    if spec.convention == "per-model-eq":
        return spec.es_over_n0
    if spec.convention == "qostbc-frobenius":
        if m != 4:
            raise ContractViolation("qostbc-frobenius convention is defined for M = 4 codes")
        # SNR = (Es/N0) * ||H||_F^2 / 4 with the Frobenius term taken in
        # expectation, E||H||_F^2 = M*N*sigma2 (per-realization reads of the
        # definition would amount to channel-inverting power control).
        return spec.es_over_n0 * 4.0 / (m * n * sigma2)
    if m != 2:
        raise ContractViolation("golden-eq convention is defined for M = 2 codes")
    # the denominator 2 + tau^2 + mu^2 equals 5 (tau + mu = 1, tau * mu = -1)
    return spec.es_over_n0 / (5.0 * sigma2)


def scale_for_snr(spec: SnrSpec, channel: ChannelRealization, code: CodeSpec) -> tuple[float, float]:
    """Transmit scaling sqrt(Es/(M*N0)) and noise power n0 for a target SNR.

    The noise is kept at unit power (n0 = 1); the SNR is carried entirely by
    the transmit scale.
    """
    ratio = es_over_n0_for(spec, code.m, channel.n_rx, channel.sigma2)
    n0 = 1.0
    return float(np.sqrt(ratio * n0 / code.m)), n0
