"""Capacity estimation, pairwise-error-probability bounds, and the
closed-form selection gains of the Golden code family.

Capacity estimators work from eigenvalue samples of the (induced) channel
Grammian, so one batch of channel draws prices a whole SNR grid; passing
the same ``channels`` array to both estimators gives paired estimates,
which is what makes the information-losslessness comparison sharp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .batch import apply_single_feedback, induce_batch
from .channel import draw_cn
from .codes import MU, TAU, CodeSpec
from .errors import ContractViolation


@dataclass(frozen=True)
class CapacityEstimate:
    bits_per_channel_use: float
    std_error: float
    samples: int
    snr_db: float


@dataclass(frozen=True)
class PepBound:
    diversity_order: int
    coding_gain: float
    bound_value: float


def _estimates(eig: np.ndarray, snr_grid_db, m: int, t: float) -> list[CapacityEstimate]:
    """Fold per-sample Grammian eigenvalues into per-SNR capacity estimates."""
    out = []
    samples = eig.shape[0]
    for db in snr_grid_db:
        f = 10.0 ** (db / 10.0) / m
        per_sample = np.sum(np.log2(1.0 + f * eig), axis=1) / t
        std = float(per_sample.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
        out.append(
            CapacityEstimate(
                bits_per_channel_use=float(per_sample.mean()),
                std_error=std,
                samples=samples,
                snr_db=float(db),
            )
        )
    return out


def capacity_c0(
    m: int,
    n: int,
    snr_grid_db,
    samples: int,
    rng: np.random.Generator | None = None,
    channels: np.ndarray | None = None,
) -> list[CapacityEstimate]:
    """Unconstrained ergodic capacity E log2 det(I_N + (snr/M) H H')."""
    if channels is None:
        if samples < 1:
            raise ContractViolation("samples must be >= 1")
        channels = draw_cn(rng, (samples, n, m), 1.0)
    gram = channels @ np.conj(channels).swapaxes(-1, -2)
    eig = np.linalg.eigvalsh(gram)
    return _estimates(eig, snr_grid_db, m, 1.0)


def code_grammian_eigenvalues(
    code: CodeSpec,
    feedback: str,
    channels: np.ndarray,
    K: int = 4,
    phase_grid: str = "half",
) -> np.ndarray:
    """Per-sample eigenvalues of induce(h)' induce(h) after feedback."""
    h, variants = apply_single_feedback(code, channels, feedback, K, phase_grid)
    heff = induce_batch(code, h, variants)
    gram = np.einsum("bri,brj->bij", np.conj(heff), heff)
    return np.linalg.eigvalsh(gram)


def capacity_code(
    code: CodeSpec,
    feedback: str,
    snr_grid_db,
    samples: int,
    rng: np.random.Generator | None = None,
    n_rx: int = 1,
    K: int = 4,
    phase_grid: str = "half",
    channels: np.ndarray | None = None,
) -> list[CapacityEstimate]:
    """Achievable code capacity (1/T) E log2 det(I + (snr/M) Heff Heff').

    ``feedback`` is one of the single-user selection rules ("none",
    "closed-form", "generic", "circulant", "golden"); the induced channel
    is the post-selection one, so this measures what the adapted scheme
    can reach.  Supplying ``channels`` (same array to capacity_c0) yields
    paired estimates.
    """
    if channels is None:
        if samples < 1:
            raise ContractViolation("samples must be >= 1")
        channels = draw_cn(rng, (samples, n_rx, code.m), 1.0)
    eig = code_grammian_eigenvalues(code, feedback, channels, K, phase_grid)
    return _estimates(eig, snr_grid_db, code.m, float(code.t))


def capacity_code_highsnr(
    code: CodeSpec,
    snr_db: float,
    samples: int,
    rng: np.random.Generator,
    n_rx: int = 1,
) -> tuple[float, float]:
    """Exact capacity and its high-SNR approximation (1/T) E log2(prod w_i f^d).

    Only meaningful for full-diversity codes (every eigenvalue must be
    strictly positive almost surely).
    """
    channels = draw_cn(rng, (samples, n_rx, code.m), 1.0)
    eig = code_grammian_eigenvalues(code, "none", channels)
    f = 10.0 ** (snr_db / 10.0) / code.m
    exact = float(np.mean(np.sum(np.log2(1.0 + f * eig), axis=1)) / code.t)
    approx = float(np.mean(np.sum(np.log2(f * eig), axis=1)) / code.t)
    return exact, approx


def pep_bound(heff: np.ndarray, es_over_4mn0: float) -> PepBound:
    """Pairwise-error bound 1/prod(1 + f w_i) over the Grammian spectrum.

    The asymptotic pieces (diversity order d = rank, coding gain = product
    of nonzero eigenvalues) are reported alongside the exact bound value.
    """
    if es_over_4mn0 <= 0:
        raise ContractViolation("the SNR factor must be positive")
    heff = linalg.as_cmat(heff)
    spectrum = linalg.hermitian_eigenvalues(np.conj(heff.T) @ heff)
    clipped = np.clip(spectrum.values, 0.0, None)
    bound = float(1.0 / np.prod(1.0 + es_over_4mn0 * clipped))
    nz = spectrum.nonzero()
    gain = float(np.prod(nz)) if nz.size else 0.0
    return PepBound(diversity_order=spectrum.rank, coding_gain=gain, bound_value=bound)


# --- Golden-code selection gains ---------------------------------------------

_W1 = 1.0 + TAU**2
_W2 = 1.0 + MU**2


def golden_gain_analytic() -> float:
    """Average-SNR gain of 2x1 variant selection, in dB.

    Selection pairs the stronger gain with the heavier column weight
    1 + tau^2; with E[h_max^2] = 1.5 sigma^2 and E[h_min^2] = 0.5 sigma^2
    the ratio over the fixed-variant average is
    (1.5 (1+tau^2) + 0.5 (1+mu^2)) / (2 + tau^2 + mu^2).
    """
    return float(10 * np.log10((1.5 * _W1 + 0.5 * _W2) / (2.0 + TAU**2 + MU**2)))


def golden_moments_mc(
    samples: int, rng: np.random.Generator, sigma2: float = 1.0
) -> tuple[float, float]:
    """MC estimates of E[h_max^2] and E[h_min^2] for two CN(0, sigma2) gains."""
    e = np.abs(draw_cn(rng, (samples, 2), sigma2)) ** 2
    return float(e.max(axis=1).mean()), float(e.min(axis=1).mean())


def golden_gain_2x1_mc(
    samples: int,
    rng: np.random.Generator,
    sigma2: float = 1.0,
    selection: bool = True,
) -> float:
    """MC average-SNR ratio (dB) of 2x1 variant selection over no selection.

    Numerator and denominator share the same draws, so disabling selection
    returns exactly 0 dB.
    """
    e = np.abs(draw_cn(rng, (samples, 2), sigma2)) ** 2
    base = e[:, 0] * _W1 + e[:, 1] * _W2
    num = e.max(axis=1) * _W1 + e.min(axis=1) * _W2 if selection else base
    return float(10 * np.log10(num.mean() / base.mean()))


def golden_gain_2x2_mc(
    samples: int,
    rng: np.random.Generator,
    sigma2: float = 1.0,
    selection: bool = True,
) -> float:
    """MC average-SNR ratio (dB) of 2x2 variant selection over no selection.

    The selection statistic sums each transmit antenna's energy across both
    receive antennas before comparing.
    """
    if samples < 10**5:
        raise ContractViolation("the 2x2 gain estimate needs at least 1e5 samples")
    e = np.abs(draw_cn(rng, (samples, 4), sigma2)) ** 2
    col1 = e[:, 0] + e[:, 2]
    col2 = e[:, 1] + e[:, 3]
    base = col1 * _W1 + col2 * _W2
    num = (
        np.maximum(col1, col2) * _W1 + np.minimum(col1, col2) * _W2
        if selection
        else base
    )
    return float(10 * np.log10(num.mean() / base.mean()))
