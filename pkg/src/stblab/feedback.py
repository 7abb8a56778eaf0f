"""Receiver-side selection of phase indices and code variants.

Every selector does an exhaustive search over its (finite) decision grid
and breaks ties by returning the first index in lexicographic order, so
identical inputs always produce identical decisions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .channel import PhaseSite, apply_phase
from .codes import GOLDEN_G1, GOLDEN_G2, QOSTBC, CodeSpec, GoldenVariant, induce_alamouti
from .errors import ContractViolation


@dataclass(frozen=True)
class FeedbackDecision:
    """Outcome of a selection: adapted sites or a chosen variant.

    objective_value is the selected criterion value (re-evaluating the
    criterion at the returned indices reproduces it); feedback_bits is the
    cost of signalling the decision back, sum of log2(K) over sites or 1
    for a binary variant choice.
    """

    objective_value: float
    feedback_bits: float
    sites: tuple[PhaseSite, ...] = ()
    variant: GoldenVariant | None = None
    rank: int | None = None
    theta_hat: float | None = None
    fallback: bool = False


def _grammian_key(code: CodeSpec, h: np.ndarray) -> tuple[int, float, float]:
    """(rank, log-sum of nonzero eigenvalues, product) of induce(h)' induce(h)."""
    hh = code.induce(h)
    spec = linalg.hermitian_eigenvalues(np.conj(hh.T) @ hh)
    nz = spec.nonzero()
    if nz.size == 0:
        return 0, -np.inf, 0.0
    return spec.rank, float(np.sum(np.log(nz))), float(np.prod(nz))


def select_generic(
    code: CodeSpec,
    h: np.ndarray,
    sites: list[tuple[int, int]],
    K: int,
    grid: str = "full",
) -> FeedbackDecision:
    """Exhaustive phase search maximizing (rank, product of nonzero eigenvalues).

    ``sites`` lists 1-based (transmit, receive) gain positions; all share the
    level count K.  The K^len(sites) combinations are scanned in lexicographic
    order and the first maximizer wins.  When the induced Grammian is full
    rank everywhere this is argmax of its determinant.
    """
    if K < 1:
        raise ContractViolation("K must be >= 1")
    h = np.atleast_2d(np.asarray(h, dtype=np.complex128))
    best_key: tuple[int, float] | None = None
    best: tuple[tuple[int, ...], float, int] | None = None
    for ks in itertools.product(range(1, K + 1), repeat=len(sites)):
        trial = [PhaseSite(i, j, k, K, grid) for (i, j), k in zip(sites, ks)]
        rank, logsum, prod = _grammian_key(code, apply_phase(h, trial))
        key = (rank, logsum)
        if best_key is None or key > best_key:
            best_key = key
            best = (ks, prod, rank)
    ks, prod, rank = best
    chosen = tuple(PhaseSite(i, j, k, K, grid) for (i, j), k in zip(sites, ks))
    return FeedbackDecision(
        objective_value=prod,
        feedback_bits=len(sites) * float(np.log2(K)),
        sites=chosen,
        rank=rank,
    )


def qostbc_b_at(h: np.ndarray, k: int, K: int) -> float:
    """The Grammian off-diagonal b after rotating h1 by e^(i 2 pi k / K)."""
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    z1 = h[0] * np.conj(h[3])
    z2 = h[1] * np.conj(h[2])
    return float(2 * np.real(z1 * np.exp(2j * np.pi * k / K)) - 2 * np.real(z2))


def select_qostbc_closed_form(h: np.ndarray, K: int) -> FeedbackDecision:
    """Pick the h1 rotation minimizing |b| without forming any matrices.

    Rotating h1 by theta moves the Grammian coupling to
    b(theta) = 2 Re(h1 h4* e^(i theta)) - 2 Re(h2 h3*), a pure sinusoid in
    theta, so the winner comes from K scalar evaluations.  The recorded
    theta_hat = angle(h2 h3* / (h1 h4*)) is the continuous minimizer's
    phase target.  Degenerate h1 h4* = 0 (b unaffected by the rotation)
    falls back to the generic rank/determinant search, flagged.
    """
    if K < 1:
        raise ContractViolation("K must be >= 1")
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    if h.shape != (4,):
        raise ContractViolation("closed-form selection needs exactly 4 gains")
    z1 = h[0] * np.conj(h[3])
    z2 = h[1] * np.conj(h[2])
    if z1 == 0:
        generic = select_generic(QOSTBC, h[None, :], [(1, 1)], K)
        return FeedbackDecision(
            objective_value=generic.objective_value,
            feedback_bits=generic.feedback_bits,
            sites=generic.sites,
            rank=generic.rank,
            fallback=True,
        )
    theta_hat = float(np.angle(z2 / z1))
    ks = np.arange(1, K + 1)
    b = 2 * np.real(z1 * np.exp(2j * np.pi * ks / K)) - 2 * np.real(z2)
    k_hat = int(ks[np.argmin(np.abs(b))])
    return FeedbackDecision(
        objective_value=float(np.abs(b[k_hat - 1])),
        feedback_bits=float(np.log2(K)),
        sites=(PhaseSite(1, 1, k_hat, K),),
        theta_hat=theta_hat,
    )


def interference_coefficient(hs: np.ndarray, gs: np.ndarray) -> float:
    """||Hs' Gs||_F / (||Hs||_F ||Gs||_F) for stacked two-user blocks; in [0, 1]."""
    hs = np.asarray(hs, dtype=np.complex128)
    gs = np.asarray(gs, dtype=np.complex128)
    nh = np.linalg.norm(hs)
    ng = np.linalg.norm(gs)
    if nh == 0 or ng == 0:
        raise ContractViolation("interference coefficient undefined for a zero channel")
    return float(np.linalg.norm(np.conj(hs.T) @ gs) / (nh * ng))


def stack_two_user(hg: np.ndarray, gamma1: complex = 1.0, gamma2: complex = 1.0):
    """Stacked 4x2 blocks (Hs, Gs) from gains (h11,h12,h21,h22,g11,g12,g21,g22).

    h_ij is user 1's gain from its transmit antenna i to receive antenna j,
    g_ij the same for user 2.  gamma1 rotates user 1's first-antenna gains
    (h11, h12); gamma2 rotates (g11, g12).  Block j of Hs is the Alamouti
    induced channel seen at receive antenna j.
    """
    hg = np.asarray(hg, dtype=np.complex128).reshape(-1)
    if hg.shape != (8,):
        raise ContractViolation("two-user selection needs exactly 8 gains")
    h11, h12, h21, h22, g11, g12, g21, g22 = hg
    hs = induce_alamouti(np.array([[gamma1 * h11, h21], [gamma1 * h12, h22]]))
    gs = induce_alamouti(np.array([[gamma2 * g11, g21], [gamma2 * g12, g22]]))
    return hs, gs


def select_multiuser(channels: np.ndarray, K1: int, K2: int) -> FeedbackDecision:
    """Joint grid search minimizing the two-user interference coefficient.

    Scans the K1 x K2 grid of phase pairs (gamma1 on h11/h12, gamma2 on
    g11/g12) and returns the lexicographic-first minimizer of ||lambda||.
    The two sites are recorded with the receive slot standing in for the
    user index (user 1 -> (1, 1), user 2 -> (1, 2)).
    """
    if K1 < 1 or K2 < 1:
        raise ContractViolation("K1 and K2 must be >= 1")
    channels = np.asarray(channels, dtype=np.complex128).reshape(-1)
    best = None
    best_ks = None
    for k1, k2 in itertools.product(range(1, K1 + 1), range(1, K2 + 1)):
        hs, gs = stack_two_user(
            channels,
            np.exp(2j * np.pi * k1 / K1),
            np.exp(2j * np.pi * k2 / K2),
        )
        lam = interference_coefficient(hs, gs)
        if best is None or lam < best:
            best = lam
            best_ks = (k1, k2)
    k1, k2 = best_ks
    return FeedbackDecision(
        objective_value=best,
        feedback_bits=float(np.log2(K1) + np.log2(K2)),
        sites=(PhaseSite(1, 1, k1, K1), PhaseSite(1, 2, k2, K2)),
    )


def select_golden_variant(h: np.ndarray, receive_count: int) -> FeedbackDecision:
    """Choose G1 or G2 from the per-transmit-antenna channel energies.

    One receive antenna: G1 iff |h1| > |h2|.  Two: G1 iff
    |h1|^2 + |h3|^2 > |h2|^2 + |h4|^2 (first-antenna energy wins the
    stronger scaling).  Equality picks G1.
    """
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    if receive_count not in (1, 2) or h.shape[0] != 2 * receive_count:
        raise ContractViolation("golden selection needs 2 gains (1 rx) or 4 gains (2 rx)")
    e = np.abs(h) ** 2
    if receive_count == 1:
        e1, e2 = e[0], e[1]
    else:
        e1, e2 = e[0] + e[2], e[1] + e[3]
    variant = GOLDEN_G1 if e1 >= e2 else GOLDEN_G2
    return FeedbackDecision(
        objective_value=float(max(e1, e2)),
        feedback_bits=1.0,
        variant=variant,
    )


def circulant_objective(h: np.ndarray) -> float:
    """|prod_j h . f_j| over the Fourier basis columns, = det(Gram)^(1/2)."""
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    return float(np.abs(np.prod(h @ linalg.fourier_basis(h.shape[0]))))


def select_circulant(
    h: np.ndarray,
    K: int,
    grid: str = "half",
    n_sites: int = 1,
) -> FeedbackDecision:
    """Phase search maximizing the circulant eigenvalue-product modulus.

    Adapts the first ``n_sites`` gains, each over K levels of the chosen
    grid ("half": e^(i pi k / K), the printed step; "full": e^(i 2 pi k / K)).
    Lexicographic-first maximizer across the K^n_sites combinations.
    """
    if K < 1:
        raise ContractViolation("K must be >= 1")
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    m = h.shape[0]
    if not 1 <= n_sites <= m:
        raise ContractViolation(f"n_sites must be in 1..{m}")
    f = linalg.fourier_basis(m)
    step = np.pi if grid == "half" else 2 * np.pi
    best = None
    best_ks = None
    for ks in itertools.product(range(1, K + 1), repeat=n_sites):
        trial = h.copy()
        trial[:n_sites] *= np.exp(1j * step * np.asarray(ks) / K)
        obj = float(np.abs(np.prod(trial @ f)))
        if best is None or obj > best:
            best = obj
            best_ks = ks
    sites = tuple(PhaseSite(i + 1, 1, k, K, grid) for i, k in enumerate(best_ks))
    return FeedbackDecision(
        objective_value=best,
        feedback_bits=n_sites * float(np.log2(K)),
        sites=sites,
    )
