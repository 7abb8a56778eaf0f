"""Decoder bank: exhaustive ML, zero forcing, two-user decorrelation, and
the Fourier-diagonalized linear decoder for circulant systems.

All decoders work on the induced linear model r = scale * Heff @ c + n and
report the same residual metric ||r - scale * Heff @ c_hat||^2, so a
decoder's metric can be compared across decoders on the same trial (ML's
is the global minimum by construction).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .codes import CirculantWeights, induce_circulant, reversal_perm
from .constellation import Constellation, nearest_labels
from .errors import ContractViolation, IllConditionedError

ML_CANDIDATE_GUARD = 2**20


@dataclass(frozen=True)
class DecodeResult:
    symbols: np.ndarray
    metric: float
    complexity_counter: int
    labels: np.ndarray | None = None


def candidate_table(c: Constellation, l: int) -> np.ndarray:
    """All |C|^l candidate symbol vectors, lexicographic in the label vector."""
    grids = np.meshgrid(*([np.arange(c.order)] * l), indexing="ij")
    labels = np.stack([g.reshape(-1) for g in grids], axis=-1)
    return c.points[labels]


def ml_decode(
    heff: np.ndarray, r: np.ndarray, c: Constellation, l: int, scale: float = 1.0
) -> DecodeResult:
    """Exhaustive minimum-residual search over the full product constellation.

    Candidates are enumerated lexicographically by label vector and the
    first minimum wins, so ties resolve deterministically.  Refuses when
    |C|^l exceeds 2**20 (callers should fall back to zero forcing).
    """
    if c.order**l > ML_CANDIDATE_GUARD:
        raise ContractViolation(
            f"{c.order}**{l} candidates exceed the {ML_CANDIDATE_GUARD} enumeration guard"
        )
    heff = linalg.as_cmat(heff)
    r = np.asarray(r, dtype=np.complex128).reshape(-1)
    cand = candidate_table(c, l)
    resid = r[None, :] - scale * (cand @ heff.T)
    metrics = np.sum(np.abs(resid) ** 2, axis=1)
    win = int(np.argmin(metrics))
    labels = np.array(np.unravel_index(win, (c.order,) * l))
    return DecodeResult(
        symbols=cand[win],
        metric=float(metrics[win]),
        complexity_counter=c.order**l,
        labels=labels,
    )


def zf_decode(
    heff: np.ndarray, r: np.ndarray, c: Constellation, l: int, scale: float = 1.0
) -> DecodeResult:
    """Pseudo-inverse projection followed by per-coordinate slicing.

    Decouples the system into l independent nearest-point decisions; the
    reported metric is the residual of the sliced decision in the received
    domain (comparable to ml_decode's).
    """
    heff = linalg.as_cmat(heff)
    r = np.asarray(r, dtype=np.complex128).reshape(-1)
    z = linalg.pseudo_inverse(heff) @ r
    labels = nearest_labels(z / scale, c.points)
    symbols = c.points[labels]
    resid = r - scale * (heff @ symbols)
    return DecodeResult(
        symbols=symbols,
        metric=float(np.sum(np.abs(resid) ** 2)),
        complexity_counter=l * c.order,
        labels=labels,
    )


# --- two-user machinery -----------------------------------------------------


def _checked_inv(block: np.ndarray, name: str) -> np.ndarray:
    if abs(np.linalg.det(block)) == 0:
        raise ContractViolation(f"singular {name} block; frame cannot be decorrelated")
    return np.linalg.inv(block)


def mu_decorrelate(r1, r2, h1, h2, g1, g2):
    """Zero cross-user terms in the stacked two-user Alamouti system.

    The receive-antenna systems r1 = s(H1 c1 + G1 c2) + n1 and
    r2 = s(H2 c1 + G2 c2) + n2 are combined with
    W = ((I, -G1 G2^-1), (-H2 H1^-1, I)), leaving user 1 on
    H' = H1 - G1 G2^-1 H2 and user 2 on G' = G2 - H2 H1^-1 G1.
    """
    r1 = np.asarray(r1, dtype=np.complex128).reshape(-1)
    r2 = np.asarray(r2, dtype=np.complex128).reshape(-1)
    g2_inv = _checked_inv(np.asarray(g2, dtype=np.complex128), "G2")
    h1_inv = _checked_inv(np.asarray(h1, dtype=np.complex128), "H1")
    q1 = g1 @ g2_inv
    q2 = h2 @ h1_inv
    r1p = r1 - q1 @ r2
    r2p = r2 - q2 @ r1
    hp = h1 - q1 @ h2
    gp = g2 - q2 @ g1
    return r1p, r2p, hp, gp


def mu_zf_decode(
    r1, r2, h1, h2, g1, g2, c: Constellation, scale: float = 1.0
) -> tuple[DecodeResult, DecodeResult]:
    """Decorrelate, then decode each user independently on its 2x2 system."""
    r1p, r2p, hp, gp = mu_decorrelate(r1, r2, h1, h2, g1, g2)
    return (
        zf_decode(hp, r1p, c, 2, scale),
        zf_decode(gp, r2p, c, 2, scale),
    )


def mu_ml_decode(
    r1, r2, h1, h2, g1, g2, c: Constellation, scale: float = 1.0
) -> tuple[DecodeResult, DecodeResult]:
    """Joint exhaustive search over both users' symbol pairs.

    Decodes the stacked 4x4 system ((r1), (r2)) = s ((H1, G1), (H2, G2))
    (c1; c2) + n; both returned results carry the joint metric and the
    joint candidate count.
    """
    top = np.concatenate([np.asarray(h1), np.asarray(g1)], axis=1)
    bot = np.concatenate([np.asarray(h2), np.asarray(g2)], axis=1)
    heff = np.concatenate([top, bot], axis=0)
    r = np.concatenate(
        [np.asarray(r1, dtype=np.complex128).reshape(-1), np.asarray(r2, dtype=np.complex128).reshape(-1)]
    )
    joint = ml_decode(heff, r, c, 4, scale)
    u1 = DecodeResult(joint.symbols[:2], joint.metric, joint.complexity_counter, joint.labels[:2])
    u2 = DecodeResult(joint.symbols[2:], joint.metric, joint.complexity_counter, joint.labels[2:])
    return u1, u2


# --- circulant linear decoder ------------------------------------------------

EIG_RTOL = 1e-9


def circulant_fourier_decode(
    h: np.ndarray,
    r: np.ndarray,
    c: Constellation,
    weights: CirculantWeights | None = None,
    scale: float = 1.0,
) -> DecodeResult:
    """Invert a circulant system through its Fourier diagonalization.

    ``r`` is the induced-domain received vector of the circulant system
    built on gains ``h`` (for the weighted 3x3 design that is the raw
    received frame; the plain design's time reversal is undone here).  The
    channel is diagonalized as F^-1 H F = diag(h . f_j); the estimate is
    sliced per symbol after dividing out the alpha/beta weights (weighted
    design) or undoing the symbol reversal (plain design).  Decisions are
    identical to zf_decode on the equivalent matrix system, at O(M^2) cost.
    """
    h = np.asarray(h, dtype=np.complex128).reshape(-1)
    r = np.asarray(r, dtype=np.complex128).reshape(-1)
    m = h.shape[0]
    if weights is not None and m != 3:
        raise ContractViolation("weights only apply to the 3x3 design")
    f = linalg.fourier_basis(m)
    eigs = h @ f
    if np.min(np.abs(eigs)) < EIG_RTOL * np.linalg.norm(h):
        raise IllConditionedError(
            "near-singular circulant channel: an eigenvalue h.f_j is below tolerance"
        )
    # z = H^-1 r / scale with H = F diag(eigs) F^-1 and F^-1 = conj(F)/M
    z = (f @ ((np.conj(f) @ r) / eigs)) / (m * scale)
    if weights is not None:
        est = z / weights.as_vector()
    else:
        est = z[reversal_perm(m)]
    labels = nearest_labels(est, c.points)
    symbols = c.points[labels]
    induced = symbols * weights.as_vector() if weights is not None else symbols[reversal_perm(m)]
    resid = r - scale * (induce_circulant(h) @ induced)
    return DecodeResult(
        symbols=symbols,
        metric=float(np.sum(np.abs(resid) ** 2)),
        complexity_counter=m * c.order,
        labels=labels,
    )
