"""Vectorized per-batch simulation machinery behind the experiment harness.

Everything here operates on whole batches of frames at once and mirrors
the per-frame reference operations exactly: same selection rules, the same
first-index tie handling, the same induced-domain model

    r = scale * induce(h) @ map_symbols(x) + n,      n ~ CN(0, 1) i.i.d.

Simulating in the induced domain is licensed by the transference identity:
the per-code receive maps are noise-whiteness-preserving, so the induced
system is distributionally identical to transmitting the codeword matrix.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import kernels, linalg
from .channel import draw_cn
from .codes import (
    ALAMOUTI,
    GOLDEN_G1,
    GOLDEN_G2,
    CodeSpec,
    get_code,
    induce_golden,
)
from .constellation import BIT_ERRORS, make_constellation
from .decoders import EIG_RTOL, candidate_table
from .errors import ConfigError, ContractViolation, IllConditionedError
from .feedback import select_generic

TWO_USER_GAIN_ORDER = ("h11", "h12", "h21", "h22", "g11", "g12", "g21", "g22")


# --- cached candidate and slicing tables -------------------------------------


@lru_cache(maxsize=None)
def label_table(order: int, l: int) -> np.ndarray:
    """All |C|^l label vectors in lexicographic order, shape (|C|^l, l)."""
    grids = np.meshgrid(*([np.arange(order)] * l), indexing="ij")
    return np.stack([g.reshape(-1) for g in grids], axis=-1)


@lru_cache(maxsize=None)
def induced_candidates(code_name: str, order: int) -> np.ndarray:
    """The full product constellation pushed through the code's symbol map.

    Row j is map_symbols of the plain candidate with label vector
    label_table(order, L)[j], so an ML winner index directly identifies the
    original labels with no un-mapping step.
    """
    code = get_code(code_name)
    cand = candidate_table(make_constellation(order), code.l)
    return code.map_symbols(cand)


@lru_cache(maxsize=None)
def slice_table(code_name: str, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate slicing data for the induced domain.

    Returns (alphabets, src): alphabets[i, k] is the induced coordinate i
    value of source symbol points[k]; src[i] says which original symbol
    position induced coordinate i carries (only the plain circulant family
    actually permutes; everything else is positionally identity).
    Original labels are recovered as out[:, src] = sliced.
    """
    code = get_code(code_name)
    c = make_constellation(order)
    const_vecs = np.tile(c.points[:, None], (1, code.l))
    alphabets = code.map_symbols(const_vecs).T.copy()
    markers = np.arange(1, code.l + 1, dtype=np.complex128)
    mapped = code.map_symbols(markers)
    ints = np.rint(mapped.real).astype(np.int64)
    if (
        np.allclose(mapped.imag, 0.0)
        and np.allclose(mapped.real, ints)
        and sorted(ints.tolist()) == list(range(1, code.l + 1))
    ):
        src = ints - 1
    else:
        src = np.arange(code.l)
    return alphabets, src


# --- batched channel generation ----------------------------------------------


def draw_single_user(rng: np.random.Generator, b: int, n_rx: int, m: int) -> np.ndarray:
    """(b, N, M) unit-variance quasi-static gains."""
    return draw_cn(rng, (b, n_rx, m), 1.0)


def draw_two_user(rng: np.random.Generator, b: int, sir_gamma: float) -> np.ndarray:
    """(b, 8) gains in TWO_USER_GAIN_ORDER.

    Each user's gains to its own receive antenna have unit variance; the
    cross gains carry the interference power sir_gamma (user 1 owns antenna
    1, user 2 owns antenna 2).
    """
    g = sir_gamma
    variances = np.array([1.0, g, 1.0, g, g, 1.0, g, 1.0])
    return draw_cn(rng, (b, 8), 1.0) * np.sqrt(variances)


# --- batched feedback --------------------------------------------------------


def qostbc_phase_argmin(h: np.ndarray, K: int) -> np.ndarray:
    """Per-frame k in 1..K minimizing |b| after rotating h1; first min wins.

    This one argmin serves both the closed-form rule and the generic
    rank/determinant search: with a fixed, only |b| moves the QOSTBC
    Grammian criterion, and smaller |b| is always lexicographically better.
    """
    flat = h.reshape(h.shape[0], -1)
    z1 = flat[:, 0] * np.conj(flat[:, 3])
    z2 = flat[:, 1] * np.conj(flat[:, 2])
    ks = np.arange(1, K + 1)
    b_grid = 2 * np.real(z1[:, None] * np.exp(2j * np.pi * ks / K)[None, :])
    b_grid -= 2 * np.real(z2)[:, None]
    return ks[np.argmin(np.abs(b_grid), axis=1)]


def circulant_phase_argmax(h: np.ndarray, K: int, grid: str) -> np.ndarray:
    """Per-frame k maximizing |prod_j h.f_j| after rotating h1; first max wins."""
    flat = h.reshape(h.shape[0], -1)
    m = flat.shape[1]
    f = linalg.fourier_basis(m)
    step = np.pi if grid == "half" else 2 * np.pi
    ks = np.arange(1, K + 1)
    gammas = np.exp(1j * step * ks / K)
    base = flat @ f
    shift = (gammas[None, :] - 1.0)[:, :, None] * flat[:, None, 0:1] * f[0][None, None, :]
    obj = np.abs(np.prod(base[:, None, :] + shift, axis=2))
    return ks[np.argmax(obj, axis=1)]


def _generic_phase_loop(code: CodeSpec, h: np.ndarray, K: int) -> np.ndarray:
    """Per-frame generic selection fallback for codes without a fast path."""
    ks = np.empty(h.shape[0], dtype=np.int64)
    for i in range(h.shape[0]):
        ks[i] = select_generic(code, h[i], [(1, 1)], K).sites[0].k
    return ks


def apply_single_feedback(
    code: CodeSpec, h: np.ndarray, feedback: str, K: int, phase_grid: str
) -> tuple[np.ndarray, np.ndarray | None]:
    """Adapt a (b, N, M) gain batch; returns (adapted gains, golden variant mask).

    The variant mask is None unless feedback == "golden"; True selects G1.
    """
    if feedback == "none":
        return h, None
    if feedback == "golden":
        energy = np.abs(h) ** 2
        e1 = energy[..., 0].sum(axis=-1)
        e2 = energy[..., 1].sum(axis=-1)
        return h, e1 >= e2
    if feedback in ("closed-form", "generic"):
        if code.name == "qostbc":
            ks = qostbc_phase_argmin(h, K)
            out = h.copy()
            out[:, 0, 0] *= np.exp(2j * np.pi * ks / K)
            return out, None
        if feedback == "closed-form":
            raise ConfigError(f"closed-form feedback is specific to qostbc, not {code.name}")
        ks = _generic_phase_loop(code, h, K)
        out = h.copy()
        out[:, 0, 0] *= np.exp(2j * np.pi * ks / K)
        return out, None
    if feedback == "circulant":
        ks = circulant_phase_argmax(h, K, phase_grid)
        step = np.pi if phase_grid == "half" else 2 * np.pi
        out = h.copy()
        out[:, 0, 0] *= np.exp(1j * step * ks / K)
        return out, None
    raise ConfigError(f"feedback rule {feedback!r} does not apply to single-user runs")


def alamouti_block_batch(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """(..., 2, 2) blocks ((p, q), (-q*, p*))."""
    return np.stack(
        [
            np.stack([p, q], axis=-1),
            np.stack([-np.conj(q), np.conj(p)], axis=-1),
        ],
        axis=-2,
    )


def two_user_stacks(hg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (b, 4, 2) blocks (Hs, Gs) from (b, 8) gains."""
    h11, h12, h21, h22, g11, g12, g21, g22 = (hg[:, i] for i in range(8))
    hs = np.concatenate(
        [alamouti_block_batch(h11, h21), alamouti_block_batch(h12, h22)], axis=-2
    )
    gs = np.concatenate(
        [alamouti_block_batch(g11, g21), alamouti_block_batch(g12, g22)], axis=-2
    )
    return hs, gs


def interference_grid_argmin(hg: np.ndarray, K1: int, K2: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame (k1, k2) minimizing the interference coefficient.

    Scans the joint grid with k1 varying slowest and takes the first
    minimum.  The coefficient depends on the phases only through
    gamma1* gamma2, so with K1 = K2 every difference class (k2 - k1) mod K
    is an exact K-fold tie; the index returned within the winning class is
    then decided by floating-point rounding, which is harmless because all
    members adapt the channel to the same interference geometry.
    """
    b = hg.shape[0]
    gam1 = np.exp(2j * np.pi * np.arange(1, K1 + 1) / K1)
    gam2 = np.exp(2j * np.pi * np.arange(1, K2 + 1) / K2)
    h11, h12, h21, h22, g11, g12, g21, g22 = (hg[:, i] for i in range(8))
    # ||Hs||_F and ||Gs||_F are rotation-invariant, so only the cross term moves
    hs = np.concatenate(
        [
            alamouti_block_batch(h11[:, None] * gam1[None, :], np.broadcast_to(h21[:, None], (b, K1))),
            alamouti_block_batch(h12[:, None] * gam1[None, :], np.broadcast_to(h22[:, None], (b, K1))),
        ],
        axis=-2,
    )
    gs = np.concatenate(
        [
            alamouti_block_batch(g11[:, None] * gam2[None, :], np.broadcast_to(g21[:, None], (b, K2))),
            alamouti_block_batch(g12[:, None] * gam2[None, :], np.broadcast_to(g22[:, None], (b, K2))),
        ],
        axis=-2,
    )
    cross = np.einsum("bkri,blrj->bklij", np.conj(hs), gs)
    lam = np.sqrt(np.sum(np.abs(cross) ** 2, axis=(-2, -1)))
    idx = np.argmin(lam.reshape(b, K1 * K2), axis=1)
    return idx // K2 + 1, idx % K2 + 1


def apply_two_user_feedback(hg: np.ndarray, feedback: str, K1: int, K2: int) -> np.ndarray:
    if feedback == "none":
        return hg
    if feedback != "multiuser":
        raise ConfigError(f"feedback rule {feedback!r} does not apply to two-user runs")
    k1, k2 = interference_grid_argmin(hg, K1, K2)
    out = hg.copy()
    out[:, 0] *= np.exp(2j * np.pi * k1 / K1)
    out[:, 1] *= np.exp(2j * np.pi * k1 / K1)
    out[:, 4] *= np.exp(2j * np.pi * k2 / K2)
    out[:, 5] *= np.exp(2j * np.pi * k2 / K2)
    return out


# --- batched induction --------------------------------------------------------


def induce_batch(code: CodeSpec, h: np.ndarray, variants: np.ndarray | None = None) -> np.ndarray:
    """(b, rows, L) induced channels; variants switches Golden G1/G2 per frame."""
    if variants is not None:
        g1 = induce_golden(GOLDEN_G1, h)
        g2 = induce_golden(GOLDEN_G2, h)
        return np.where(variants[:, None, None], g1, g2)
    if code.name in ("qostbc", "ostbc34") or code.name.startswith("circulant"):
        return code.induce(h[:, 0, :])
    return code.induce(h)


# --- batched decoding ----------------------------------------------------------


def decode_batch_ml(heff_scaled, r, code: CodeSpec, order: int) -> np.ndarray:
    cand = induced_candidates(code.name, order)
    idx = kernels.ml_argmin(heff_scaled, r, cand)
    return label_table(order, code.l)[idx]


def _scatter_labels(sliced: np.ndarray, src: np.ndarray) -> np.ndarray:
    out = np.empty_like(sliced)
    out[:, src] = sliced
    return out


def decode_batch_zf(heff_scaled, r, code: CodeSpec, order: int) -> np.ndarray:
    alphabets, src = slice_table(code.name, order)
    z = kernels.zf_solve(heff_scaled, r)
    return _scatter_labels(kernels.slice_nearest(z, alphabets), src)


def decode_batch_fourier(h, r, code: CodeSpec, order: int, scale: float) -> np.ndarray:
    """Vectorized Fourier-diagonalized linear decode for circulant systems."""
    flat = h.reshape(h.shape[0], -1)
    m = flat.shape[1]
    f = linalg.fourier_basis(m)
    eigs = flat @ f
    norms = np.linalg.norm(flat, axis=1)
    if np.any(np.min(np.abs(eigs), axis=1) < EIG_RTOL * norms):
        raise IllConditionedError(
            "near-singular circulant channel encountered during batch decoding"
        )
    z = ((r @ np.conj(f)) / eigs) @ f / (m * scale)
    alphabets, src = slice_table(code.name, order)
    return _scatter_labels(kernels.slice_nearest(z, alphabets), src)


# --- frame batches end to end ---------------------------------------------------


def run_single_user_batch(
    rng: np.random.Generator,
    code: CodeSpec,
    order: int,
    n_rx: int,
    scale: float,
    decoder: str,
    feedback: str,
    K: int,
    phase_grid: str,
    batch_size: int,
):
    """Simulate one batch of single-user frames; returns per-frame error arrays.

    Draw order is fixed (channels, labels, noise) so a batch's outcome is a
    pure function of the generator state it receives.
    """
    c = make_constellation(order)
    h = draw_single_user(rng, batch_size, n_rx, code.m)
    labels = rng.integers(0, order, size=(batch_size, code.l))
    h, variants = apply_single_feedback(code, h, feedback, K, phase_grid)
    heff = induce_batch(code, h, variants)
    noise = draw_cn(rng, heff.shape[:2], 1.0)
    ct = code.map_symbols(c.points[labels])
    heff_scaled = scale * heff
    r = np.einsum("brl,bl->br", heff_scaled, ct) + noise
    if decoder == "ml":
        dec = decode_batch_ml(heff_scaled, r, code, order)
    elif decoder == "zf":
        dec = decode_batch_zf(heff_scaled, r, code, order)
    elif decoder == "circ-fourier":
        dec = decode_batch_fourier(h, r, code, order, scale)
    else:
        raise ConfigError(f"decoder {decoder!r} does not apply to single-user runs")
    bit_err = BIT_ERRORS[np.bitwise_xor(labels, dec)].sum(axis=1)
    sym_err = (labels != dec).sum(axis=1)
    return bit_err, sym_err


def run_two_user_batch(
    rng: np.random.Generator,
    order: int,
    sir_gamma: float,
    scale: float,
    decoder: str,
    feedback: str,
    K1: int,
    K2: int,
    batch_size: int,
):
    """Simulate one batch of two-user Alamouti frames (errors pooled)."""
    c = make_constellation(order)
    hg = draw_two_user(rng, batch_size, sir_gamma)
    labels = rng.integers(0, order, size=(batch_size, 4))
    hg = apply_two_user_feedback(hg, feedback, K1, K2)
    hs, gs = two_user_stacks(hg)
    heff = np.concatenate([hs, gs], axis=-1)
    noise = draw_cn(rng, (batch_size, 4), 1.0)
    amap = ALAMOUTI.map_symbols
    ct = np.concatenate([amap(c.points[labels[:, :2]]), amap(c.points[labels[:, 2:]])], axis=1)
    heff_scaled = scale * heff
    r = np.einsum("brl,bl->br", heff_scaled, ct) + noise
    alphabets, _ = slice_table("alamouti", order)
    if decoder == "mu-ml":
        cand2 = candidate_table(c, 2)
        cand4 = np.concatenate(
            [
                np.repeat(amap(cand2), cand2.shape[0], axis=0),
                np.tile(amap(cand2), (cand2.shape[0], 1)),
            ],
            axis=1,
        )
        idx = kernels.ml_argmin(heff_scaled, r, cand4)
        dec = label_table(order, 4)[idx]
    elif decoder == "mu-zf":
        h1 = heff_scaled[:, :2, :2]
        h2 = heff_scaled[:, 2:, :2]
        g1 = heff_scaled[:, :2, 2:]
        g2 = heff_scaled[:, 2:, 2:]
        try:
            q1 = g1 @ np.linalg.inv(g2)
            q2 = h2 @ np.linalg.inv(h1)
        except np.linalg.LinAlgError as exc:
            raise ContractViolation("singular two-user block; cannot decorrelate") from exc
        r1p = r[:, :2] - np.einsum("bij,bj->bi", q1, r[:, 2:])
        r2p = r[:, 2:] - np.einsum("bij,bj->bi", q2, r[:, :2])
        hp = h1 - q1 @ h2
        gp = g2 - q2 @ g1
        dec1 = kernels.slice_nearest(kernels.zf_solve(hp, r1p), alphabets)
        dec2 = kernels.slice_nearest(kernels.zf_solve(gp, r2p), alphabets)
        dec = np.concatenate([dec1, dec2], axis=1)
    else:
        raise ConfigError(f"decoder {decoder!r} does not apply to two-user runs")
    bit_err = BIT_ERRORS[np.bitwise_xor(labels, dec)].sum(axis=1)
    sym_err = (labels != dec).sum(axis=1)
    return bit_err, sym_err
