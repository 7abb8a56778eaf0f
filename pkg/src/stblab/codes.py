"""The space-time block code catalog.

Each code is a :class:`CodeSpec` bundling the encoder (symbols to an M x T
codeword, rows are transmit antennas, columns are time slots) with the
induced-channel builder that rewrites the received frame as

    r = scale * induce(H) @ map_symbols(x) + noise.

For fully complex-linear codes (Golden, plain circulant) the receive side
of that rewrite is the column-major vectorization of H @ X, optionally
permuted.  Codes whose codewords contain conjugated symbols (Alamouti,
QOSTBC) additionally conjugate/negate fixed entries of the received vector
and of the symbol vector; both maps preserve i.i.d. circular Gaussian
noise and map the product constellation onto itself.  The rate-3/4
orthogonal design has no entrywise rewrite at all, so it declares a
channel-dependent matched-filter receive transform instead (lossless for
orthogonal designs, and it also keeps the noise white).

``receive_transform(H, y)`` maps the vectorized received frame y (column
major, length N*T) to the induced-domain vector r; ``map_symbols`` /
``unmap_symbols`` convert between plain symbol vectors x and the induced
domain.  Both accept leading batch dimensions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ContractViolation

TAU = (1 + np.sqrt(5)) / 2
MU = (1 - np.sqrt(5)) / 2


@dataclass(frozen=True)
class GoldenVariant:
    which: str  # "G1" or "G2"
    tau: float = TAU
    mu: float = MU


GOLDEN_G1 = GoldenVariant("G1")
GOLDEN_G2 = GoldenVariant("G2")


@dataclass(frozen=True)
class CirculantWeights:
    """Diagonal symbol weights of the weighted 3x3 circulant design.

    alpha is the real cube root of (1+sqrt(5))/2 and beta the real (negative)
    cube root of (1-sqrt(5))/2, so alpha**3 = tau, beta**3 = mu and
    alpha*beta = -1 (because tau*mu = -1).
    """

    alpha: float = TAU ** (1 / 3)
    beta: float = -((-MU) ** (1 / 3))

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, 1.0])


@dataclass(frozen=True)
class CodeSpec:
    name: str
    m: int  # transmit antennas
    t: int  # time slots
    l: int  # symbols per frame
    encode: Callable[[np.ndarray], np.ndarray]
    induce: Callable[[np.ndarray], np.ndarray]
    receive_transform: Callable[[np.ndarray, np.ndarray], np.ndarray]
    map_symbols: Callable[[np.ndarray], np.ndarray]
    unmap_symbols: Callable[[np.ndarray], np.ndarray]
    weights: CirculantWeights | None = None
    n_rx_supported: tuple[int, ...] = (1,)

    @property
    def rate(self) -> float:
        return self.l / self.t


def _identity_map(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128)


def vec_cols(y: np.ndarray) -> np.ndarray:
    """Column-major vectorization of an N x T matrix (batch dims allowed)."""
    y = np.asarray(y, dtype=np.complex128)
    return np.swapaxes(y, -1, -2).reshape(*y.shape[:-2], -1)


def _gains(h, m: int) -> np.ndarray:
    """Coerce a gain vector or 1 x M channel matrix to shape (..., M)."""
    a = np.asarray(h, dtype=np.complex128)
    if a.ndim >= 2 and a.shape[-2] == 1 and a.shape[-1] == m:
        a = a[..., 0, :]
    if a.shape[-1] != m:
        raise ContractViolation(f"expected {m} channel gains, got shape {a.shape}")
    return a


# --- Alamouti -------------------------------------------------------------

def encode_alamouti(x1, x2) -> np.ndarray:
    """2x2 Alamouti codeword with rows (x1, x2) and (-x2*, x1*)."""
    return np.array([[x1, x2], [-np.conj(x2), np.conj(x1)]])


def induce_alamouti(h) -> np.ndarray:
    """Induced channel for Alamouti, one 2x2 block per receive antenna.

    For gains (h1, h2) the block is ((h1, h2), (-h2*, h1*)) acting on the
    mapped symbol vector (x1, -x2*); blocks for the N receive antennas are
    stacked vertically.  Accepts (..., N, 2) gain arrays.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 1:
        h = h[None, :]
    if h.shape[-1] != 2:
        raise ContractViolation(f"Alamouti needs 2 transmit gains, got {h.shape}")
    h1, h2 = h[..., 0], h[..., 1]
    blocks = np.stack(
        [
            np.stack([h1, h2], axis=-1),
            np.stack([-np.conj(h2), np.conj(h1)], axis=-1),
        ],
        axis=-2,
    )
    return blocks.reshape(*blocks.shape[:-3], -1, 2)


def _alamouti_receive(h, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128)
    n = y.shape[-1] // 2
    out = np.empty_like(y)
    out[..., 0::2] = y[..., :n]
    out[..., 1::2] = -np.conj(y[..., n:])
    return out


def _alamouti_map(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    out = x.copy()
    out[..., 1] = -np.conj(x[..., 1])
    return out


# --- rate-3/4 orthogonal design for four antennas -------------------------

def encode_ostbc34(x1, x2, x3) -> np.ndarray:
    """Rate-3/4 complex orthogonal design on four antennas (4x4 codeword)."""
    c = np.conj
    return np.array(
        [
            [x1, x2, x3, 0],
            [-c(x2), c(x1), 0, x3],
            [-c(x3), 0, c(x1), -x2],
            [0, -c(x3), c(x2), x1],
        ]
    )


def _ostbc34_ab(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split y = A x + B conj(x) for the rate-3/4 design, single receive antenna."""
    h1, h2, h3, h4 = h[..., 0], h[..., 1], h[..., 2], h[..., 3]
    z = np.zeros_like(h1)
    a = np.stack(
        [
            np.stack([h1, z, z], axis=-1),
            np.stack([z, h1, z], axis=-1),
            np.stack([z, z, h1], axis=-1),
            np.stack([h4, -h3, h2], axis=-1),
        ],
        axis=-2,
    )
    b = np.stack(
        [
            np.stack([z, -h2, -h3], axis=-1),
            np.stack([h2, z, -h4], axis=-1),
            np.stack([h3, h4, z], axis=-1),
            np.stack([z, z, z], axis=-1),
        ],
        axis=-2,
    )
    return a, b


def induce_ostbc34(h) -> np.ndarray:
    """Matched-filter induced channel ||h|| * I3 for the rate-3/4 design."""
    h = _gains(h, 4)
    norm = np.linalg.norm(h, axis=-1)
    return norm[..., None, None] * np.eye(3)


def _ostbc34_receive(h, y) -> np.ndarray:
    """Matched filter z = (A' y + B^T conj(y)) / ||h||.

    The orthogonal-design identities A'A + B^T conj(B) = ||h||^2 I and
    A'B + B^T conj(A) = 0 make this a sufficient statistic and keep the
    noise i.i.d. circular Gaussian.
    """
    h = _gains(h, 4)
    y = np.asarray(y, dtype=np.complex128)
    a, b = _ostbc34_ab(h)
    num = np.einsum("...ij,...i->...j", np.conj(a), y) + np.einsum(
        "...ij,...i->...j", b, np.conj(y)
    )
    return num / np.linalg.norm(h, axis=-1)[..., None]


# --- Jafarkhani quasi-orthogonal code --------------------------------------

def encode_qostbc(x) -> np.ndarray:
    """4x4 quasi-orthogonal codeword on symbols (x1, x2, x3, x4)."""
    x1, x2, x3, x4 = x
    c = np.conj
    return np.array(
        [
            [x1, x2, x3, x4],
            [-c(x2), c(x1), -c(x4), c(x3)],
            [-c(x3), -c(x4), c(x1), c(x2)],
            [x4, -x3, -x2, x1],
        ]
    )


def induce_qostbc(h) -> np.ndarray:
    """Induced 4x4 channel for the quasi-orthogonal code, one receive antenna.

    Rows (h1,h2,h3,h4), (-h2*,h1*,-h4*,h3*), (-h3*,-h4*,h1*,h2*),
    (h4,-h3,-h2,h1); the Grammian is a*I with an anti-diagonal b
    perturbation where a = sum |h_i|^2 and b = 2 Re(h1 h4* - h2 h3*).
    """
    h = _gains(h, 4)
    h1, h2, h3, h4 = h[..., 0], h[..., 1], h[..., 2], h[..., 3]
    c = np.conj
    rows = [
        np.stack([h1, h2, h3, h4], axis=-1),
        np.stack([-c(h2), c(h1), -c(h4), c(h3)], axis=-1),
        np.stack([-c(h3), -c(h4), c(h1), c(h2)], axis=-1),
        np.stack([h4, -h3, -h2, h1], axis=-1),
    ]
    return np.stack(rows, axis=-2)


def qostbc_ab(h) -> tuple[np.ndarray, np.ndarray]:
    """The Grammian invariants a = sum |h_i|^2, b = 2 Re(h1 h4* - h2 h3*)."""
    h = _gains(h, 4)
    a = np.sum(np.abs(h) ** 2, axis=-1)
    b = 2 * np.real(h[..., 0] * np.conj(h[..., 3]) - h[..., 1] * np.conj(h[..., 2]))
    return a, b


def _qostbc_receive(h, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.complex128)
    out = y.copy()
    out[..., 1] = -np.conj(y[..., 1])
    out[..., 2] = -np.conj(y[..., 2])
    return out


def _qostbc_map(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    out = x.copy()
    out[..., 1] = -np.conj(x[..., 1])
    out[..., 2] = -np.conj(x[..., 2])
    return out


# --- Golden code -----------------------------------------------------------

def encode_golden(v: GoldenVariant, s) -> np.ndarray:
    """2x2 Golden codeword; G2 swaps tau and mu relative to G1."""
    s1, s2, s3, s4 = s
    p, q = (v.tau, v.mu) if v.which == "G1" else (v.mu, v.tau)
    return np.array(
        [
            [s1 + p * s2, s3 + p * s4],
            [1j * (s3 + q * s4), s1 + q * s2],
        ]
    )


@lru_cache(maxsize=None)
def _golden_basis(which: str) -> np.ndarray:
    """Codewords of the four symbol basis vectors, shape (4, 2, 2)."""
    v = GOLDEN_G1 if which == "G1" else GOLDEN_G2
    return np.stack([encode_golden(v, e) for e in np.eye(4)])


def induce_golden(v: GoldenVariant, h) -> np.ndarray:
    """Induced 2N x 4 channel for the Golden code, N in {1, 2}.

    The code is complex-linear, so column j of the induced matrix is the
    column-major vectorization of H @ encode(e_j).
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 1:
        h = h.reshape(-1, 2)
    if h.shape[-1] != 2 or h.shape[-2] not in (1, 2):
        raise ContractViolation(f"Golden code supports N in {{1, 2}} receive antennas, got {h.shape}")
    basis = _golden_basis(v.which)
    cols = np.einsum("...nm,jmt->...jnt", h, basis)
    return np.moveaxis(vec_cols(cols), -2, -1)


# --- circulant designs ------------------------------------------------------

def shift_matrix(m: int) -> np.ndarray:
    """Right-shift matrix L with (x1, ..., xM) L = (xM, x1, ..., x(M-1))."""
    out = np.zeros((m, m))
    out[np.arange(m - 1), np.arange(1, m)] = 1
    out[m - 1, 0] = 1
    return out


def _circulant_rows(first_row: np.ndarray) -> np.ndarray:
    """Rows (v, vL, vL^2, ...) for v of length M (batch dims allowed)."""
    v = np.asarray(first_row, dtype=np.complex128)
    m = v.shape[-1]
    j = (np.arange(m)[None, :] - np.arange(m)[:, None]) % m
    return v[..., j]


def encode_circulant(x, w: CirculantWeights | None = None) -> np.ndarray:
    """Circulant codeword: rows are right-shifts of the (weighted) symbol row.

    Unweighted: rows (x, xL, xL^2, ...).  Weighted (M = 3 only): the printed
    design with first row (x1*alpha, x2*beta, x3) and its two shifts in the
    order that transfers onto a plain circulant induced channel.
    """
    x = np.asarray(x, dtype=np.complex128)
    if w is None:
        return _circulant_rows(x)
    if x.shape[-1] != 3:
        raise ContractViolation("the weighted circulant design is 3x3")
    row = x * w.as_vector()
    return np.stack([row, row[..., [1, 2, 0]], row[..., [2, 0, 1]]], axis=-2)


def induce_circulant(h) -> np.ndarray:
    """Induced circulant channel with rows (h, hL, hL^2, ...).

    Its eigenvalues are h @ f_j over the Fourier basis columns f_j.
    """
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim >= 2 and h.shape[-2] == 1:
        h = h[..., 0, :]
    return _circulant_rows(h)


def reversal_perm(m: int) -> np.ndarray:
    # index map t -> -t mod M: identity on 0, reverses the rest
    return (-np.arange(m)) % m


def _make_plain_circulant_maps(m: int):
    perm = reversal_perm(m)

    def receive(h, y):
        return np.asarray(y, dtype=np.complex128)[..., perm]

    def map_symbols(x):
        return np.asarray(x, dtype=np.complex128)[..., perm]

    return receive, map_symbols, map_symbols  # the reversal is an involution


def _weighted_map(x) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128) * CirculantWeights().as_vector()


def _weighted_unmap(c) -> np.ndarray:
    return np.asarray(c, dtype=np.complex128) / CirculantWeights().as_vector()


# --- catalog ----------------------------------------------------------------

def _plain_receive(h, y):
    return np.asarray(y, dtype=np.complex128)


def _make_golden_spec(name: str, v: GoldenVariant) -> CodeSpec:
    return CodeSpec(
        name=name,
        m=2,
        t=2,
        l=4,
        encode=lambda s, v=v: encode_golden(v, s),
        induce=lambda h, v=v: induce_golden(v, h),
        receive_transform=_plain_receive,
        map_symbols=_identity_map,
        unmap_symbols=_identity_map,
        n_rx_supported=(1, 2),
    )


def _make_circulant_spec(m: int, weighted: bool) -> CodeSpec:
    if weighted:
        if m != 3:
            raise ContractViolation("the weighted circulant design is 3x3")
        w = CirculantWeights()
        return CodeSpec(
            name="circulant3",
            m=3,
            t=3,
            l=3,
            encode=lambda x, w=w: encode_circulant(x, w),
            induce=induce_circulant,
            receive_transform=_plain_receive,
            map_symbols=_weighted_map,
            unmap_symbols=_weighted_unmap,
            weights=w,
        )
    receive, smap, sunmap = _make_plain_circulant_maps(m)
    return CodeSpec(
        name=f"circulant{m}",
        m=m,
        t=m,
        l=m,
        encode=encode_circulant,
        induce=induce_circulant,
        receive_transform=receive,
        map_symbols=smap,
        unmap_symbols=sunmap,
    )


make_circulant = _make_circulant_spec


ALAMOUTI = CodeSpec(
    name="alamouti",
    m=2,
    t=2,
    l=2,
    encode=lambda x: encode_alamouti(x[0], x[1]),
    induce=induce_alamouti,
    receive_transform=_alamouti_receive,
    map_symbols=_alamouti_map,
    unmap_symbols=_alamouti_map,  # involution
    n_rx_supported=(1, 2),
)

OSTBC34 = CodeSpec(
    name="ostbc34",
    m=4,
    t=4,
    l=3,
    encode=lambda x: encode_ostbc34(x[0], x[1], x[2]),
    induce=induce_ostbc34,
    receive_transform=_ostbc34_receive,
    map_symbols=_identity_map,
    unmap_symbols=_identity_map,
)

QOSTBC = CodeSpec(
    name="qostbc",
    m=4,
    t=4,
    l=4,
    encode=encode_qostbc,
    induce=induce_qostbc,
    receive_transform=_qostbc_receive,
    map_symbols=_qostbc_map,
    unmap_symbols=_qostbc_map,  # involution
)

GOLDEN_G1_CODE = _make_golden_spec("golden-g1", GOLDEN_G1)
GOLDEN_G2_CODE = _make_golden_spec("golden-g2", GOLDEN_G2)
CIRCULANT3 = _make_circulant_spec(3, weighted=True)

CODE_NAMES = (
    "alamouti",
    "ostbc34",
    "qostbc",
    "golden-g1",
    "golden-g2",
    "golden-cd",
    "circulant3",
    "circulantM",
)

_CIRCULANT_RE = re.compile(r"^circulant(\d+)$")


def get_code(name: str) -> CodeSpec:
    """Look up a catalog code by CLI name.

    "golden-cd" resolves to the G1 spec; the harness switches variants per
    frame when the golden feedback rule is active.  "circulantM" is a family
    name: pass a concrete size such as "circulant4" (plain circulant;
    "circulant3" is the weighted design).
    """
    fixed = {
        "alamouti": ALAMOUTI,
        "ostbc34": OSTBC34,
        "qostbc": QOSTBC,
        "golden-g1": GOLDEN_G1_CODE,
        "golden-g2": GOLDEN_G2_CODE,
        "golden-cd": GOLDEN_G1_CODE,
        "circulant3": CIRCULANT3,
    }
    if name in fixed:
        return fixed[name]
    match = _CIRCULANT_RE.match(name)
    if match:
        m = int(match.group(1))
        if m < 2:
            raise ContractViolation(f"circulant size must be >= 2, got {m}")
        return _make_circulant_spec(m, weighted=False)
    raise ContractViolation(f"unknown code {name!r}; known: {', '.join(CODE_NAMES)}")
