"""Built-in structural checks: the algebraic identities the whole
laboratory rests on, runnable from the CLI without a test harness.

Each check is deterministic (fixed seeds) and raises AssertionError with a
diagnostic on failure; :func:`run_selftest` folds them into (name, ok,
message) rows.
"""

from __future__ import annotations

import numpy as np

from . import linalg
from .batch import decode_batch_fourier, decode_batch_zf, induce_batch
from .channel import draw_cn
from .codes import (
    CIRCULANT3,
    GOLDEN_G1,
    GOLDEN_G2,
    CirculantWeights,
    _ostbc34_ab,
    encode_circulant,
    get_code,
    make_circulant,
    qostbc_ab,
    vec_cols,
)
from .constellation import make_constellation
from .decoders import ml_decode, zf_decode
from .feedback import qostbc_b_at, select_qostbc_closed_form

_QAM4 = make_constellation(4)


def check_transference():
    """encode -> channel -> receive map lands exactly on induce(h) @ map(x)."""
    cases = [
        (get_code("alamouti"), 1),
        (get_code("alamouti"), 2),
        (get_code("ostbc34"), 1),
        (get_code("qostbc"), 1),
        (get_code("golden-g1"), 1),
        (get_code("golden-g1"), 2),
        (get_code("golden-g2"), 1),
        (CIRCULANT3, 1),
        (make_circulant(3, weighted=False), 1),
        (make_circulant(4, weighted=False), 1),
        (make_circulant(5, weighted=False), 1),
    ]
    rng = np.random.default_rng(1)
    worst = 0.0
    for code, n in cases:
        for _ in range(100):
            h = draw_cn(rng, (n, code.m), 1.0)
            x = _QAM4.points[rng.integers(0, 4, code.l)]
            y = vec_cols(h @ code.encode(x))
            lhs = code.receive_transform(h, y)
            rhs = code.induce(h) @ code.map_symbols(x)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert worst < 1e-10, f"worst transference residual {worst:g}"
    return f"{len(cases)} code/antenna cases, max residual {worst:.1e}"


def check_orthogonal_designs():
    """Orthogonal designs: Grammian = (sum |h_i|^2) I, matched filter exact."""
    rng = np.random.default_rng(2)
    ala = get_code("alamouti")
    worst = 0.0
    for n in (1, 2):
        for _ in range(100):
            h = draw_cn(rng, (n, 2), 1.0)
            hh = ala.induce(h)
            gram = np.conj(hh.T) @ hh
            target = np.sum(np.abs(h) ** 2) * np.eye(2)
            worst = max(worst, float(np.max(np.abs(gram - target))))
    for _ in range(100):
        h = draw_cn(rng, (4,), 1.0)
        a, b = _ostbc34_ab(h)
        e2 = np.sum(np.abs(h) ** 2)
        worst = max(
            worst,
            float(np.max(np.abs(np.conj(a.T) @ a + b.T @ np.conj(b) - e2 * np.eye(3)))),
            float(np.max(np.abs(np.conj(a.T) @ b + b.T @ np.conj(a)))),
        )
    assert worst < 1e-9, f"worst orthogonality residual {worst:g}"
    return f"Alamouti and rate-3/4 identities hold, max residual {worst:.1e}"


def check_qostbc_determinant():
    """det of the quasi-orthogonal Grammian is ((a^2 - b^2))^2 and >= 0."""
    rng = np.random.default_rng(3)
    code = get_code("qostbc")
    worst = 0.0
    for _ in range(1000):
        h = draw_cn(rng, (4,), 1.0)
        hh = code.induce(h)
        det = np.linalg.det(np.conj(hh.T) @ hh)
        assert abs(det.imag) < 1e-6 * max(1.0, abs(det.real)), "complex determinant"
        a, b = qostbc_ab(h)
        target = (a**2 - b**2) ** 2
        assert det.real >= -1e-8 * max(1.0, target), f"negative determinant {det.real:g}"
        rel = abs(det.real - target) / max(1.0, target)
        worst = max(worst, rel)
    assert worst < 1e-8, f"worst determinant mismatch {worst:g}"
    return f"1000 channels, max relative mismatch {worst:.1e}"


def check_qostbc_closed_form():
    """Closed-form phase pick equals brute force over the index grid."""
    rng = np.random.default_rng(4)
    for _ in range(1000):
        h = draw_cn(rng, (4,), 1.0)
        for K in (2, 4, 8):
            d = select_qostbc_closed_form(h, K)
            assert not d.fallback, "unexpected fallback on a generic channel"
            brute = min(abs(qostbc_b_at(h, k, K)) for k in range(1, K + 1))
            assert abs(d.objective_value - brute) < 1e-12, (
                f"closed form {d.objective_value:g} vs brute {brute:g} at K={K}"
            )
            at_choice = abs(qostbc_b_at(h, d.sites[0].k, K))
            assert abs(at_choice - d.objective_value) < 1e-12, "objective not reproducible"
    return "1000 channels x K in {2, 4, 8} match brute force"


def check_circulant_eigenvectors():
    """Fourier columns diagonalize every circulant induced channel."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for m in (3, 4, 5):
        f = linalg.fourier_basis(m)
        code = make_circulant(m, weighted=False)
        for _ in range(100):
            h = draw_cn(rng, (m,), 1.0)
            lhs = code.induce(h) @ f
            rhs = f * (h @ f)[None, :]
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert worst < 1e-10, f"worst eigenvector residual {worst:g}"
    return f"M in {{3, 4, 5}}, max residual {worst:.1e}"


def check_fourier_equals_zf():
    """The Fourier-diagonalized decoder reproduces zero-forcing decisions."""
    rng = np.random.default_rng(6)
    for code in (CIRCULANT3, make_circulant(4, weighted=False)):
        b = 200
        h = draw_cn(rng, (b, 1, code.m), 1.0)
        flat = h.reshape(b, -1)
        eigs = flat @ linalg.fourier_basis(code.m)
        keep = np.min(np.abs(eigs), axis=1) > 1e-3 * np.linalg.norm(flat, axis=1)
        h = h[keep]
        b = h.shape[0]
        labels = rng.integers(0, 4, (b, code.l))
        heff = induce_batch(code, h)
        ct = code.map_symbols(_QAM4.points[labels])
        r = np.einsum("brl,bl->br", heff, ct) + draw_cn(rng, (b, code.m), 1.0)
        dec_f = decode_batch_fourier(h, r, code, 4, 1.0)
        dec_z = decode_batch_zf(heff, r, code, 4)
        assert np.array_equal(dec_f, dec_z), f"{code.name}: decisions diverge"
    return "weighted 3x3 and plain 4x4 agree with zero forcing"


def check_nonvanishing_determinants():
    """Difference codewords of the full-diversity designs never lose rank."""
    diffs = np.unique(np.round(_QAM4.points[:, None] - _QAM4.points[None, :], 12))
    assert diffs.size == 9
    grid4 = np.stack(np.meshgrid(diffs, diffs, diffs, diffs, indexing="ij"), axis=-1)
    grid4 = grid4.reshape(-1, 4)
    grid4 = grid4[np.any(grid4 != 0, axis=1)]
    mins = []
    for v in (GOLDEN_G1, GOLDEN_G2):
        p, q = (v.tau, v.mu) if v.which == "G1" else (v.mu, v.tau)
        s1, s2, s3, s4 = grid4.T
        det = (s1 + p * s2) * (s1 + q * s2) - 1j * (s3 + p * s4) * (s3 + q * s4)
        mins.append(float(np.min(np.abs(det))))
    grid3 = np.stack(np.meshgrid(diffs, diffs, diffs, indexing="ij"), axis=-1).reshape(-1, 3)
    grid3 = grid3[np.any(grid3 != 0, axis=1)]
    cw = encode_circulant(grid3, CirculantWeights())
    mins.append(float(np.min(np.abs(np.linalg.det(cw)))))
    floor = min(mins)
    assert floor > 1e-9, f"vanishing difference determinant, min {floor:g}"
    return f"golden G1/G2 and weighted circulant, min |det| = {floor:.3f}"


def check_alamouti_zf_equals_ml():
    """On the orthogonal Alamouti system, zero forcing is already ML."""
    rng = np.random.default_rng(7)
    code = get_code("alamouti")
    for _ in range(200):
        h = draw_cn(rng, (1, 2), 1.0)
        heff = code.induce(h)
        x = _QAM4.points[rng.integers(0, 4, 2)]
        r = heff @ code.map_symbols(x) + draw_cn(rng, (2,), 1.0)
        ml = ml_decode(heff, r, _QAM4, 2)
        zf = zf_decode(heff, r, _QAM4, 2)
        assert np.array_equal(ml.labels, zf.labels), "ZF and ML decisions diverge"
        assert zf.metric >= ml.metric - 1e-9, "ML metric is not the minimum"
    return "200 noisy frames, identical decisions"


CHECKS = (
    ("transference", check_transference),
    ("orthogonal-designs", check_orthogonal_designs),
    ("qostbc-determinant", check_qostbc_determinant),
    ("qostbc-closed-form", check_qostbc_closed_form),
    ("circulant-eigenvectors", check_circulant_eigenvectors),
    ("fourier-equals-zf", check_fourier_equals_zf),
    ("nonvanishing-determinants", check_nonvanishing_determinants),
    ("alamouti-zf-equals-ml", check_alamouti_zf_equals_ml),
)


def run_selftest() -> list[tuple[str, bool, str]]:
    out = []
    for name, fn in CHECKS:
        try:
            out.append((name, True, fn()))
        except AssertionError as exc:
            out.append((name, False, str(exc) or "assertion failed"))
        except Exception as exc:
            out.append((name, False, f"{type(exc).__name__}: {exc}"))
    return out
