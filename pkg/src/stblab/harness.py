"""Experiment orchestration: configuration, the frame loop, statistics,
and result persistence.

Reproducibility works by deriving one counter-based generator per
(seed, SNR point, batch): batch outcomes never depend on scheduling, and
the stopping rule is evaluated on cumulative counts folded in batch order,
so the result is bit-identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import subprocess
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .analysis import CapacityEstimate, capacity_c0, capacity_code
from .batch import run_single_user_batch, run_two_user_batch
from .channel import PHASE_GRIDS, SNR_CONVENTIONS, SnrSpec, draw_cn, es_over_n0_for
from .codes import get_code
from .constellation import make_constellation
from .decoders import ML_CANDIDATE_GUARD
from .errors import ConfigError, ContractViolation

SINGLE_USER_DECODERS = ("ml", "zf", "circ-fourier")
TWO_USER_DECODERS = ("mu-zf", "mu-ml")
FEEDBACK_KINDS = ("none", "generic", "closed-form", "multiuser", "golden", "circulant")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: what to simulate and how hard to push it.

    JSON config files carry exactly these fields (snake_case keys); every
    validation failure names the offending field.
    """

    code: str
    decoder: str
    feedback: str = "none"
    K: int = 4
    K1: int = 4
    K2: int = 4
    constellation_order: int = 4
    snr_grid_db: tuple = tuple(range(0, 21, 2))
    convention: str = "per-model-eq"
    min_errors: int = 200
    max_frames: int = 100_000
    seed: int = 1
    sir_gamma: float = 0.5
    n_rx: int = 1
    batch_frames: int = 4096
    phase_grid: str = "half"
    samples: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        self.validate()

    @property
    def two_user(self) -> bool:
        return self.decoder in TWO_USER_DECODERS

    def validate(self) -> None:
        try:
            code = get_code(self.code)
        except ContractViolation as exc:
            raise ConfigError(f"code: {exc}") from exc
        try:
            make_constellation(self.constellation_order)
        except ContractViolation as exc:
            raise ConfigError(f"constellation_order: {exc}") from exc
        if self.decoder not in SINGLE_USER_DECODERS + TWO_USER_DECODERS:
            raise ConfigError(f"decoder: unknown decoder {self.decoder!r}")
        if self.feedback not in FEEDBACK_KINDS:
            raise ConfigError(f"feedback: unknown rule {self.feedback!r}")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db: must be a nonempty list of dB values")
        if not all(math.isfinite(s) for s in self.snr_grid_db):
            raise ConfigError("snr_grid_db: entries must be finite")
        if self.convention not in SNR_CONVENTIONS:
            raise ConfigError(f"convention: unknown convention {self.convention!r}")
        if self.phase_grid not in PHASE_GRIDS:
            raise ConfigError(f"phase_grid: must be one of {PHASE_GRIDS}")
        for name in ("K", "K1", "K2"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be >= 1")
        if self.min_errors < 100:
            raise ConfigError("min_errors: must be >= 100 for publishable points")
        if self.max_frames < 1:
            raise ConfigError("max_frames: must be >= 1")
        if self.batch_frames < 1:
            raise ConfigError("batch_frames: must be >= 1")
        if self.samples < 1:
            raise ConfigError("samples: must be >= 1")
        if not 0 <= self.seed < 2**63:
            raise ConfigError("seed: must fit in 63 bits")
        if self.sir_gamma <= 0:
            raise ConfigError("sir_gamma: must be positive")
        if self.two_user:
            if self.code != "alamouti":
                raise ConfigError("decoder: two-user decoders require code alamouti")
            if self.feedback not in ("none", "multiuser"):
                raise ConfigError("feedback: two-user runs accept none or multiuser")
            if self.convention != "per-model-eq":
                raise ConfigError("convention: two-user runs use per-model-eq")
            if self.decoder == "mu-ml" and self.constellation_order**4 > ML_CANDIDATE_GUARD:
                raise ConfigError("constellation_order: joint search too large for mu-ml")
            return
        if self.feedback == "multiuser":
            raise ConfigError("feedback: multiuser needs a mu-* decoder")
        if self.n_rx not in code.n_rx_supported:
            raise ConfigError(
                f"n_rx: code {code.name} supports receive counts {code.n_rx_supported}"
            )
        if self.decoder == "circ-fourier" and not self.code.startswith("circulant"):
            raise ConfigError("decoder: circ-fourier only applies to circulant codes")
        if self.decoder == "ml" and self.constellation_order**code.l > ML_CANDIDATE_GUARD:
            raise ConfigError("constellation_order: ML candidate count exceeds the guard")
        if self.feedback == "closed-form" and self.code != "qostbc":
            raise ConfigError("feedback: closed-form is the qostbc rule")
        if self.feedback == "circulant" and not self.code.startswith("circulant"):
            raise ConfigError("feedback: circulant selection needs a circulant code")
        if (self.feedback == "golden") != (self.code == "golden-cd"):
            raise ConfigError("feedback: code golden-cd and feedback golden go together")
        if self.convention == "qostbc-frobenius" and code.m != 4:
            raise ConfigError("convention: qostbc-frobenius applies to M = 4 codes")
        if self.convention == "golden-eq" and code.m != 2:
            raise ConfigError("convention: golden-eq applies to M = 2 codes")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file: top level must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["snr_grid_db"] = list(self.snr_grid_db)
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class PointResult:
    snr_db: float
    bit_errors: int
    symbol_errors: int
    frames: int
    ber: float
    ser: float
    std_error: float


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    points: tuple[PointResult, ...]
    backend: str = field(default_factory=kernels.backend_name)


def _symbols_per_frame(cfg: ExperimentConfig) -> int:
    return 4 if cfg.two_user else get_code(cfg.code).l


def _bits_per_frame(cfg: ExperimentConfig) -> int:
    return _symbols_per_frame(cfg) * make_constellation(cfg.constellation_order).bits_per_symbol


def _point_scale(cfg: ExperimentConfig, snr_db: float) -> float:
    m = 2 if cfg.two_user else get_code(cfg.code).m
    n = 2 if cfg.two_user else cfg.n_rx
    ratio = es_over_n0_for(SnrSpec(10.0 ** (snr_db / 10.0), cfg.convention), m, n, 1.0)
    return float(np.sqrt(ratio / m))


def _batch_rng(seed: int, point_idx: int, batch_idx: int) -> np.random.Generator:
    key = np.array([seed, (point_idx << 32) | batch_idx], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _batch_counts(cfg: ExperimentConfig, point_idx: int, batch_idx: int, size: int):
    """Error counts for one batch; a pure function of (cfg, indices)."""
    rng = _batch_rng(cfg.seed, point_idx, batch_idx)
    scale = _point_scale(cfg, cfg.snr_grid_db[point_idx])
    if cfg.two_user:
        bit_err, sym_err = run_two_user_batch(
            rng,
            cfg.constellation_order,
            cfg.sir_gamma,
            scale,
            cfg.decoder,
            cfg.feedback,
            cfg.K1,
            cfg.K2,
            size,
        )
    else:
        bit_err, sym_err = run_single_user_batch(
            rng,
            get_code(cfg.code),
            cfg.constellation_order,
            cfg.n_rx,
            scale,
            cfg.decoder,
            cfg.feedback,
            cfg.K,
            cfg.phase_grid,
            size,
        )
    bit_err = bit_err.astype(np.int64)
    return int(bit_err.sum()), int((bit_err**2).sum()), int(sym_err.sum())


def _batch_sizes(cfg: ExperimentConfig) -> list[int]:
    sizes = []
    done = 0
    while done < cfg.max_frames:
        b = min(cfg.batch_frames, cfg.max_frames - done)
        sizes.append(b)
        done += b
    return sizes


def run_ber(cfg: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Simulate the configured BER experiment over its SNR grid.

    Each point runs until min_errors bit errors have accumulated or
    max_frames frames have been spent, whichever comes first, checked at
    batch boundaries in batch order.  Results are bit-identical for any
    ``workers`` value; extra workers only precompute batches that may be
    discarded by the stopping rule.
    """
    sizes = _batch_sizes(cfg)
    wave = max(1, int(workers))
    points = []
    executor = ProcessPoolExecutor(max_workers=wave) if wave > 1 else None
    try:
        for p_idx in range(len(cfg.snr_grid_db)):
            bit_sum = sq_sum = sym_sum = frames = 0
            stop = False
            for start in range(0, len(sizes), wave):
                idxs = range(start, min(len(sizes), start + wave))
                if executor is not None:
                    results = list(
                        executor.map(
                            _batch_counts,
                            [cfg] * len(idxs),
                            [p_idx] * len(idxs),
                            idxs,
                            [sizes[i] for i in idxs],
                        )
                    )
                else:
                    results = []
                    for i in idxs:
                        results.append(_batch_counts(cfg, p_idx, i, sizes[i]))
                        if bit_sum + sum(r[0] for r in results) >= cfg.min_errors:
                            break
                for i, (b_err, b_sq, s_err) in zip(idxs, results):
                    bit_sum += b_err
                    sq_sum += b_sq
                    sym_sum += s_err
                    frames += sizes[i]
                    if bit_sum >= cfg.min_errors:
                        stop = True
                        break
                if stop:
                    break
            points.append(_fold_point(cfg, cfg.snr_grid_db[p_idx], bit_sum, sq_sum, sym_sum, frames))
    finally:
        if executor is not None:
            executor.shutdown()
    return ExperimentResult(config=cfg, points=tuple(points))


def _fold_point(cfg, snr_db, bit_sum, sq_sum, sym_sum, frames) -> PointResult:
    bpf = _bits_per_frame(cfg)
    spf = _symbols_per_frame(cfg)
    ber = bit_sum / (frames * bpf)
    ser = sym_sum / (frames * spf)
    if frames > 1:
        var = max(0.0, (sq_sum - bit_sum**2 / frames) / (frames - 1))
        std_error = math.sqrt(var / frames) / bpf
    else:
        std_error = 0.0
    return PointResult(
        snr_db=float(snr_db),
        bit_errors=bit_sum,
        symbol_errors=sym_sum,
        frames=frames,
        ber=ber,
        ser=ser,
        std_error=std_error,
    )


def run_capacity(cfg: ExperimentConfig) -> tuple[list[CapacityEstimate], list[CapacityEstimate]]:
    """Paired capacity estimates (code, unconstrained) over the SNR grid.

    Both estimates see the same channel draws, so their difference is free
    of sampling noise between the two and the losslessness comparison is a
    paired test.
    """
    if cfg.two_user or cfg.feedback == "multiuser":
        raise ConfigError("feedback: capacity runs are single-user")
    code = get_code(cfg.code)
    rng = _batch_rng(cfg.seed, 0, 0)
    channels = draw_cn(rng, (cfg.samples, cfg.n_rx, code.m), 1.0)
    est_code = capacity_code(
        code,
        cfg.feedback,
        cfg.snr_grid_db,
        cfg.samples,
        n_rx=cfg.n_rx,
        K=cfg.K,
        phase_grid=cfg.phase_grid,
        channels=channels,
    )
    est_c0 = capacity_c0(code.m, cfg.n_rx, cfg.snr_grid_db, cfg.samples, channels=channels)
    return est_code, est_c0


def fit_diversity_slope(result: ExperimentResult, window_db: float = 10.0) -> float:
    """Diversity-order estimate: negated LS slope of log10(ber) vs snr_db/10.

    Fits only grid points within the top ``window_db`` of the grid that
    still have positive BER; needs at least three of them.
    """
    top = max(p.snr_db for p in result.points)
    pts = [p for p in result.points if p.ber > 0 and p.snr_db >= top - window_db]
    if len(pts) < 3:
        raise ContractViolation(
            f"diversity fit needs >= 3 positive-BER points in the top {window_db} dB"
        )
    x = np.array([p.snr_db / 10.0 for p in pts])
    y = np.log10([p.ber for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def snr_at_ber(result: ExperimentResult, target: float) -> float:
    """SNR (dB) where the measured curve crosses a target BER.

    Log-linear interpolation between the first adjacent pair of
    positive-BER grid points bracketing the target.
    """
    pts = [p for p in result.points if p.ber > 0]
    for a, b in zip(pts, pts[1:]):
        lo, hi = (a, b) if a.ber >= b.ber else (b, a)
        if hi.ber <= target <= lo.ber:
            if a.ber == b.ber:
                return float(a.snr_db)
            t = (math.log10(a.ber) - math.log10(target)) / (
                math.log10(a.ber) - math.log10(b.ber)
            )
            return float(a.snr_db + t * (b.snr_db - a.snr_db))
    raise ContractViolation(f"BER curve does not cross {target:g} on this grid")


# --- persistence ---------------------------------------------------------------

BER_CSV_HEADER = "snr_db,ber,ser,bit_errors,frames,std_error"
CAPACITY_CSV_HEADER = "snr_db,capacity,std_error,c0,c0_std_error,samples"


def _atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_ber_csv(result: ExperimentResult, path: str | os.PathLike) -> None:
    lines = [BER_CSV_HEADER]
    for p in result.points:
        lines.append(
            f"{p.snr_db:g},{p.ber:.10g},{p.ser:.10g},{p.bit_errors},{p.frames},{p.std_error:.10g}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def write_capacity_csv(
    est_code: list[CapacityEstimate], est_c0: list[CapacityEstimate], path: str | os.PathLike
) -> None:
    lines = [CAPACITY_CSV_HEADER]
    for a, b in zip(est_code, est_c0):
        lines.append(
            f"{a.snr_db:g},{a.bits_per_channel_use:.10g},{a.std_error:.10g},"
            f"{b.bits_per_channel_use:.10g},{b.std_error:.10g},{a.samples}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=10,
            cwd=Path(__file__).resolve().parent,
        )
    except (OSError, subprocess.TimeoutExpired):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 else "unknown"


def write_meta(out_path: str | os.PathLike, cfg: ExperimentConfig) -> None:
    """Sidecar JSON next to an output file: config echo plus build context."""
    meta = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "git_describe": _git_describe(),
        "kernels_backend": kernels.backend_name(),
    }
    _atomic_write(str(out_path) + ".meta.json", json.dumps(meta, indent=2) + "\n")
