"""Command-line front end.

Exit codes: 0 on success, 1 for configuration problems (the message names
the offending field), 2 when a runtime contract is violated mid-simulation.
"""

from __future__ import annotations

import functools
import json
import sys
import time

import click
import numpy as np

from . import kernels
from .analysis import golden_gain_2x1_mc, golden_gain_2x2_mc, golden_gain_analytic, pep_bound
from .channel import draw_cn
from .codes import get_code
from .constellation import make_constellation
from .errors import ConfigError, ContractViolation
from .harness import (
    BER_CSV_HEADER,
    CAPACITY_CSV_HEADER,
    ExperimentConfig,
    run_ber,
    run_capacity,
    write_ber_csv,
    write_capacity_csv,
    write_meta,
)
from .selftest import run_selftest


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(1)
        except ContractViolation as exc:
            click.echo(f"contract violation: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _coerce(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        if "," in raw:
            try:
                return [float(p) for p in raw.split(",") if p]
            except ValueError:
                pass
        return raw


def _load_config(config_path, sets, seed) -> ExperimentConfig:
    data = {}
    if config_path is not None:
        cfg = ExperimentConfig.from_json(config_path)
        data = cfg.to_dict()
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        data[key.strip()] = _coerce(raw)
    if seed is not None:
        data["seed"] = seed
    if "code" not in data or "decoder" not in data:
        raise ConfigError("code and decoder are required (config file or --set)")
    return ExperimentConfig.from_dict(data)


@click.group()
def main():
    """Space-time block code simulation laboratory."""


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="JSON experiment config.")
@click.option("--set", "sets", multiple=True, help="Override a config field, key=value.")
@click.option("--seed", type=int, default=None, help="Override the RNG seed (default 1).")
@click.option("--workers", type=int, default=1, show_default=True, help="Parallel batch workers.")
@click.option("--out", type=click.Path(), default=None, help="CSV output path (plus .meta.json).")
@_exit_codes
def ber(config_path, sets, seed, workers, out):
    """Run a BER/SER experiment over its SNR grid."""
    cfg = _load_config(config_path, sets, seed)
    result = run_ber(cfg, workers=workers)
    click.echo(BER_CSV_HEADER)
    for p in result.points:
        click.echo(
            f"{p.snr_db:g},{p.ber:.10g},{p.ser:.10g},{p.bit_errors},{p.frames},{p.std_error:.10g}"
        )
    if out is not None:
        write_ber_csv(result, out)
        write_meta(out, cfg)
        click.echo(f"wrote {out}", err=True)


@main.command()
@click.option("--config", "config_path", type=click.Path(), help="JSON experiment config.")
@click.option("--set", "sets", multiple=True, help="Override a config field, key=value.")
@click.option("--seed", type=int, default=None, help="Override the RNG seed (default 1).")
@click.option("--out", type=click.Path(), default=None, help="CSV output path (plus .meta.json).")
@_exit_codes
def capacity(config_path, sets, seed, out):
    """Paired capacity estimates: the code's reachable rate next to C0."""
    cfg = _load_config(config_path, sets, seed)
    est_code, est_c0 = run_capacity(cfg)
    click.echo(CAPACITY_CSV_HEADER)
    for a, b in zip(est_code, est_c0):
        click.echo(
            f"{a.snr_db:g},{a.bits_per_channel_use:.10g},{a.std_error:.10g},"
            f"{b.bits_per_channel_use:.10g},{b.std_error:.10g},{a.samples}"
        )
    if out is not None:
        write_capacity_csv(est_code, est_c0, out)
        write_meta(out, cfg)
        click.echo(f"wrote {out}", err=True)


@main.command()
@click.option(
    "--experiment",
    type=click.Choice(["golden-2x1", "golden-2x2"]),
    required=True,
    help="Which selection-gain estimate to run.",
)
@click.option("--samples", type=int, default=1_000_000, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@_exit_codes
def gain(experiment, samples, seed):
    """Average-SNR gain of Golden-code variant selection."""
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    if experiment == "golden-2x1":
        mc = golden_gain_2x1_mc(samples, rng)
        click.echo(f"analytic     : {golden_gain_analytic():.4f} dB")
        click.echo(f"monte carlo  : {mc:.4f} dB  ({samples} samples, seed {seed})")
    else:
        mc = golden_gain_2x2_mc(samples, rng)
        click.echo(f"monte carlo  : {mc:.4f} dB  ({samples} samples, seed {seed})")


@main.command()
@click.option("--code", "code_name", required=True, help="Catalog code name.")
@click.option("--snr-db", type=float, required=True, help="Es/N0 in dB (per-model-eq).")
@click.option("--seed", type=int, default=1, show_default=True)
@_exit_codes
def pep(code_name, snr_db, seed):
    """Pairwise-error bound pieces for one sampled channel."""
    code = get_code(code_name)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    h = draw_cn(rng, (1, code.m), 1.0)
    heff = code.induce(h)
    factor = 10.0 ** (snr_db / 10.0) / (4.0 * code.m)
    b = pep_bound(heff, factor)
    click.echo(f"diversity order: {b.diversity_order}")
    click.echo(f"coding gain    : {b.coding_gain:.6g}")
    click.echo(f"bound value    : {b.bound_value:.6g}")


@main.command()
@_exit_codes
def selftest():
    """Run the built-in structural identity checks."""
    rows = run_selftest()
    failed = 0
    for name, ok, msg in rows:
        status = "ok  " if ok else "FAIL"
        click.echo(f"{status} {name}: {msg}")
        failed += 0 if ok else 1
    if failed:
        raise ContractViolation(f"{failed} of {len(rows)} selftest suites failed")
    click.echo(f"all {len(rows)} suites passed")


@main.command("list-codes")
def list_codes():
    """Print the code catalog."""
    rows = [("name", "M", "T", "L", "rate", "notes")]
    notes = {
        "alamouti": "orthogonal, N in {1, 2}",
        "ostbc34": "rate-3/4 orthogonal design",
        "qostbc": "quasi-orthogonal, phase feedback",
        "golden-g1": "fixed Golden variant",
        "golden-g2": "fixed Golden variant",
        "golden-cd": "per-frame G1/G2 selection",
        "circulant3": "weighted full-diversity design",
    }
    for name in ("alamouti", "ostbc34", "qostbc", "golden-g1", "golden-g2", "golden-cd", "circulant3"):
        c = get_code(name)
        rows.append((name, str(c.m), str(c.t), str(c.l), f"{c.rate:g}", notes[name]))
    rows.append(("circulantM", "M", "M", "M", "1", "plain circulant family, M >= 2"))
    widths = [max(len(r[i]) for r in rows) for i in range(6)]
    for r in rows:
        click.echo("  ".join(v.ljust(w) for v, w in zip(r, widths)))


@main.command()
@click.option("--code", "code_name", default="qostbc", show_default=True)
@click.option("--frames", type=int, default=2000, show_default=True)
@click.option("--order", type=int, default=4, show_default=True)
@_exit_codes
def bench(code_name, frames, order):
    """Time the ML search kernel on each available backend."""
    from .batch import induce_batch, induced_candidates
    from .kernels import _numpy as np_impl

    code = get_code(code_name)
    rng = np.random.Generator(np.random.Philox(key=np.array([7, 0], dtype=np.uint64)))
    h = draw_cn(rng, (frames, 1, code.m), 1.0)
    heff = induce_batch(code, h)
    c = make_constellation(order)
    labels = rng.integers(0, order, (frames, code.l))
    ct = code.map_symbols(c.points[labels])
    r = np.einsum("brl,bl->br", heff, ct) + draw_cn(rng, heff.shape[:2], 1.0)
    cand = induced_candidates(code.name, order)
    impls = [("numpy", np_impl)]
    try:
        from .kernels import _fast as fast_impl

        impls.append(("fast", fast_impl))
    except ImportError:
        click.echo("compiled backend unavailable; timing numpy only", err=True)
    heff_c = np.ascontiguousarray(heff)
    r_c = np.ascontiguousarray(r)
    cand_c = np.ascontiguousarray(cand)
    base = None
    results = {}
    for name, impl in impls:
        t0 = time.perf_counter()
        idx = impl.ml_argmin(heff_c, r_c, cand_c)
        dt = time.perf_counter() - t0
        results[name] = idx
        rate = frames / dt
        line = f"{name:>6}: {dt * 1e3:8.2f} ms  ({rate:,.0f} frames/s)"
        if base is None:
            base = dt
        else:
            line += f"  speedup x{base / dt:.1f}"
        click.echo(line)
    if len(results) == 2 and not np.array_equal(results["numpy"], results["fast"]):
        raise ContractViolation("backends disagree on ML decisions")
    click.echo(f"active backend: {kernels.backend_name()}")


if __name__ == "__main__":
    main()
