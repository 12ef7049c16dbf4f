"""Command line front end: config in, CSV/SVG/JSON artifacts out.

Usage::

    leakywave run config.yaml [--freq 0.5,1.0] [--out DIR] [--threads N]
                              [--validate-only] [--oracle] [--modes-at F]
                              [--seed S]

Exit codes: 0 success, 2 configuration error, 3 every frequency failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .postprocess import ModeSolution, SweepResult, characteristic_residual, dispersion_sweep

log = logging.getLogger("leakywave")

_ADMISSIBLE = ("Trapped", "Outgoing")


def _fmt(v) -> str:
    """Serialize a float with enough digits for exact round-trip."""
    return f"{float(v):.17g}"


def _csv_header(oracle: bool) -> str:
    cols = ["f_Hz", "re_k_rad_per_m", "im_k_np_per_m", "c_p_m_per_s",
            "att_db_per_mm", "class"]
    for side in ("bottom", "top"):
        for q in ("kappa_y", "gamma_y"):
            cols += [f"re_{q}_{side}", f"im_{q}_{side}"]
    cols.append("residual")
    if oracle:
        cols.append("oracle_residual")
    return ",".join(cols)


def _csv_row(m: ModeSolution, oracle_val: float | None) -> str:
    vals = [_fmt(m.frequency), _fmt(m.k.real), _fmt(m.k.imag),
            _fmt(m.phase_velocity), _fmt(m.attenuation_db_per_mm),
            m.classification]
    for side in ("bottom", "top"):
        for q in (m.kappa_y, m.gamma_y):
            if side in q:
                vals += [_fmt(q[side].real), _fmt(q[side].imag)]
            else:
                vals += ["", ""]
    vals.append(_fmt(m.residual))
    if oracle_val is not None:
        vals.append(_fmt(oracle_val))
    return ",".join(vals)


def write_dispersion_csv(path: Path, result: SweepResult, config: RunConfig,
                         oracle: bool) -> None:
    lines = [_csv_header(oracle)]
    for batch in result.batches:
        for m in batch:
            val = characteristic_residual(config.model, m) if oracle else None
            lines.append(_csv_row(m, val))
    path.write_text("\n".join(lines) + "\n")


def write_modeshapes(outdir: Path, result: SweepResult, config: RunConfig,
                     f_target: float) -> list[str]:
    """Dump nodal mode shapes at the sweep frequency closest to f_target."""
    idx = int(np.argmin(np.abs(result.frequencies - f_target)))
    batch = result.batches[idx]
    f = result.frequencies[idx]
    written = []
    for j, m in enumerate(batch):
        stack = m.system.fem.stack
        ncomp = stack.ncomp
        comps = ("ux", "uy", "uz")[:ncomp]
        header = "y_m," + ",".join(f"re_{c},im_{c}" for c in comps)
        node_y = stack.node_y
        v = m.vector[: m.system.n_plate].reshape(-1, ncomp)
        lines = [f"# f_Hz={_fmt(f)} k={_fmt(m.k.real)}{m.k.imag:+.17g}j "
                 f"class={m.classification}", header]
        for y, row in zip(node_y, v):
            cells = [_fmt(y)]
            for c in row:
                cells += [_fmt(c.real), _fmt(c.imag)]
            lines.append(",".join(cells))
        name = f"modeshape_{f:g}_{j}.csv"
        (outdir / name).write_text("\n".join(lines) + "\n")
        written.append(name)
    return written


def write_plots(outdir: Path, result: SweepResult) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    f, cp, att, cls = [], [], [], []
    for batch in result.batches:
        for m in batch:
            if m.classification not in _ADMISSIBLE:
                continue
            f.append(m.frequency / 1e6)
            cp.append(m.phase_velocity)
            att.append(m.attenuation_db_per_mm)
            cls.append(m.classification)
    f = np.asarray(f)
    cp = np.asarray(cp)
    att = np.asarray(att)
    colors = {"Trapped": "tab:green", "Outgoing": "tab:blue"}

    fig, ax = plt.subplots(figsize=(7, 5))
    for name, col in colors.items():
        sel = [c == name for c in cls]
        ax.scatter(f[sel], cp[sel], s=6, color=col, label=name)
    ax.set_xlabel("frequency [MHz]")
    ax.set_ylabel("phase velocity [m/s]")
    ax.set_ylim(0, min(cp.max() * 1.1, 2e4) if len(cp) else 1e4)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(outdir / "dispersion_cp.svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(7, 5))
    for name, col in colors.items():
        sel = np.array([c == name for c in cls], dtype=bool)
        sel &= att > 0
        ax.scatter(f[sel], att[sel], s=6, color=col, label=name)
    ax.set_yscale("log")
    ax.set_xlabel("frequency [MHz]")
    ax.set_ylabel("attenuation [dB/mm]")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(outdir / "dispersion_att.svg")
    plt.close(fig)


def write_manifest(path: Path, config: RunConfig, result: SweepResult,
                   args, wall: float, artifacts: list[str]) -> None:
    import scipy

    manifest = {
        "config": config.raw,
        "versions": {
            "leakywave": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "seed": args.seed if args.seed is not None else config.seed,
        "frequencies_hz": [float(f) for f in result.frequencies],
        "timings_s": list(result.timings),
        "wall_time_s": wall,
        "mode_counts": [len(b) for b in result.batches],
        "failures": [{"f_Hz": f, "error": err} for f, err in result.failures],
        "artifacts": artifacts,
    }
    path.write_text(json.dumps(manifest, indent=2) + "\n")


def _parse_freq_override(text: str, config: RunConfig) -> np.ndarray:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError("--freq", f"cannot parse frequency list {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise ConfigError("--freq", "need positive frequencies")
    # the override uses the config's frequency unit
    units = config.raw.get("units") or {}
    unit = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}[
        str(units.get("frequency", "MHz")).lower()]
    return np.sort(np.asarray(vals)) * unit


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leakywave",
        description="Dispersion of guided waves in plates with fluid/solid "
                    "half-space loading.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a dispersion sweep from a config file")
    run.add_argument("config", help="YAML configuration file")
    run.add_argument("--freq", help="comma-separated frequency override "
                                    "(in the config's frequency unit)")
    run.add_argument("--out", help="output directory override")
    run.add_argument("--threads", type=int, default=1,
                     help="worker threads for the frequency loop")
    run.add_argument("--validate-only", action="store_true",
                     help="validate the config and exit")
    run.add_argument("--oracle", action="store_true",
                     help="append the analytic boundary-determinant residual "
                          "column (single-layer models only)")
    run.add_argument("--modes-at", type=float, metavar="F",
                     help="dump mode-shape CSVs at the sweep frequency nearest "
                          "F (in the config's frequency unit)")
    run.add_argument("--seed", type=int, help="shift RNG seed override")
    return parser


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        freqs = config.frequencies
        if args.freq:
            freqs = _parse_freq_override(args.freq, config)
        if args.oracle and len(config.model.materials) != 1:
            raise ConfigError("--oracle",
                              "the analytic oracle supports single-layer "
                              "models only")
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return 2
    if args.validate_only:
        print(f"{args.config}: OK ({len(freqs)} frequencies, "
              f"{len(config.model.materials)} layer(s))")
        return 0

    outdir = Path(args.out if args.out else config.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else config.seed

    t0 = time.perf_counter()
    sweep_kwargs = dict(
        path=config.path, seed=seed, tols=config.tols,
        force_distinct_fluids=config.force_distinct_fluids,
        size_cap=config.size_cap, shift=config.shift,
        classify_opts=config.classify,
    )
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            result = dispersion_sweep(config.model, freqs,
                                      map_fn=pool.map, **sweep_kwargs)
    else:
        result = dispersion_sweep(config.model, freqs, **sweep_kwargs)
    wall = time.perf_counter() - t0

    for f, err in result.failures:
        log.warning("frequency %g Hz failed: %s", f, err)

    artifacts = ["dispersion.csv", "run.json"]
    write_dispersion_csv(outdir / "dispersion.csv", result, config, args.oracle)
    if args.modes_at is not None:
        units = config.raw.get("units") or {}
        unit = {"hz": 1.0, "khz": 1e3, "mhz": 1e6}[
            str(units.get("frequency", "MHz")).lower()]
        artifacts += write_modeshapes(outdir, result, config,
                                      args.modes_at * unit)
    if config.plots:
        write_plots(outdir, result)
        artifacts += ["dispersion_cp.svg", "dispersion_att.svg"]
    write_manifest(outdir / "run.json", config, result, args, wall, artifacts)

    n_modes = sum(len(b) for b in result.batches)
    log.info("%d modes over %d frequencies in %.2f s -> %s",
             n_modes, len(freqs), wall, outdir)
    if len(result.failures) == len(freqs):
        log.error("all %d frequencies failed", len(freqs))
        return 3
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return 2  # pragma: no cover - argparse enforces the subcommand


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
