"""Command-line entry points: run, sweep, gen-tables, gen-curves, dump-channel.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime error. All
randomness is controlled by --seed (falling back to the config's sim.seed).
Output is plain text; no colors are emitted (NO_COLOR is trivially honored).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import POLICIES, RunConfig, dump_config, load_config
from .curves import (
    DEFAULT_MODULATIONS,
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    generate_mmib_curves,
    write_curves_csv,
)
from .errors import ConfigError, HolostreamError, TableError
from .output import (
    summary_payload,
    write_channel_trace,
    write_segments_csv,
    write_summary_json,
    write_sweep_comparison,
)
from .sim import channel_trace, run_simulation
from .tables import (
    SyntheticTableParams,
    generate_synthetic_tables,
    read_tables_csv,
    write_tables_csv,
)


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 on usage errors (default would be 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_cfg(path: str | None) -> RunConfig:
    return load_config(path) if path else RunConfig()


def _load_tables(path: str | None, cfg: RunConfig, seed: int):
    if path:
        return read_tables_csv(path)
    params = SyntheticTableParams(gop_seconds=cfg.gop_seconds)
    return generate_synthetic_tables(
        seed=seed,
        n_segments=cfg.sim.n_segments,
        qp_set=cfg.optimizer.qp_set,
        params=params,
    )


def _cmd_run(args) -> int:
    cfg = _load_cfg(args.config)
    if args.print_config:
        print(dump_config(cfg), end="")
        return 0
    seed = args.seed if args.seed is not None else cfg.sim.seed
    tables = _load_tables(args.tables, cfg, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    metrics, summaries = run_simulation(
        cfg, tables, density=args.density, seed=seed, policy=args.policy
    )
    write_segments_csv(out / "segments.csv", metrics)
    density = args.density if args.density is not None else cfg.blockage.density
    write_summary_json(
        out / "summary.json", summary_payload(summaries, density=density, seed=seed)
    )
    if args.dump_channel:
        write_channel_trace(
            out / "channel_trace.csv",
            channel_trace(cfg, density=args.density, seed=seed),
        )
    for pol, s in sorted(summaries.items()):
        print(
            f"{pol}: mean combined PSNR {s.mean_psnr_combined:.2f} dB, "
            f"mean gap {s.mean_gap_db:.2f} dB, outage rate {s.outage_rate:.3f}"
        )
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_cfg(args.config)
    base_seed = args.seed if args.seed is not None else cfg.sim.seed
    densities = (
        [float(x) for x in args.densities.split(",")]
        if args.densities
        else list(cfg.sim.densities)
    )
    n_seeds = args.seeds if args.seeds is not None else cfg.sim.sweep_seeds
    tables = _load_tables(args.tables, cfg, base_seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_summaries = []
    for density in densities:
        for k in range(n_seeds):
            seed = base_seed + k
            metrics, summaries = run_simulation(
                cfg, tables, density=density, seed=seed, policy="both"
            )
            tag = f"d{density:g}_s{seed}"
            write_segments_csv(out / f"segments_{tag}.csv", metrics)
            write_summary_json(
                out / f"summary_{tag}.json",
                summary_payload(summaries, density=density, seed=seed),
            )
            all_summaries.extend(summaries.values())
    write_sweep_comparison(out / "sweep_comparison.csv", all_summaries)
    print(f"wrote {len(all_summaries)} run summaries to {out}")
    return 0


def _cmd_gen_tables(args) -> int:
    params = SyntheticTableParams(
        n_packets=args.packets,
        gop_seconds=args.gop_frames / args.fps,
    )
    qps = [int(q) for q in args.qps.split(",")]
    tables = generate_synthetic_tables(args.seed, args.segments, qps, params)
    write_tables_csv(tables, args.out)
    print(f"wrote {len(tables)} table rows to {args.out}")
    return 0


def _cmd_gen_curves(args) -> int:
    import numpy as np

    grid = np.arange(args.snr_min, args.snr_max + args.snr_step / 2, args.snr_step)
    mods = [int(m) for m in args.modulations.split(",")]
    curves = generate_mmib_curves(mods, grid, args.samples, args.seed)
    write_curves_csv(curves, args.out)
    print(f"wrote curves for modulation orders {mods} to {args.out}")
    return 0


def _cmd_dump_channel(args) -> int:
    cfg = _load_cfg(args.config)
    rows = channel_trace(cfg, density=args.density, seed=args.seed, n_segments=args.segments)
    write_channel_trace(args.out, rows)
    print(f"wrote {len(rows)} trace rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="holostream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one streaming session")
    p_run.add_argument("--config", help="YAML config; omit for defaults")
    p_run.add_argument("--tables", help="distortion table CSV; omit for synthetic")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, help="override sim.seed")
    p_run.add_argument("--density", type=float, help="override blockage density")
    p_run.add_argument("--policy", choices=POLICIES, help="override sim.policy")
    p_run.add_argument("--print-config", action="store_true", help="print effective config and exit")
    p_run.add_argument("--dump-channel", action="store_true", help="also write the channel trace CSV")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="grid of densities x seeds, both policies")
    p_sweep.add_argument("--config", help="YAML config; omit for defaults")
    p_sweep.add_argument("--tables", help="distortion table CSV; omit for synthetic")
    p_sweep.add_argument("--out", default="out", help="output directory")
    p_sweep.add_argument("--densities", help="comma-separated blocker densities")
    p_sweep.add_argument("--seeds", type=int, help="number of seeds (base..base+n-1)")
    p_sweep.add_argument("--seed", type=int, help="base seed (default sim.seed)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_gt = sub.add_parser("gen-tables", help="generate a synthetic distortion table file")
    p_gt.add_argument("--out", required=True)
    p_gt.add_argument("--seed", type=int, default=1)
    p_gt.add_argument("--segments", type=int, default=100)
    p_gt.add_argument("--qps", default="27,37,45")
    p_gt.add_argument("--packets", type=int, default=8)
    p_gt.add_argument("--gop-frames", type=int, default=4)
    p_gt.add_argument("--fps", type=float, default=30.0)
    p_gt.set_defaults(func=_cmd_gen_tables)

    p_gc = sub.add_parser("gen-curves", help="generate MMIB curves by Monte Carlo")
    p_gc.add_argument("--out", required=True)
    p_gc.add_argument("--modulations", default=",".join(str(m) for m in DEFAULT_MODULATIONS))
    p_gc.add_argument("--snr-min", type=float, default=-12.0)
    p_gc.add_argument("--snr-max", type=float, default=36.0)
    p_gc.add_argument("--snr-step", type=float, default=1.0)
    p_gc.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p_gc.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_gc.set_defaults(func=_cmd_gen_curves)

    p_dc = sub.add_parser("dump-channel", help="write per-segment link snapshots to CSV")
    p_dc.add_argument("--config", help="YAML config; omit for defaults")
    p_dc.add_argument("--out", required=True)
    p_dc.add_argument("--segments", type=int, help="override sim.n_segments")
    p_dc.add_argument("--seed", type=int, help="override sim.seed")
    p_dc.add_argument("--density", type=float, help="override blockage density")
    p_dc.set_defaults(func=_cmd_dump_channel)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, TableError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except HolostreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
