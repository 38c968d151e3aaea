"""Command-line entry point: ``vicsek-reach {run,steer,verify,figure,switches}``.

Exit codes: 0 success, 1 regime or precondition violation, 2 I/O error,
3 verification failures.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from ..dynamics import InadmissibleControl
from ..steering import RegimeViolation
from ..verify import Insufficient, extract_switches, tail_report
from .config import ConfigError, load_config
from .io import export_csv, export_report, read_csv
from .runner import FIGURE_SIZES, reproduce_figure, run_free, run_steered, run_verify

EXIT_OK, EXIT_REGIME, EXIT_IO, EXIT_FAIL = 0, 1, 2, 3


def _out_dir(args, exp=None) -> Path:
    if args.out:
        return Path(args.out)
    if exp is not None:
        return exp.output_dir()
    return Path(os.environ.get("VICSEK_OUT_DIR") or "out")


def _load(args):
    exp = load_config(args.config)
    return exp.with_overrides(steps=args.steps, seeds=[args.seed] if args.seed is not None else None)


def cmd_run(args) -> int:
    exp = _load(args)
    out = _out_dir(args, exp)
    index = []
    for s in exp.seeds:
        rec = run_free(exp, s)
        path = out / f"metrics_seed{s}.csv"
        export_csv(rec, path, out / f"states_seed{s}.csv" if exp.save_states else None)
        index.append((s, path.name, rec.event_count))
        print(f"seed {s}: {len(rec.series)} rows -> {path}")
    with open(out / "index.csv", "w", encoding="utf-8") as fh:
        fh.write("seed,metrics,degenerate_events\n")
        fh.writelines(f"{s},{p},{e}\n" for s, p, e in index)
    return EXIT_OK


def cmd_steer(args) -> int:
    exp = _load(args)
    out = _out_dir(args, exp)
    code = EXIT_OK
    for s in exp.seeds:
        rec = run_steered(exp, seed=s)
        export_csv(rec, out / f"steer_seed{s}.csv", out / f"steer_states_seed{s}.csv" if exp.save_states else None)
        m = rec.meta
        print(f"seed {s}: plan={m['plan']} horizon={m['horizon']} first_hit={m['first_hit']} proven={m['proven']}")
        for t, name in rec.phase_log:
            print(f"  t={t} phase {name}")
        if m["member_at_horizon"] is not None and m["first_hit"] is None:
            code = EXIT_FAIL
    return code


def cmd_verify(args) -> int:
    exp = _load(args)
    out = _out_dir(args, exp)
    code = EXIT_OK
    for s in exp.seeds:
        rep = run_verify(exp, seed=s)
        export_report(rep, out / f"verify_seed{s}.csv")
        print(rep.summary())
        if rep.failures:
            code = EXIT_FAIL
    return code


def cmd_figure(args) -> int:
    out = _out_dir(args)
    steps = args.steps if args.steps is not None else 10**6
    seed = args.seed or 0
    recs = reproduce_figure(args.figure, seed, steps, args.stride)
    paths = {}
    for n, rec in recs.items():
        paths[n] = export_csv(rec, out / f"fig{args.figure}_n{n}_seed{seed}.csv")
        print(f"n={n}: mean phi {rec.series.phi.mean():.4f} -> {paths[n]}")
    if args.plot:
        plot_figure(paths, out / f"fig{args.figure}_seed{seed}.png")
    return EXIT_OK


def plot_figure(paths: dict, target: Path) -> Path:
    """Static plot of phi(t) for each CSV (needs the optional matplotlib extra)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(len(paths), 1, figsize=(8, 2.2 * len(paths)), sharex=True)
    axes = [axes] if len(paths) == 1 else axes
    for ax, (n, p) in zip(axes, sorted(paths.items())):
        s = read_csv(p)
        ax.plot(s.t, s.phi, lw=0.3)
        ax.set_ylim(0, 1.02)
        ax.set_ylabel(f"phi, n={n}")
    axes[-1].set_xlabel("t")
    fig.tight_layout()
    fig.savefig(target, dpi=120)
    plt.close(fig)
    print(f"plot -> {target}")
    return target


def cmd_switches(args) -> int:
    series = read_csv(args.csv)
    rec = extract_switches(series, args.eps, args.high, args.low)
    print(f"passages: {len(rec.ordered_times)} ordered, {len(rec.disordered_times)} disordered, {rec.cycles} cycles")
    try:
        print(tail_report(rec.gaps).summary())
    except Insufficient as e:
        print(f"tail report skipped: {e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vicsek-reach", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="YAML experiment file")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory (overrides VICSEK_OUT_DIR and the config)")
        sp.add_argument("--steps", type=int)

    common(sub.add_parser("run", help="free noise-driven runs"))
    common(sub.add_parser("steer", help="replay a control plan"))
    common(sub.add_parser("verify", help="robust reachability report"))
    f = sub.add_parser("figure", help=f"figure presets 1-4 (n = {', '.join(map(str, FIGURE_SIZES))})")
    common(f, config=False)
    f.add_argument("--figure", type=int, required=True, choices=(1, 2, 3, 4))
    f.add_argument("--stride", type=int, default=1)
    f.add_argument("--plot", action="store_true", help="also write a PNG (needs matplotlib)")
    s = sub.add_parser("switches", help="first-passage alternation and tail report from a metrics CSV")
    s.add_argument("csv")
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--high", type=float)
    s.add_argument("--low", type=float)
    return p


COMMANDS = {
    "run": cmd_run,
    "steer": cmd_steer,
    "verify": cmd_verify,
    "figure": cmd_figure,
    "switches": cmd_switches,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (RegimeViolation, ConfigError, InadmissibleControl) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_REGIME
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
