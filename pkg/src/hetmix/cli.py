"""Command-line interface: ``hetmix <subcommand> [options]``."""
from __future__ import annotations

import argparse
import datetime as dt
import os
import sys
import tempfile
from contextlib import contextmanager

from . import experiments as ex
from .beliefs import (
    BeliefDataError,
    GroupBeliefTable,
    build_series,
    read_district_shares,
    sundays,
    write_imputed_csv,
)
from .config import ConfigParseError, _convert, build_config, parse_pairs, KNOWN_KEYS
from .integrator import simulate, summarize
from .model import ModelError
from .oracles import single_group_final_size, two_group_final_size

DEFAULT_OUT = {
    "simulate": "traj.csv",
    "sweep": "sweep.csv",
    "fig6": "fig6.csv",
    "fig7": "fig7.csv",
    "fig8": "fig8.csv",
    "paradox": "paradox.csv",
    "impute": "imputed.csv",
}


@contextmanager
def atomic_output(path):
    """Yield a text stream; the file appears at ``path`` only on success."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".hetmix-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_config(args):
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values = parse_pairs(fh.read())
    for item in args.set or ():
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigParseError(f"--set expects key=value, got {item!r}")
        if key not in KNOWN_KEYS:
            raise ConfigParseError(f"unknown key {key!r}", key=key)
        values[key] = _convert(key, raw.strip())
    return build_config(values)


def output_path(args, cfg):
    return args.out or cfg.get("out") or DEFAULT_OUT[args.command]


def _n2(cfg):
    if cfg.get("n2_values"):
        return cfg.get("n2_values")
    return ex.n2_grid(cfg.get("n2_points", 100))


def cmd_simulate(args, cfg):
    traj = simulate(cfg.params, cfg.integration)
    path = output_path(args, cfg)
    with atomic_output(path) as fh:
        traj.to_csv(fh)
    s = summarize(traj)
    print(
        f"wrote {len(traj)} rows to {path}; deaths={s.deaths:.6g} "
        f"reported={s.reported_cumulative:.6g} total_infected={s.total_infected:.6g} "
        f"extinct={'yes' if s.extinct else 'no'}"
    )


def cmd_sweep(args, cfg):
    if not cfg.get("axis1"):
        raise ConfigParseError("sweep needs axis1 and axis1_values", key="axis1")
    axis2 = (cfg.get("axis2"), cfg.get("axis2_values")) if cfg.get("axis2") else None
    spec = ex.SweepSpec(cfg.params, (cfg.get("axis1"), cfg.get("axis1_values")), axis2,
                        cfg.integration)
    result = ex.run_sweep(spec)
    path = output_path(args, cfg)
    with atomic_output(path) as fh:
        result.to_csv(fh)
    print(f"wrote {len(result)} rows to {path}")


def _write_figure(args, cfg, results, label_of, axis2_of, shapes):
    path = output_path(args, cfg)
    blocks = [(label_of(k), res, axis2_of(k)) for k, res in results.items()]
    with atomic_output(path) as fh:
        ex.write_sweep_csv(blocks, shapes, stream=fh)
    rows = sum(len(r) for r in results.values())
    print(f"wrote {rows} rows in {len(blocks)} blocks to {path}")


def cmd_fig6(args, cfg):
    res = ex.figure6_sweep(cfg.get("r0_values", ex.FIG6_R0), _n2(cfg), cfg.integration,
                           base=cfg.params)
    _write_figure(args, cfg, res, lambda k: f"r0={k:g}", lambda k: k,
                  ex.curve_shapes(res, "r0"))


def cmd_fig7(args, cfg):
    res = ex.figure7_sweep(cfg.get("r02_values", ex.FIG7_R02), _n2(cfg), cfg.integration,
                           base=cfg.params, r01=cfg.params.r0[0])
    _write_figure(args, cfg, res, lambda k: f"r02={k:g}", lambda k: k,
                  ex.curve_shapes(res, "r02"))


def cmd_fig8(args, cfg):
    res = ex.figure8_sweep(cfg.get("h_values", ex.FIG8_H), _n2(cfg),
                           cfg.get("r02_values", ex.FIG8_R02), cfg.integration,
                           base=cfg.params, r01=cfg.params.r0[0])
    _write_figure(args, cfg, res, lambda k: f"r02={k[0]:g}, h={k[1]:g}", lambda k: k[1],
                  ex.curve_shapes(res, "r02,h"))


def cmd_paradox(args, cfg):
    window = (cfg.get("window_lo", 0.05), cfg.get("window_hi", 0.35))
    points = cfg.get("window_points", 31)
    r0s = cfg.get("r0_values", (2.0, 2.5, 3.0))
    found = ex.find_paradox(r0s, base=cfg.params, window=window, points=points,
                            config=cfg.integration)
    path = output_path(args, cfg)
    with atomic_output(path) as fh:
        fh.write("r0,n2,deaths,reported\n")
        for r0, s in found.items():
            for x, d, r in zip(s.n2, s.deaths, s.reported):
                fh.write(f"{r0:.17g},{x:.17g},{d:.17g},{r:.17g}\n")
        for r0, s in found.items():
            nd, nr = s.normalized_slopes
            fh.write(
                f"# paradox: r0={r0:g}, slope_deaths={s.slope_deaths:.6g}, "
                f"slope_reported={s.slope_reported:.6g}, unit_slope_deaths={nd:.6g}, "
                f"unit_slope_reported={nr:.6g}, paradox={'yes' if s.shows_paradox else 'no'}\n"
            )
    for r0, s in found.items():
        print(
            f"r0={r0:g}: slope_deaths={s.slope_deaths:.6g} "
            f"slope_reported={s.slope_reported:.6g} paradox={'yes' if s.shows_paradox else 'no'}"
        )
    print(f"wrote {sum(len(s.n2) for s in found.values())} rows to {path}")


def cmd_oracle(args, cfg):
    if args.r0 is not None:
        z = single_group_final_size(args.r0, args.alpha if args.alpha is not None else 0.0)
        print(f"{z:.12f}")
        return
    pred = two_group_final_size(cfg.params)
    a1, a2 = pred.attack_rate
    print(
        f"s_inf=({pred.s_inf[0]:.12g}, {pred.s_inf[1]:.12g}) attack=({a1:.12g}, {a2:.12g}) "
        f"total_infected={pred.total_infected:.12g} reported={pred.reported_cumulative:.12g} "
        f"deaths={pred.deaths:.12g} residual={pred.solver_residual:.3g}"
    )


def cmd_impute(args, cfg):
    means_path = args.means or cfg.get("means")
    shares_path = args.shares or cfg.get("shares")
    if not means_path or not shares_path:
        raise ConfigParseError("impute needs --means and --shares")
    table = GroupBeliefTable.read_csv(means_path)
    districts = read_district_shares(shares_path)
    start = args.start or cfg.get("start")
    end = args.end or cfg.get("end")
    start = dt.date.fromisoformat(start) if start else table.waves[0].start
    end = dt.date.fromisoformat(end) if end else table.waves[-1].start
    weeks = sundays(start, end)
    series = [s for d in districts for s in build_series(table, d, weeks)]
    path = output_path(args, cfg)
    with atomic_output(path) as fh:
        write_imputed_csv(series, fh)
    print(f"wrote {sum(len(s.values) for s in series)} rows to {path}")


COMMANDS = {
    "simulate": (cmd_simulate, "integrate one run and write the trajectory"),
    "sweep": (cmd_sweep, "sweep one or two parameters from the config"),
    "fig6": (cmd_fig6, "homogeneous mixing: outcomes vs skeptic share per R0"),
    "fig7": (cmd_fig7, "proportionate mixing: attack rates vs skeptic share per R02"),
    "fig8": (cmd_fig8, "homophilic mixing: outcomes vs skeptic share per (R02, h)"),
    "paradox": (cmd_paradox, "deaths vs reported slopes over a skeptic-share window"),
    "oracle": (cmd_oracle, "final-size prediction without integration"),
    "impute": (cmd_impute, "impute district beliefs from group survey means"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="hetmix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
        sp.add_argument("--out", help="output CSV path")
        if name == "oracle":
            sp.add_argument("--r0", type=float, help="single-group R0")
            sp.add_argument("--alpha", type=float, help="single-group detection share")
        if name == "impute":
            sp.add_argument("--means", help="group_means.csv")
            sp.add_argument("--shares", help="district_shares.csv")
            sp.add_argument("--start", help="first week (YYYY-MM-DD)")
            sp.add_argument("--end", help="last week (YYYY-MM-DD)")
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args)
        func(args, cfg)
    except (ModelError, BeliefDataError, ValueError, OSError, KeyError) as exc:
        print(f"hetmix {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
