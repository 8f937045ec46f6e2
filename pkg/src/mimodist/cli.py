"""Command-line front end: wires a JSON config to the library modules and
emits figure-ready CSV data.

Conventions shared by every subcommand:
  * outputs are CSV only (no plotting), one directory per run (``--out``);
  * the first line of every file is ``# config: <resolved JSON>`` so a file
    is self-describing;
  * files are written atomically (temp file + rename) per sweep point;
  * exit code 0 on success, 2 on configuration/validation errors, 3 on
    numerical failures.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import mdp as mdp_mod
from .exponent import (
    SourceConfig,
    distortion_terms,
    solve_finite_snr,
    solve_high_snr,
)
from .lp import LpNumericalError, solve
from .sim import SimConfig, run
from .tradeoff import ChannelConfig, build_curve, eval_d
from .video import (
    CodeErrorTable,
    RdTable,
    VideoSourceModel,
    channel_distortion,
    optimize_antennas,
)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    pass


# section -> key -> default (REQUIRED means the command using it must get a value)
_REQUIRED = object()
_SCHEMA = {
    "channel": {
        "tx_antennas": 4,
        "rx_antennas": 4,
        "block_length": 7,
        "snr_db": 10.0,
    },
    "source": {"norm_order": 2.0, "source_dim": 30.0},
    "arq": {
        "arrival_prob": 0.9,
        "deadline": 4,
        "max_window": 4,
        "allowed_r": [1.0, 2.0, 3.0],
        "error_coeff": 1.0,
        "state_budget": 10**6,
    },
    "video": {
        "beta": 0.01,
        "gamma": 1.0,
        "sigma2": 1.0,
        "pe_table": _REQUIRED,
        "rd_table": _REQUIRED,
        "rates": _REQUIRED,  # mapping N_u -> source rate in bits
        "snr_db_list": [10.0],
    },
    "tradeoff": {"r_points": 101, "window": 1},
    "exponent": {"r_points": 101, "window": 1},
    "finite_snr": {"snr_db_list": [10.0, 20.0, 30.0], "r_points": 201},
    "mdp": {"deadline_list": [2, 3, 4, 5, 6, 7, 8]},
    "simulate": {"horizon_blocks": 100000, "warmup_blocks": 1000},
}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = {}
    for section, value in raw.items():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(value, dict):
            raise ConfigError(f"section {section!r} must be an object")
        for key in value:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
        cfg[section] = value
    resolved = {}
    for section, defaults in _SCHEMA.items():
        resolved[section] = {
            k: cfg.get(section, {}).get(k, d) for k, d in defaults.items()
        }
    return resolved


def _channel(cfg) -> ChannelConfig:
    return ChannelConfig(**cfg["channel"])


def _source(cfg) -> SourceConfig:
    return SourceConfig(**cfg["source"])


def _arq(cfg, deadline=None) -> mdp_mod.ArqConfig:
    kw = dict(cfg["arq"])
    kw["allowed_r"] = tuple(kw["allowed_r"])
    if deadline is not None:
        kw["deadline"] = deadline
    return mdp_mod.ArqConfig(**kw)


def _config_line(cfg) -> str:
    return "# config: " + json.dumps(
        {k: v for k, v in cfg.items() if v is not None}, sort_keys=True
    )


def write_table(path, cfg, header: list[str], rows: list[list]) -> None:
    """Atomically write a CSV table with the resolved-config comment line."""
    text = _config_line(cfg) + "\n" + ",".join(header) + "\n"
    for row in rows:
        text += ",".join(_fmt(v) for v in row) + "\n"
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_table(path):
    """Parse a file produced by ``write_table`` back into its parts."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# config: "):
        raise ConfigError(f"{path} is missing the config comment line")
    cfg = json.loads(lines[0][len("# config: "):])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return cfg, header, rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_tradeoff(cfg, out_dir, seed):
    chan = _channel(cfg)
    curve = build_curve(chan, arq_window=int(cfg["tradeoff"]["window"]))
    n = int(cfg["tradeoff"]["r_points"])
    rows = []
    if n > 0:  # an empty sweep emits a header-only file
        knots_r, knots_d = curve.scaled_knots
        rows = [[float(r), float(d), 1] for r, d in zip(knots_r, knots_d)]
        for r in np.linspace(0.0, curve.max_rate, n):
            rows.append([float(r), float(eval_d(curve, r)), 0])
        rows.sort(key=lambda row: (row[0], -row[2]))
    write_table(
        os.path.join(out_dir, "tradeoff.csv"),
        {"channel": cfg["channel"], "tradeoff": cfg["tradeoff"]},
        ["r", "d", "is_vertex"],
        rows,
    )


def cmd_exponent(cfg, out_dir, seed):
    chan = _channel(cfg)
    src = _source(cfg)
    curve = build_curve(chan, arq_window=int(cfg["exponent"]["window"]))
    solution = solve_high_snr(curve, src, chan)
    n = int(cfg["exponent"]["r_points"])
    a = src.slope(chan)
    rows = [
        [float(r), a * float(r), float(eval_d(curve, r))]
        for r in np.linspace(0.0, curve.max_rate, n)
    ]
    meta = {"channel": cfg["channel"], "source": cfg["source"], "exponent": cfg["exponent"]}
    write_table(
        os.path.join(out_dir, "exponent_lines.csv"),
        meta,
        ["r", "source_exponent", "channel_exponent"],
        rows,
    )
    write_table(
        os.path.join(out_dir, "exponent_summary.csv"),
        meta,
        ["r_star", "d_star", "distortion_exponent", "segment_index"],
        [[solution.r_star, solution.d_star, solution.distortion_exponent,
          solution.segment_index]],
    )


def cmd_finite_snr(cfg, out_dir, seed):
    chan_base = cfg["channel"]
    src = _source(cfg)
    n = int(cfg["finite_snr"]["r_points"])
    rows = []
    argmin_rows = []
    for snr_db in cfg["finite_snr"]["snr_db_list"]:
        chan = ChannelConfig(**{**chan_base, "snr_db": float(snr_db)})
        curve = build_curve(chan)
        for r in np.linspace(0.0, curve.max_rate, n):
            s_term, c_term = distortion_terms(float(r), curve, src, chan)
            rows.append([float(snr_db), float(r), s_term, c_term, s_term + c_term])
        sol = solve_finite_snr(curve, src, chan)
        argmin_rows.append(
            [float(snr_db), sol.r_star, sol.source_term, sol.channel_term, sol.objective]
        )
    meta = {"channel": chan_base, "source": cfg["source"], "finite_snr": cfg["finite_snr"]}
    write_table(
        os.path.join(out_dir, "finite_snr_sweep.csv"),
        meta,
        ["snr_db", "r", "source_term", "channel_term", "total"],
        rows,
    )
    write_table(
        os.path.join(out_dir, "finite_snr_argmin.csv"),
        meta,
        ["snr_db", "r_star", "source_term", "channel_term", "objective"],
        argmin_rows,
    )


def cmd_video(cfg, out_dir, seed):
    v = cfg["video"]
    for key in ("pe_table", "rd_table", "rates"):
        if v[key] is _REQUIRED:
            raise ConfigError(f"video.{key} is required for the video command")
    rd = RdTable.from_csv(v["rd_table"])
    table = CodeErrorTable.from_csv(v["pe_table"])
    model = VideoSourceModel(
        rd_curve=rd, beta=v["beta"], gamma=v["gamma"], sigma2=v["sigma2"]
    )
    rates = {int(k): float(r) for k, r in v["rates"].items()}
    missing = set(table.allowed_nu) - set(rates)
    if missing:
        raise ConfigError(f"video.rates missing entries for N_u {sorted(missing)}")

    rows = []
    for snr_db in v["snr_db_list"]:
        nu_star, _ = optimize_antennas(model, table, float(snr_db), rates.__getitem__)
        for nu in table.allowed_nu:
            de = rd(rates[nu])
            dc = channel_distortion(model, table.lookup(nu, float(snr_db)))
            rows.append([float(snr_db), nu, de, dc, de + dc, int(nu == nu_star)])
    meta = {"video": {k: val for k, val in v.items() if val is not _REQUIRED}}
    write_table(
        os.path.join(out_dir, "video.csv"),
        meta,
        ["snr_db", "nu", "de", "dc", "total", "is_opt"],
        rows,
    )


def _solve_mdp(cfg, deadline):
    chan = _channel(cfg)
    src = _source(cfg)
    arq = _arq(cfg, deadline)
    model = mdp_mod.build_mdp(arq, chan, src)
    sol = solve(mdp_mod.to_lp(model))
    policy = mdp_mod.extract_policy(sol, model)
    return model, sol, policy


def cmd_mdp(cfg, out_dir, seed):
    meta = {"channel": cfg["channel"], "source": cfg["source"], "arq": cfg["arq"],
            "mdp": cfg["mdp"]}
    objectives = []
    for deadline in cfg["mdp"]["deadline_list"]:
        model, sol, policy = _solve_mdp(cfg, int(deadline))
        mdp_mod.export_policy_csv(
            model, policy, os.path.join(out_dir, f"policy_k{deadline}.csv")
        )
        report = mdp_mod.stationary_report(model, policy)
        recheck = mdp_mod.evaluate_policy(model, policy)
        with open(os.path.join(out_dir, f"value_k{deadline}.txt"), "w") as fh:
            fh.write(f"deadline: {deadline}\n")
            fh.write(str(report))
            fh.write(f"  LP objective             : {sol.objective_value:.10g}\n")
            fh.write(f"  stationary re-check      : {recheck:.10g}\n")
        objectives.append([int(deadline), sol.objective_value])
    mean = float(np.mean([v for _, v in objectives]))
    objectives.append(["mean", mean])
    write_table(
        os.path.join(out_dir, "mdp_objectives.csv"),
        meta,
        ["deadline", "avg_reward_per_block"],
        objectives,
    )


def cmd_compare(cfg, out_dir, seed):
    model, sol, policy = _solve_mdp(cfg, None)
    adaptive = sol.objective_value
    rows = []
    for action in sorted(
        set(model.actions), key=lambda a: (a.multiplexing, a.window)
    ):
        fixed = mdp_mod.evaluate_policy(
            model, mdp_mod.static_policy(model, action.multiplexing, action.window)
        )
        ratio = fixed / adaptive
        rows.append(
            [
                action.multiplexing,
                action.window,
                fixed,
                adaptive,
                ratio,
                10.0 * math.log10(ratio),
            ]
        )
    meta = {"channel": cfg["channel"], "source": cfg["source"], "arq": cfg["arq"]}
    write_table(
        os.path.join(out_dir, "compare.csv"),
        meta,
        ["r", "L", "fixed_value", "adaptive_value", "ratio", "ratio_db"],
        rows,
    )


def cmd_simulate(cfg, out_dir, seed):
    model, sol, policy = _solve_mdp(cfg, None)
    sim = SimConfig(
        horizon_blocks=int(cfg["simulate"]["horizon_blocks"]),
        warmup_blocks=int(cfg["simulate"]["warmup_blocks"]),
        seed=seed,
        policy=policy,
    )
    report = run(model, sim)
    exact = mdp_mod.evaluate_policy(model, policy)
    gap = abs(report.avg_reward_per_block - exact)
    verdict = "PASS" if gap <= 3.0 * report.confidence_halfwidth else "FAIL"
    sys.stdout.write(str(report))
    sys.stdout.write(
        f"  exact chain value        : {exact:.10g}\n"
        f"  |sim - exact|            : {gap:.3g}"
        f" vs 3x halfwidth {3 * report.confidence_halfwidth:.3g} -> {verdict}\n"
    )
    meta = {"channel": cfg["channel"], "source": cfg["source"], "arq": cfg["arq"],
            "simulate": cfg["simulate"], "seed": seed}
    write_table(
        os.path.join(out_dir, "simulate.csv"),
        meta,
        [
            "avg_reward_per_block",
            "per_message_distortion",
            "delivery_rate",
            "deadline_violation_rate",
            "throughput_eta",
            "confidence_halfwidth",
            "exact_value",
            "verdict",
        ],
        [
            [
                report.avg_reward_per_block,
                report.per_message_distortion,
                report.delivery_rate,
                report.deadline_violation_rate,
                report.throughput_eta,
                report.confidence_halfwidth,
                exact,
                verdict,
            ]
        ],
    )
    if verdict == "FAIL":
        raise LpNumericalError("simulation disagrees with the exact chain value")


_COMMANDS = {
    "tradeoff": cmd_tradeoff,
    "exponent": cmd_exponent,
    "finite-snr": cmd_finite_snr,
    "video": cmd_video,
    "mdp": cmd_mdp,
    "compare": cmd_compare,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mimodist",
        description="diversity-multiplexing-delay operating point toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, default=None)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    try:
        cfg = (
            load_config(args.config)
            if args.config
            else {s: {k: (d if d is not _REQUIRED else d) for k, d in sch.items()}
                  for s, sch in _SCHEMA.items()}
        )
        os.makedirs(args.out, exist_ok=True)
        _COMMANDS[args.command](cfg, args.out, args.seed)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (LpNumericalError, FloatingPointError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
