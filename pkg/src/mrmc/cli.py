"""Command-line entry point.

Subcommands: ``solve``, ``sweep``, ``relax``, ``bound``, ``validate``.
Every flag can also be set through an environment variable named
``MRMC_`` + the flag in upper case with dashes as underscores
(``MRMC_STRATEGY=full``, ``MRMC_E_TX=0.4``); explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .conflict import DEFAULT_IS_CAP, ISSpaceTooLarge, SearchLimitExceeded, build_mdcg
from .energy import EnergyError, ee_upper_bound
from .lp import FEAS_TOL, OPT_TOL, Strategy
from .model import (
    EnergyParams,
    NoPathError,
    PerChannelFixed,
    Topology,
    TopologyError,
    TopologyParseError,
    TotalFixed,
    enumerate_tuples,
    generate_random,
    load_topology,
    shortest_path_hops,
)
from .report import (
    RELAX_COLUMNS,
    RaggedGridError,
    fmt,
    render_heatmap,
    result_row,
    rows_to_csv,
    to_json,
)
from .sweep import CrConfig, ConfigResult, relaxation_sweep, run_config, sweep_cr
from .simplex import SolverError

logger = logging.getLogger("mrmc")

ENV_PREFIX = "MRMC_"
COMMANDS = ("solve", "sweep", "relax", "bound", "validate")
GENERATE_KEYS = {
    "n": int, "area": float, "seed": int, "commodities": int, "comm": float,
    "interference": float, "demand": float, "radios": int, "channels": int,
}


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    input: Optional[str]
    generate: Dict[str, float]
    out: str
    strategy: str
    channels: Optional[str]
    radios: Optional[str]
    rho: List[float]
    workers: int
    seed: Optional[int]
    is_cap: int = DEFAULT_IS_CAP
    feasibility_tol: float = FEAS_TOL
    optimality_tol: float = OPT_TOL
    bandwidth: Optional[str] = None
    energy: Dict[str, float] = field(default_factory=dict)


def parse_range(text: str) -> List[int]:
    """``"3"`` -> [3]; ``"1..4"`` -> [1, 2, 3, 4]."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            lo, hi = int(a), int(b)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or A..B, got {text!r}") from None
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"range must satisfy 1 <= A <= B, got {text!r}")
    return list(range(lo, hi + 1))


def parse_rho(text: str) -> List[float]:
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated fractions, got {text!r}") from None
    if not vals or any(not 0 < v <= 1 for v in vals):
        raise argparse.ArgumentTypeError("every rho must lie in (0, 1]")
    return vals


def parse_generate(items: Sequence[str]) -> Dict[str, float]:
    params: Dict[str, float] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or key not in GENERATE_KEYS:
            raise argparse.ArgumentTypeError(
                f"bad generator parameter {item!r}; keys: {', '.join(sorted(GENERATE_KEYS))}"
            )
        try:
            params[key] = GENERATE_KEYS[key](value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value in {item!r}") from None
    return params


def parse_bandwidth(text: str):
    if text in ("per-channel", "per_channel"):
        return PerChannelFixed()
    key, sep, value = text.partition("=")
    try:
        if sep and key in ("per-channel", "per_channel"):
            return PerChannelFixed(float(value))
        if sep and key == "total":
            return TotalFixed(float(value))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected per-channel[=RATE] or total=W, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="PATH", help="topology JSON file")
    src.add_argument("--generate", nargs="+", metavar="K=V",
                     help="random topology, keys: " + ", ".join(sorted(GENERATE_KEYS)))
    common.add_argument("--channels", metavar="A..B")
    common.add_argument("--radios", metavar="A..B")
    common.add_argument("--strategy", choices=[s.value for s in Strategy], default="colgen")
    common.add_argument("--rho", default="0.5,0.6,0.7,0.8,0.9,1.0", metavar="LIST")
    common.add_argument("--bandwidth", metavar="per-channel|total=W")
    common.add_argument("--e-tx", type=float)
    common.add_argument("--e-rx", type=float)
    common.add_argument("--p0", type=float, help="sleep power per radio")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--seed", type=int, help="generator seed (overrides seed=)")
    common.add_argument("--out", default="results", metavar="DIR")
    common.add_argument("--is-cap", type=int, default=DEFAULT_IS_CAP,
                        help="max maximal independent sets for --strategy full")
    common.add_argument("--lenient", action="store_true",
                        help="warn instead of failing on unknown topology fields")
    common.add_argument("--no-timings", action="store_true",
                        help="write wall_ms as 0 so reruns are byte-identical")
    common.add_argument("--png", action="store_true",
                        help="also write matplotlib PNG figures (sweep heatmaps, relax curve)")
    common.add_argument("--dump-lp", action="store_true",
                        help="write the stage-1 LP in LP text format (solve)")
    common.add_argument("--dump-mdcg", action="store_true",
                        help="write the conflict graph edge list (solve)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="mrmc", description="Capacity and energy efficiency of MR-MC wireless networks.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve one configuration",
        "sweep": "sweep the channels x radios grid",
        "relax": "relax the throughput requirement to rho * capacity",
        "bound": "print the shortest-path energy-efficiency upper bound",
        "validate": "check a topology file",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        _apply_env(sp)
    return parser


def _apply_env(parser: argparse.ArgumentParser) -> None:
    defaults = {}
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        raw = os.environ.get(ENV_PREFIX + action.dest.upper())
        if raw is None:
            continue
        if action.nargs == 0:
            defaults[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif action.nargs == "+":
            defaults[action.dest] = raw.split()
        elif action.type is not None:
            defaults[action.dest] = action.type(raw)
        else:
            defaults[action.dest] = raw
    parser.set_defaults(**defaults)


def _topology(args) -> Topology:
    if args.input:
        topo = load_topology(Path(args.input), strict=not args.lenient)
    elif args.generate is not None:
        params = parse_generate(args.generate)
        if args.seed is not None:
            params["seed"] = args.seed
        if "n" not in params:
            raise UsageError("--generate needs n=<nodes>")
        topo = generate_random(
            int(params["n"]),
            area=params.get("area", 1000.0),
            seed=int(params.get("seed", 0)),
            commodities=int(params.get("commodities", 3)),
            comm_range=params.get("comm", 250.0),
            interference_range=params.get("interference", 500.0),
            demand=params.get("demand", 1.0),
            radios=int(params.get("radios", 1)),
            channels=int(params.get("channels", 1)),
        )
    else:
        raise UsageError("one of --input or --generate is required")
    if args.bandwidth:
        topo = replace(topo, bandwidth_mode=parse_bandwidth(args.bandwidth))
    if args.e_tx is not None or args.e_rx is not None or args.p0 is not None:
        e = topo.energy
        topo = replace(topo, energy=EnergyParams(
            e_tx=e.e_tx if args.e_tx is None else args.e_tx,
            e_rx=e.e_rx if args.e_rx is None else args.e_rx,
            p0_sleep=e.p0_sleep if args.p0 is None else args.p0,
            overrides=e.overrides,
        ))
    return topo


def _manifest(args) -> RunManifest:
    return RunManifest(
        command=args.command,
        input=args.input,
        generate=parse_generate(args.generate) if args.generate else {},
        out=args.out,
        strategy=args.strategy,
        channels=args.channels,
        radios=args.radios,
        rho=parse_rho(args.rho),
        workers=args.workers,
        seed=args.seed,
        is_cap=args.is_cap,
        bandwidth=args.bandwidth,
        energy={k: v for k, v in (("e_tx", args.e_tx), ("e_rx", args.e_rx), ("p0", args.p0))
                if v is not None},
    )


def _single(values: Optional[str], name: str) -> Optional[int]:
    if values is None:
        return None
    vals = parse_range(values)
    if len(vals) != 1:
        raise UsageError(f"--{name} takes a single value for this command")
    return vals[0]


def _config_for(args, topo: Topology) -> Optional[CrConfig]:
    c = _single(args.channels, "channels")
    r = _single(args.radios, "radios")
    if c is None and r is None:
        return None
    radios = {n.radios for n in topo.nodes}
    if r is None:
        if len(radios) != 1:
            raise UsageError("topology has mixed radio counts; pass --radios")
        r = radios.pop()
    return CrConfig(c if c is not None else topo.channels, r)


def _rows_json(results: Sequence[ConfigResult], tuples_of, timings: bool) -> List[dict]:
    rows = []
    for res in results:
        row = result_row(res, timings)
        stats = dict(res.solver_stats)
        if not timings:
            stats["wall_ms"] = 0.0
        row["solver_stats"] = stats
        row["tuples"] = res.tuples
        if res.plan is not None:
            row["plan"] = res.plan.summary(tuples_of(res))
        rows.append(row)
    return rows


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def cmd_validate(args) -> int:
    topo = _topology(args)
    tuples = enumerate_tuples(topo)
    print(f"ok: {len(topo.nodes)} nodes, {topo.channels} channels, "
          f"{len(topo.commodities)} commodities, {len(tuples)} tuples")
    for c in topo.commodities:
        try:
            hops = shortest_path_hops(topo, c)
            print(f"  {c.source} -> {c.destination}: shortest path {hops} hops")
        except NoPathError as exc:
            print(f"  {c.source} -> {c.destination}: {exc}")
    return 0


def cmd_bound(args) -> int:
    topo = _topology(args)
    bound = ee_upper_bound(topo)
    for c in topo.commodities:
        print(f"{c.source} -> {c.destination}: {shortest_path_hops(topo, c)} hops")
    print(f"EE* = {fmt(bound)}")
    return 0


def cmd_solve(args) -> int:
    topo = _topology(args)
    cfg = _config_for(args, topo)
    res = run_config(topo, cfg, Strategy(args.strategy), args.is_cap)
    out = Path(args.out)
    timings = not args.no_timings
    solved = topo if cfg is None else topo.with_config(cfg.channels, cfg.radios_per_node)
    tuples = enumerate_tuples(solved)
    rows = _rows_json([res], lambda _: tuples, timings)
    _write(out, "results.csv", rows_to_csv([result_row(res, timings)]))
    _write(out, "results.json", to_json(asdict(_manifest(args)), rows))
    if args.dump_mdcg:
        _write(out, "mdcg.txt", build_mdcg(tuples, solved).dump_edges())
    if args.dump_lp:
        from .lp import TwoStageSolver, build_capacity_lp
        graph = build_mdcg(tuples, solved)
        solver = TwoStageSolver(tuples, graph, solved, Strategy(args.strategy), is_cap=args.is_cap,
                                reduce_symmetry=False)
        solver.solve_capacity()
        _write(out, "capacity.lp", build_capacity_lp(tuples, solver.columns, solved).to_lp_text())
    print(rows_to_csv([result_row(res, timings)]), end="")
    return 0


def cmd_sweep(args) -> int:
    topo = _topology(args)
    channels = parse_range(args.channels) if args.channels else [topo.channels]
    radios = parse_range(args.radios) if args.radios else sorted({n.radios for n in topo.nodes})
    results = sweep_cr(topo, channels, radios, Strategy(args.strategy), args.workers, args.is_cap)
    out = Path(args.out)
    timings = not args.no_timings
    csv_rows = [result_row(r, timings) for r in results]

    def tuples_of(res):
        return enumerate_tuples(topo.with_config(res.config.channels, res.config.radios_per_node))

    _write(out, "results.csv", rows_to_csv(csv_rows))
    _write(out, "results.json", to_json(asdict(_manifest(args)), _rows_json(results, tuples_of, timings)))
    _write(out, "capacity.svg", render_heatmap(results, "capacity"))
    _write(out, "ee.svg", render_heatmap(results, "ee"))
    if args.png:
        from .plotting import save_heatmap_png
        save_heatmap_png(results, "capacity", out / "capacity.png")
        save_heatmap_png(results, "ee", out / "ee.png")
    best = max((r for r in results if r.report), key=lambda r: r.report.efficiency, default=None)
    if best is not None:
        print(f"best EE {fmt(best.report.efficiency)} at channels={best.config.channels} "
              f"radios={best.config.radios_per_node} (EE/EE* = {fmt(best.report.efficiency_fraction)})")
    failed = [r for r in results if r.status != "ok"]
    for r in failed:
        print(f"config {r.config}: {r.status}", file=sys.stderr)
    print(f"wrote {len(results)} rows to {out / 'results.csv'}")
    return 0


def cmd_relax(args) -> int:
    topo = _topology(args)
    cfg = _config_for(args, topo) or CrConfig(topo.channels, max(n.radios for n in topo.nodes))
    rhos = parse_rho(args.rho)
    points = relaxation_sweep(topo, cfg, rhos, Strategy(args.strategy), args.is_cap)
    capacity = points[0][1].throughput / points[0][0] if points[0][0] else 0.0
    rows = []
    for rho, rep in points:
        res = ConfigResult(cfg, capacity, rep, {"wall_ms": 0.0})
        row = {"rho": rho}
        row.update(result_row(res, False))
        rows.append(row)
    out = Path(args.out)
    _write(out, "results.csv", rows_to_csv(rows, RELAX_COLUMNS))
    _write(out, "results.json", to_json(asdict(_manifest(args)), rows))
    if args.png:
        from .plotting import save_relaxation_png
        save_relaxation_png(points, out / "relax.png")
    print(rows_to_csv(rows, RELAX_COLUMNS), end="")
    return 0


HANDLERS = {
    "solve": cmd_solve, "sweep": cmd_sweep, "relax": cmd_relax,
    "bound": cmd_bound, "validate": cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        parse_rho(args.rho)
        if args.channels:
            parse_range(args.channels)
        if args.radios:
            parse_range(args.radios)
        return HANDLERS[args.command](args)
    except (UsageError, argparse.ArgumentTypeError) as exc:
        parser.print_usage(sys.stderr)
        print(f"mrmc: error: {exc}", file=sys.stderr)
        return 2
    except (TopologyError, TopologyParseError, NoPathError, EnergyError, SolverError,
            ISSpaceTooLarge, SearchLimitExceeded, RaggedGridError, OSError) as exc:
        print(f"mrmc: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
