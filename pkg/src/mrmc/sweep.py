"""C-R configuration sweeps and the throughput-relaxation experiment."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple as PyTuple

from .conflict import DEFAULT_IS_CAP, ISSpaceTooLarge, SearchLimitExceeded, build_mdcg
from .energy import EnergyReport, energy_efficiency, ee_upper_bound
from .lp import SchedulePlan, Strategy, TwoStageSolver
from .model import NoPathError, Topology, enumerate_tuples
from .simplex import SolverError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class CrConfig:
    channels: int
    radios_per_node: int

    def __post_init__(self):
        if self.channels < 1 or self.radios_per_node < 1:
            raise ValueError(f"C-R configuration needs both counts >= 1, got {self}")


@dataclass
class ConfigResult:
    config: CrConfig
    capacity: float
    report: Optional[EnergyReport]
    solver_stats: dict = field(default_factory=dict)
    status: str = "ok"
    plan: Optional[SchedulePlan] = None
    tuples: int = 0


def _upper_bound(topo: Topology) -> float:
    try:
        return ee_upper_bound(topo)
    except NoPathError:
        return 0.0


def _prepare(topology_base: Topology, config: Optional[CrConfig], strategy, is_cap: int):
    topo = topology_base
    if config is not None:
        topo = topology_base.with_config(config.channels, config.radios_per_node)
    tuples = enumerate_tuples(topo)
    graph = build_mdcg(tuples, topo)
    solver = TwoStageSolver(tuples, graph, topo, Strategy(strategy), is_cap=is_cap)
    return topo, tuples, solver


def run_config(topology_base: Topology, config: Optional[CrConfig], strategy=Strategy.COLGEN,
               is_cap: int = DEFAULT_IS_CAP, keep_plan: bool = True) -> ConfigResult:
    """Capacity, minimum-energy plan and energy report for one configuration.

    ``config=None`` solves the topology as given (radio counts may differ
    per node; the reported radio count is the maximum).
    """
    t0 = time.perf_counter()
    topo, tuples, solver = _prepare(topology_base, config, strategy, is_cap)
    if config is None:
        config = CrConfig(topo.channels, max(n.radios for n in topo.nodes))
    f_star = solver.solve_capacity()
    plan, _ = solver.solve_min_energy(f_star)
    report = energy_efficiency(plan, tuples, topo, upper_bound=_upper_bound(topo))
    solver.stats.wall_ms = (time.perf_counter() - t0) * 1e3
    return ConfigResult(config, f_star, report, solver.stats.as_dict(), "ok",
                        plan if keep_plan else None, len(tuples))


def _run_safe(args) -> ConfigResult:
    topology_base, config, strategy, is_cap, keep_plan = args
    t0 = time.perf_counter()
    try:
        return run_config(topology_base, config, strategy, is_cap, keep_plan)
    except (ISSpaceTooLarge, SearchLimitExceeded) as exc:
        status = f"capped: {exc}"
    except (SolverError, ValueError, RuntimeError) as exc:
        status = f"error: {exc}"
    logger.warning("config %s failed: %s", config, status)
    return ConfigResult(config, 0.0, None,
                        {"wall_ms": (time.perf_counter() - t0) * 1e3}, status)


def sweep_cr(topology_base: Topology, channel_range: Iterable[int],
             radio_range: Iterable[int], strategy=Strategy.COLGEN, workers: int = 1,
             is_cap: int = DEFAULT_IS_CAP, keep_plan: bool = True) -> List[ConfigResult]:
    """Evaluate every (channels, radios) grid point; rows sorted by (channels, radios)."""
    configs = sorted(CrConfig(c, r) for c in channel_range for r in radio_range)
    if not configs:
        raise ValueError("empty channel or radio range")
    jobs = [(topology_base, cfg, Strategy(strategy), is_cap, keep_plan) for cfg in configs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_safe, jobs))
    else:
        results = [_run_safe(job) for job in jobs]
    return sorted(results, key=lambda r: r.config)


def relaxation_sweep(topology_base: Topology, config: CrConfig, fractions: Sequence[float],
                     strategy=Strategy.COLGEN, is_cap: int = DEFAULT_IS_CAP,
                     ) -> List[PyTuple[float, EnergyReport]]:
    """Energy reports when stage 2 only has to deliver ``rho * f*``.

    Capacity is solved once; every rho restarts stage 2 from the same column
    pool, so rho = 1 reproduces :func:`run_config` exactly.
    """
    for rho in fractions:
        if not 0 < rho <= 1:
            raise ValueError(f"relaxation fraction must lie in (0, 1], got {rho}")
    topo, tuples, solver = _prepare(topology_base, config, strategy, is_cap)
    f_star = solver.solve_capacity()
    base_columns = list(solver.columns)
    bound = _upper_bound(topo)
    out = []
    for rho in fractions:
        solver.columns = list(base_columns)
        solver._known = set(base_columns)
        target = f_star if rho == 1 else rho * f_star
        plan, _ = solver.solve_min_energy(target)
        out.append((rho, energy_efficiency(plan, tuples, topo, upper_bound=bound)))
    return out
