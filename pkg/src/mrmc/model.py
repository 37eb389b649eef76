"""Network model: nodes, commodities, C-R configuration and the tuple space.

A *tuple* is one point of the multi-radio multi-channel resource space: a
directed link together with the transmit radio, receive radio and channel
it would use.  Node references inside tuples are indices into
``Topology.nodes``.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple as PyTuple, Union

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_E_TX = 0.5
DEFAULT_E_RX = 0.5
DEFAULT_CHANNEL_RATE = 1.0
# sleep power as a fraction of transmission power per unit rate
DEFAULT_P0_FRACTION = 0.01


class TopologyError(ValueError):
    """Raised when a topology violates one of its invariants."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TopologyParseError(ValueError):
    """Raised for malformed topology files."""


class NoPathError(RuntimeError):
    """Raised when a commodity's destination is unreachable."""


@dataclass(frozen=True)
class NodeSpec:
    id: str
    x: float
    y: float
    radios: int = 1


@dataclass(frozen=True)
class Commodity:
    source: str
    destination: str
    demand: float = 1.0


@dataclass(frozen=True)
class PerChannelFixed:
    """Every channel carries ``rate`` regardless of how many channels exist."""

    rate: float = DEFAULT_CHANNEL_RATE


@dataclass(frozen=True)
class TotalFixed:
    """A fixed system bandwidth split evenly over the channels."""

    total_capacity: float


BandwidthMode = Union[PerChannelFixed, TotalFixed]


@dataclass(frozen=True)
class EnergyOverride:
    """Per-link unit energies.  ``channel=None`` applies to every channel."""

    tx: str
    rx: str
    e_tx: float
    e_rx: float
    channel: Optional[int] = None


@dataclass(frozen=True)
class EnergyParams:
    e_tx: float = DEFAULT_E_TX
    e_rx: float = DEFAULT_E_RX
    # None -> DEFAULT_P0_FRACTION * (e_tx + e_rx) * 1 rate unit
    p0_sleep: Optional[float] = None
    overrides: PyTuple[EnergyOverride, ...] = ()

    @property
    def p0(self) -> float:
        if self.p0_sleep is not None:
            return self.p0_sleep
        return DEFAULT_P0_FRACTION * (self.e_tx + self.e_rx) * 1.0


@dataclass(frozen=True)
class Topology:
    nodes: PyTuple[NodeSpec, ...]
    channels: int
    comm_range: float
    interference_range: float
    commodities: PyTuple[Commodity, ...]
    bandwidth_mode: BandwidthMode = PerChannelFixed()
    energy: EnergyParams = EnergyParams()
    # lets commodity endpoints relay other commodities (off = literal exclusions)
    allow_endpoint_relay: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "commodities", tuple(self.commodities))
        validate(self)

    @property
    def node_index(self) -> Dict[str, int]:
        return {n.id: i for i, n in enumerate(self.nodes)}

    @property
    def positions(self) -> np.ndarray:
        return np.array([[n.x, n.y] for n in self.nodes], dtype=float).reshape(-1, 2)

    @property
    def total_radios(self) -> int:
        return sum(n.radios for n in self.nodes)

    @property
    def sources(self) -> set:
        return {c.source for c in self.commodities}

    @property
    def destinations(self) -> set:
        return {c.destination for c in self.commodities}

    def channel_rate(self) -> float:
        mode = self.bandwidth_mode
        if isinstance(mode, TotalFixed):
            return mode.total_capacity / self.channels
        return mode.rate

    def with_config(self, channels: int, radios: int) -> "Topology":
        """Copy with ``channels`` channels and ``radios`` radios on every node."""
        nodes = tuple(replace(n, radios=radios) for n in self.nodes)
        return replace(self, nodes=nodes, channels=channels)

    def distance(self, u: int, v: int) -> float:
        a, b = self.nodes[u], self.nodes[v]
        return math.hypot(a.x - b.x, a.y - b.y)


def validate(topo: Topology) -> None:
    ids = [n.id for n in topo.nodes]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise TopologyError("node identifiers unique", f"duplicates: {dupes}")
    for n in topo.nodes:
        if not (math.isfinite(n.x) and math.isfinite(n.y)):
            raise TopologyError("positions finite", f"node {n.id}")
        if int(n.radios) != n.radios or n.radios < 1:
            raise TopologyError("radios >= 1", f"node {n.id} has {n.radios}")
    if int(topo.channels) != topo.channels or topo.channels < 1:
        raise TopologyError("channels >= 1", f"got {topo.channels}")
    if not topo.comm_range > 0:
        raise TopologyError("comm_range > 0", f"got {topo.comm_range}")
    if topo.interference_range < topo.comm_range:
        raise TopologyError(
            "interference_range >= comm_range",
            f"{topo.interference_range} < {topo.comm_range}",
        )
    known = set(ids)
    for c in topo.commodities:
        if c.source not in known or c.destination not in known:
            raise TopologyError(
                "commodity endpoints exist", f"{c.source}->{c.destination}"
            )
        if c.source == c.destination:
            raise TopologyError("commodity source != destination", c.source)
        if not c.demand > 0:
            raise TopologyError("commodity demand > 0", f"{c.source}->{c.destination}")
    mode = topo.bandwidth_mode
    rate = mode.total_capacity if isinstance(mode, TotalFixed) else mode.rate
    if not rate > 0:
        raise TopologyError("link capacity > 0", f"got {rate}")
    e = topo.energy
    if min(e.e_tx, e.e_rx) < 0 or e.p0 < 0:
        raise TopologyError("energies >= 0")
    for o in e.overrides:
        if o.tx not in known or o.rx not in known:
            raise TopologyError("energy override references existing nodes", f"{o.tx}->{o.rx}")
        if min(o.e_tx, o.e_rx) < 0:
            raise TopologyError("energies >= 0", f"override {o.tx}->{o.rx}")


@dataclass(frozen=True, order=True)
class Tuple:
    tx: int
    rx: int
    tx_radio: int
    rx_radio: int
    channel: int
    capacity: float = field(default=1.0, compare=False)
    e_tx: float = field(default=DEFAULT_E_TX, compare=False)
    e_rx: float = field(default=DEFAULT_E_RX, compare=False)

    @property
    def unit_energy(self) -> float:
        return self.e_tx + self.e_rx

    @property
    def endpoints(self) -> PyTuple[PyTuple[int, int], PyTuple[int, int]]:
        """(node, radio) pairs occupied by this tuple."""
        return (self.tx, self.tx_radio), (self.rx, self.rx_radio)


def _role_masks(topo: Topology) -> PyTuple[np.ndarray, np.ndarray]:
    """Boolean masks of nodes allowed to transmit and to receive."""
    n = len(topo.nodes)
    can_tx = np.ones(n, dtype=bool)
    can_rx = np.ones(n, dtype=bool)
    idx = topo.node_index
    if topo.allow_endpoint_relay:
        # only a commodity's own endpoints are restricted, which the LP
        # enforces per commodity; the tuple space stays unrestricted
        return can_tx, can_rx
    for c in topo.commodities:
        can_rx[idx[c.source]] = False
        can_tx[idx[c.destination]] = False
    return can_tx, can_rx


def link_pairs(topo: Topology) -> List[PyTuple[int, int]]:
    """Directed (tx, rx) node pairs in communication range honouring the exclusions."""
    pos = topo.positions
    if len(pos) == 0:
        return []
    dist = np.hypot(*(pos[:, None, :] - pos[None, :, :]).transpose(2, 0, 1))
    can_tx, can_rx = _role_masks(topo)
    ok = (dist <= topo.comm_range) & can_tx[:, None] & can_rx[None, :]
    np.fill_diagonal(ok, False)
    return [(int(u), int(v)) for u, v in zip(*np.nonzero(ok))]


def _energy_lookup(topo: Topology):
    ids = topo.node_index
    table = {}
    for o in topo.energy.overrides:
        table[(ids[o.tx], ids[o.rx], o.channel)] = (o.e_tx, o.e_rx)
    default = (topo.energy.e_tx, topo.energy.e_rx)

    def lookup(u: int, v: int, ch: int) -> PyTuple[float, float]:
        return table.get((u, v, ch), table.get((u, v, None), default))

    return lookup


def enumerate_tuples(topo: Topology) -> List[Tuple]:
    """All tuples of the network, sorted by (tx, rx, tx_radio, rx_radio, channel)."""
    rate = topo.channel_rate()
    energy = _energy_lookup(topo)
    out = []
    for u, v in link_pairs(topo):
        for ru in range(topo.nodes[u].radios):
            for rv in range(topo.nodes[v].radios):
                for ch in range(topo.channels):
                    et, er = energy(u, v, ch)
                    out.append(Tuple(u, v, ru, rv, ch, rate, et, er))
    return out


def shortest_path_hops(topo: Topology, commodity: Commodity) -> int:
    """BFS hop count from source to destination over the tuple link graph."""
    idx = topo.node_index
    s, d = idx[commodity.source], idx[commodity.destination]
    adj: Dict[int, List[int]] = {}
    for u, v in link_pairs(topo):
        adj.setdefault(u, []).append(v)
    # a commodity's own endpoints may not be intermediate hops
    blocked = {s, d}
    dist = {s: 0}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v in adj.get(u, ()):
            if v in dist:
                continue
            if v == d:
                return dist[u] + 1
            if v in blocked:
                continue
            dist[v] = dist[u] + 1
            queue.append(v)
    raise NoPathError(f"no path from {commodity.source} to {commodity.destination}")


# --------------------------------------------------------------------------
# file format

_TOP_FIELDS = {
    "nodes", "channels", "comm_range", "interference_range", "commodities",
    "bandwidth_mode", "energy", "allow_endpoint_relay", "name",
}
_NODE_FIELDS = {"id", "x", "y", "radios"}
_COMMODITY_FIELDS = {"src", "dst", "demand"}
_ENERGY_FIELDS = {"e_tx", "e_rx", "p0_sleep", "overrides"}
_OVERRIDE_FIELDS = {"tx", "rx", "channel", "e_tx", "e_rx"}


def _check_fields(obj: Any, allowed: set, where: str, strict: bool) -> None:
    if not isinstance(obj, dict):
        raise TopologyParseError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        msg = f"{where}: unknown field(s) {unknown}"
        if strict:
            raise TopologyParseError(msg)
        warnings.warn(msg, stacklevel=3)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise TopologyParseError(f"{where}: missing field '{key}'")
    return obj[key]


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TopologyParseError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_bandwidth(raw: Any) -> BandwidthMode:
    if raw is None or raw == "per_channel":
        return PerChannelFixed()
    if isinstance(raw, dict):
        if set(raw) == {"per_channel"}:
            return PerChannelFixed(_number(raw["per_channel"], "bandwidth_mode.per_channel"))
        if set(raw) == {"total"}:
            return TotalFixed(_number(raw["total"], "bandwidth_mode.total"))
    raise TopologyParseError(
        f"bandwidth_mode: expected 'per_channel', {{'per_channel': rate}} "
        f"or {{'total': capacity}}, got {raw!r}"
    )


def topology_from_dict(data: Dict[str, Any], strict: bool = True) -> Topology:
    _check_fields(data, _TOP_FIELDS, "topology", strict)
    nodes = []
    for i, raw in enumerate(_require(data, "nodes", "topology")):
        where = f"nodes[{i}]"
        _check_fields(raw, _NODE_FIELDS, where, strict)
        nodes.append(
            NodeSpec(
                id=str(_require(raw, "id", where)),
                x=_number(_require(raw, "x", where), where + ".x"),
                y=_number(_require(raw, "y", where), where + ".y"),
                radios=int(_number(raw.get("radios", 1), where + ".radios")),
            )
        )
    commodities = []
    for i, raw in enumerate(data.get("commodities", [])):
        where = f"commodities[{i}]"
        _check_fields(raw, _COMMODITY_FIELDS, where, strict)
        commodities.append(
            Commodity(
                str(_require(raw, "src", where)),
                str(_require(raw, "dst", where)),
                _number(raw.get("demand", 1.0), where + ".demand"),
            )
        )
    energy = EnergyParams()
    if "energy" in data:
        raw_e = data["energy"]
        _check_fields(raw_e, _ENERGY_FIELDS, "energy", strict)
        overrides = []
        for i, o in enumerate(raw_e.get("overrides", [])):
            where = f"energy.overrides[{i}]"
            _check_fields(o, _OVERRIDE_FIELDS, where, strict)
            ch = o.get("channel")
            overrides.append(
                EnergyOverride(
                    str(_require(o, "tx", where)),
                    str(_require(o, "rx", where)),
                    _number(_require(o, "e_tx", where), where + ".e_tx"),
                    _number(_require(o, "e_rx", where), where + ".e_rx"),
                    None if ch is None else int(ch),
                )
            )
        p0 = raw_e.get("p0_sleep")
        energy = EnergyParams(
            e_tx=_number(raw_e.get("e_tx", DEFAULT_E_TX), "energy.e_tx"),
            e_rx=_number(raw_e.get("e_rx", DEFAULT_E_RX), "energy.e_rx"),
            p0_sleep=None if p0 is None else _number(p0, "energy.p0_sleep"),
            overrides=tuple(overrides),
        )
    return Topology(
        nodes=tuple(nodes),
        channels=int(_number(data.get("channels", 1), "channels")),
        comm_range=_number(_require(data, "comm_range", "topology"), "comm_range"),
        interference_range=_number(
            _require(data, "interference_range", "topology"), "interference_range"
        ),
        commodities=tuple(commodities),
        bandwidth_mode=_parse_bandwidth(data.get("bandwidth_mode")),
        energy=energy,
        allow_endpoint_relay=bool(data.get("allow_endpoint_relay", False)),
    )


def load_topology(source: Union[str, Path], strict: bool = True) -> Topology:
    """Load a topology from a JSON file path or from JSON text."""
    if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
        path = Path(source)
        text = path.read_text()
        label = str(path)
    else:
        text = str(source)
        label = "<text>"
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyParseError(
            f"{label}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return topology_from_dict(data, strict=strict)


def topology_to_dict(topo: Topology) -> Dict[str, Any]:
    mode = topo.bandwidth_mode
    bw: Any = {"total": mode.total_capacity} if isinstance(mode, TotalFixed) else {"per_channel": mode.rate}
    e = topo.energy
    energy: Dict[str, Any] = {"e_tx": e.e_tx, "e_rx": e.e_rx}
    if e.p0_sleep is not None:
        energy["p0_sleep"] = e.p0_sleep
    if e.overrides:
        energy["overrides"] = [
            {k: v for k, v in vars(o).items() if v is not None} for o in e.overrides
        ]
    out = {
        "nodes": [{"id": n.id, "x": n.x, "y": n.y, "radios": n.radios} for n in topo.nodes],
        "channels": topo.channels,
        "comm_range": topo.comm_range,
        "interference_range": topo.interference_range,
        "commodities": [
            {"src": c.source, "dst": c.destination, "demand": c.demand}
            for c in topo.commodities
        ],
        "bandwidth_mode": bw,
        "energy": energy,
    }
    if topo.allow_endpoint_relay:
        out["allow_endpoint_relay"] = True
    return out


def generate_random(
    n: int,
    area: float = 1000.0,
    seed: int = 0,
    commodities: int = 3,
    comm_range: float = 250.0,
    interference_range: float = 500.0,
    radios: int = 1,
    channels: int = 1,
    demand: float = 1.0,
    bandwidth_mode: BandwidthMode = PerChannelFixed(),
    energy: EnergyParams = EnergyParams(),
    ensure_reachable: bool = True,
    max_tries: int = 1000,
) -> Topology:
    """Uniformly place ``n`` nodes in an ``area`` x ``area`` square.

    Commodity endpoints are drawn without replacement.  With
    ``ensure_reachable`` the draw is repeated (same RNG stream) until every
    commodity has a path, so the result is still a function of ``seed``.
    """
    if n < 2:
        raise TopologyError("n >= 2", f"got n={n}")
    if 2 * commodities > n:
        raise TopologyError("2 * commodities <= n", f"{commodities} commodities, {n} nodes")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        pos = rng.uniform(0.0, area, size=(n, 2))
        ends = rng.choice(n, size=2 * commodities, replace=False)
        nodes = tuple(
            NodeSpec(f"n{i}", float(round(x, 3)), float(round(y, 3)), radios)
            for i, (x, y) in enumerate(pos)
        )
        comms = tuple(
            Commodity(f"n{ends[2 * k]}", f"n{ends[2 * k + 1]}", demand)
            for k in range(commodities)
        )
        topo = Topology(
            nodes, channels, comm_range, interference_range, comms, bandwidth_mode, energy
        )
        if not ensure_reachable or all_reachable(topo):
            return topo
    raise TopologyError(
        "commodities reachable", f"no connected draw in {max_tries} tries (seed={seed})"
    )


def all_reachable(topo: Topology) -> bool:
    try:
        for c in topo.commodities:
            shortest_path_hops(topo, c)
    except NoPathError:
        return False
    return True
