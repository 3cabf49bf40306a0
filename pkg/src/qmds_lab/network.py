"""Repair networks and the per-edge communication ledger.

Nodes are named ``W1..Wn`` for storage nodes and ``Wh<e>`` for the node that
replaces the erased ``W<e>``.  An edge is an unordered pair of node names.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import BadHelperSet, BudgetExceeded, HubNotHelper, NotAPowerOfQ, UnknownEdge

QUANTUM = "quantum"
CLASSICAL = "classical"
ARROW = "→"


def storage_node(j: int) -> str:
    return f"W{j}"


def replacement_node(e: int) -> str:
    return f"Wh{e}"


def edge_key(a: str, b: str) -> frozenset:
    if a == b:
        raise UnknownEdge(f"self-loop at {a}")
    return frozenset((a, b))


def edge_name(edge) -> str:
    a, b = sorted(edge, key=_node_order)
    return f"{a}-{b}"


def _node_order(name: str):
    # storage nodes first by index, replacement nodes after
    if name.startswith("Wh"):
        return (1, int(name[2:]))
    return (0, int(name[1:])) if name[1:].isdigit() else (2, name)


@dataclass(frozen=True)
class Topology:
    """Vertices and edges of a repair network.

    ``kind`` is ``"h1"`` (replacement node is the hub), ``"h2"`` (helper
    ``hub`` is the hub) or ``"general"``.
    """

    kind: str
    e: int
    helpers: tuple[int, ...]
    edges: frozenset
    hub: int | None = None

    @property
    def vertices(self) -> tuple[str, ...]:
        return (replacement_node(self.e),) + tuple(storage_node(j) for j in self.helpers)

    @property
    def hub_node(self) -> str:
        if self.kind == "h1":
            return replacement_node(self.e)
        if self.kind == "h2":
            return storage_node(self.hub)
        raise ValueError("general topologies have no hub")

    def has_edge(self, a: str, b: str) -> bool:
        return a != b and edge_key(a, b) in self.edges

    def sorted_edges(self) -> list[frozenset]:
        return sorted(self.edges, key=lambda ed: sorted(map(_node_order, ed)))

    def describe(self) -> str:
        hub = "-" if self.hub is None else str(self.hub)
        return f"{self.kind} e={self.e} T={','.join(map(str, self.helpers))} hub={hub}"


def _check_helpers(e: int, helpers, t: int | None) -> tuple[int, ...]:
    helpers = tuple(int(j) for j in helpers)
    if not helpers:
        raise BadHelperSet("helper set is empty")
    if len(set(helpers)) != len(helpers):
        raise BadHelperSet(f"helper set {helpers} has repeated nodes")
    if int(e) in helpers:
        raise BadHelperSet(f"erased node {e} cannot be a helper")
    if min(helpers) < 1 or int(e) < 1:
        raise BadHelperSet("node indices start at 1")
    if t is not None and len(helpers) < t:
        raise BadHelperSet(f"{len(helpers)} helpers given, at least t={t} are required")
    return helpers


def star_h1(e: int, helpers, *, t: int | None = None) -> Topology:
    """Star with the replacement node ``Wh<e>`` as the hub."""
    helpers = _check_helpers(e, helpers, t)
    hub = replacement_node(e)
    edges = frozenset(edge_key(hub, storage_node(j)) for j in helpers)
    return Topology("h1", int(e), helpers, edges)


def star_h2(e: int, helpers, hub: int, *, t: int | None = None) -> Topology:
    """Star centred on helper ``W<hub>``, with one spoke reaching ``Wh<e>``."""
    helpers = _check_helpers(e, helpers, t)
    if int(hub) not in helpers:
        raise HubNotHelper(f"hub {hub} is not in the helper set {helpers}")
    centre = storage_node(hub)
    edges = {edge_key(centre, replacement_node(e))}
    edges |= {edge_key(centre, storage_node(j)) for j in helpers if j != hub}
    return Topology("h2", int(e), helpers, frozenset(edges), int(hub))


def general_topology(e: int, helpers, edges) -> Topology:
    """Arbitrary connected graph on ``Wh<e>`` and the helpers; edges are node-name pairs."""
    helpers = _check_helpers(e, helpers, None)
    topo = Topology("general", int(e), helpers, frozenset(edge_key(a, b) for a, b in edges))
    verts = set(topo.vertices)
    for ed in topo.edges:
        if not ed <= verts:
            raise UnknownEdge(f"edge {edge_name(ed)} leaves the vertex set")
    # connectivity by breadth-first search
    adj = {v: set() for v in verts}
    for ed in topo.edges:
        a, b = tuple(ed)
        adj[a].add(b)
        adj[b].add(a)
    start = topo.vertices[0]
    seen, queue = {start}, deque([start])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    if seen != verts:
        raise BadHelperSet("topology is not connected")
    return topo


@dataclass(frozen=True)
class LedgerEvent:
    src: str
    dst: str
    dim: int
    tag: str

    @property
    def edge(self) -> frozenset:
        return edge_key(self.src, self.dst)

    def line(self) -> str:
        a, b = sorted((self.src, self.dst), key=_node_order)
        return f"edge={a}-{b} dir={self.src}{ARROW}{self.dst} dim={self.dim} tag={self.tag}"


@dataclass
class CommLedger:
    """Append-only log of transmissions with per-edge dimension products.

    ``caps`` optionally maps edges to the largest allowed ``log_Q beta``; a
    charge that would exceed it raises :class:`BudgetExceeded` and is not
    recorded.  Classical events are logged but never change ``beta``.
    """

    topology: Topology
    q: int
    caps: dict = field(default_factory=dict)
    events: list = field(default_factory=list)

    def __post_init__(self):
        self._beta = {ed: 1 for ed in self.topology.edges}
        caps = {}
        for ed, units in self.caps.items():
            key = ed if isinstance(ed, frozenset) else edge_key(*ed)
            if key not in self._beta:
                raise UnknownEdge(f"cap given for absent edge {edge_name(key)}")
            caps[key] = int(units)
        self.caps = caps

    def charge(self, src: str, dst: str, dim: int, tag: str = QUANTUM) -> CommLedger:
        if not self.topology.has_edge(src, dst):
            raise UnknownEdge(f"no channel between {src} and {dst}")
        dim = int(dim)
        if dim < 2:
            raise ValueError(f"transmitted dimension must be >= 2, got {dim}")
        if tag not in (QUANTUM, CLASSICAL):
            raise ValueError(f"unknown tag {tag!r}")
        key = edge_key(src, dst)
        if tag == QUANTUM:
            new = self._beta[key] * dim
            cap = self.caps.get(key)
            if cap is not None and new > self.q**cap:
                raise BudgetExceeded(
                    f"edge {edge_name(key)} would carry beta={new} above the cap Q**{cap}={self.q**cap}"
                )
            self._beta[key] = new
        self.events.append(LedgerEvent(src, dst, dim, tag))
        return self

    def beta(self, a: str, b: str) -> int:
        key = edge_key(a, b)
        if key not in self._beta:
            raise UnknownEdge(f"no channel between {a} and {b}")
        return self._beta[key]

    def betas(self) -> dict:
        return dict(self._beta)

    def snapshot(self) -> LedgerSnapshot:
        return LedgerSnapshot(self.topology, self.q, tuple(self.events), tuple(sorted(
            ((edge_name(ed), b) for ed, b in self._beta.items()), key=lambda x: x[0])))

    def export(self) -> str:
        return self.snapshot().export()


@dataclass(frozen=True)
class LedgerSnapshot:
    topology: Topology
    q: int
    events: tuple
    beta: tuple  # (edge name, beta) pairs

    def export(self) -> str:
        lines = [ev.line() for ev in self.events]
        lines.append("totals")
        for name, b in self.beta:
            lines.append(f"beta edge={name} value={b} log_q={exact_log(b, self.q)}")
        lines.append(f"ec={entanglement_cost(self)}")
        return "\n".join(lines) + "\n"


def exact_log(value: int, q: int) -> int:
    """``log_q(value)`` for an exact power of ``q``."""
    value, k = int(value), 0
    if value < 1:
        raise NotAPowerOfQ(f"{value} is not a power of {q}")
    while value % q == 0:
        value //= q
        k += 1
    if value != 1:
        raise NotAPowerOfQ(f"beta is not a power of {q}")
    return k


def entanglement_cost(ledger, q: int | None = None) -> int:
    """``sum_h log_Q beta_h`` for a ledger or snapshot, as an exact integer."""
    if isinstance(ledger, CommLedger):
        betas = ledger.betas().values()
        q = ledger.q if q is None else q
    else:
        betas = [b for _, b in ledger.beta]
        q = ledger.q if q is None else q
    return sum(exact_log(b, q) for b in betas)


def replay(topology: Topology, q: int, events) -> CommLedger:
    """Rebuild a ledger from events in any order (totals do not depend on the order)."""
    led = CommLedger(topology, q)
    for ev in events:
        led.charge(ev.src, ev.dst, ev.dim, ev.tag)
    return led
