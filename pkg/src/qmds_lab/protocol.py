"""Download-and-return erasure correction on simulated storage states.

A :class:`StorageInstance` holds the joint state of the reference ``R1..Rk``
and the storage nodes ``W1..Wn`` (or of the nodes only, for a chosen logical
state).  After :func:`erase`, the register ``W<e>`` is off limits to every
protocol step and a blank replacement register ``Wh<e>`` exists.  Blank
registers are kept as pending ``|0>`` factors and only enter the amplitude
vector when a step first acts on them, which keeps the largest grid codes
under the amplitude cap.

Quantum transmissions are teleportations through fresh ``|Q+>`` pairs.  The
pair is charged to the ledger as one ``Q``-dimensional quantum send; the two
Bell outcomes are logged as classical symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AccessViolation, AlreadyErased, BadHelperSet, BudgetExceeded
from .network import (
    CLASSICAL,
    QUANTUM,
    CommLedger,
    LedgerSnapshot,
    Topology,
    entanglement_cost,
    replacement_node,
    star_h1,
    star_h2,
    storage_node,
)
from .qmds import QmdsCode, extract_helper_unitary
from .qstate import (
    QuditState,
    RegisterLabel,
    apply_unitary,
    measure_computational,
    partial_inner,
    schmidt_rank,
    shift,
    tensor,
    teleport,
)

FIDELITY_TOL = 1e-9


@dataclass(frozen=True)
class StorageInstance:
    """Joint storage state plus erasure bookkeeping.

    ``pending`` maps names of blank registers to the basis value they hold;
    they are product factors of the full state and are not stored in
    ``state``.  ``location`` maps every register (stored or pending) to the
    node holding it.
    """

    code: QmdsCode
    state: QuditState
    reference: bool
    location: dict
    erased: int | None = None
    inaccessible: frozenset = frozenset()
    pending: dict = field(default_factory=dict)
    original: QuditState | None = None

    @property
    def q(self) -> int:
        return self.code.q

    def reference_labels(self) -> tuple[str, ...]:
        return tuple(n for n in self.state.labels if n.startswith("R"))

    def full_labels(self) -> tuple[str, ...]:
        return self.state.labels + tuple(self.pending)

    def schmidt_rank(self, part) -> int:
        """Schmidt rank across ``part``; pending blank registers are product factors of rank 1."""
        stored = [p for p in part if p in self.state]
        unknown = [p for p in part if p not in self.state and p not in self.pending]
        if unknown:
            raise KeyError(f"unknown registers {unknown}")
        if not stored or len(stored) == len(self.state.registers):
            return 1
        return schmidt_rank(self.state, stored)


def _w_registers(code: QmdsCode) -> list[RegisterLabel]:
    return list(code.registers)


def _initial_location(code: QmdsCode, with_reference: bool) -> dict:
    loc = {storage_node(i): storage_node(i) for i in range(1, code.n + 1)}
    if with_reference:
        loc.update({f"R{i}": "reference" for i in range(1, code.k + 1)})
    return loc


def encode_with_reference(code: QmdsCode) -> StorageInstance:
    """``|Phi> = K**-1/2 sum_s |s>_R |phi_s>_W`` with ``R`` split into ``k`` qudits ``R1..Rk``."""
    regs = [RegisterLabel(f"R{i}", code.q) for i in range(1, code.k + 1)] + _w_registers(code)
    amps = (code.states / math.sqrt(code.K)).reshape(-1)
    state = QuditState(regs, amps)
    return StorageInstance(code, state, True, _initial_location(code, True), original=state)


def random_logical_state(k_dim: int, seed=None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=k_dim) + 1j * rng.normal(size=k_dim)
    return v / np.linalg.norm(v)


def encode_logical(code: QmdsCode, coefficients=None, *, seed=None) -> StorageInstance:
    """Encode one logical state on ``W1..Wn`` only (seeded random when ``coefficients`` is omitted)."""
    if coefficients is None:
        coefficients = random_logical_state(code.K, seed)
    state = code.encode(coefficients)
    return StorageInstance(code, state, False, _initial_location(code, False), original=state)


def erase(instance: StorageInstance, e: int) -> StorageInstance:
    """Mark ``W<e>`` inaccessible and add a blank replacement register ``Wh<e>`` in ``|0>``."""
    if instance.erased is not None:
        raise AlreadyErased(f"node {instance.erased} is already erased")
    if not 1 <= int(e) <= instance.code.n:
        raise BadHelperSet(f"erased index {e} outside 1..{instance.code.n}")
    e = int(e)
    loc = dict(instance.location)
    loc[replacement_node(e)] = replacement_node(e)
    pending = dict(instance.pending)
    pending[replacement_node(e)] = 0
    return replace(
        instance,
        erased=e,
        inaccessible=instance.inaccessible | {storage_node(e)},
        pending=pending,
        location=loc,
    )


# ---------------------------------------------------------------------------
# protocol sessions


@dataclass
class ProtocolResult:
    state: QuditState
    ledger: LedgerSnapshot
    fidelity: float
    outcomes: dict
    passed: bool
    ec: int
    trace: str
    budget_ok: bool = True


def _pair_preparation(q: int) -> np.ndarray:
    """``CSUM (F (x) I)``: maps ``|0>|0>`` to ``|Q+>``."""
    omega = np.exp(2j * np.pi / q)
    j = np.arange(q)
    fourier = omega ** np.outer(j, j) / math.sqrt(q)
    csum = np.zeros((q * q, q * q))
    for a in range(q):
        for b in range(q):
            csum[a * q + (a + b) % q, a * q + b] = 1.0
    return csum @ np.kron(fourier, np.eye(q))


class Session:
    """One protocol run: the evolving state, register locations, ledger and trace.

    Every step checks that it only touches accessible registers held by the
    acting node; the erased register can only change through the physical
    back-action of measurements on registers it is entangled with.
    """

    def __init__(self, instance: StorageInstance, topology: Topology, *, caps=None, seed=None):
        if instance.erased is None:
            raise BadHelperSet("no node has been erased")
        if topology.e != instance.erased:
            raise BadHelperSet(f"topology repairs node {topology.e} but node {instance.erased} is erased")
        self.instance = instance
        self.topology = topology
        self.q = instance.q
        self.state = instance.state
        self.location = dict(instance.location)
        self.pending = dict(instance.pending)
        self.blocked = set(instance.inaccessible)
        self.ledger = CommLedger(topology, self.q, dict(caps or {}))
        self.rng = np.random.default_rng(seed)
        self.trace: list[str] = []
        self.teleport_outcomes: list[tuple[int, int]] = []
        self.measurements: list[tuple[str, tuple[int, ...]]] = []
        self.projection_weight = 1.0
        self._step = 0

    # guards -------------------------------------------------------------

    def guard(self, names, node: str | None = None) -> None:
        bad = [n for n in names if n in self.blocked]
        if bad:
            raise AccessViolation(f"registers {bad} belong to the erased node")
        if node is not None:
            away = [n for n in names if self.location.get(n) != node]
            if away:
                raise AccessViolation(f"registers {away} are not held by {node}")

    def step(self, text: str) -> None:
        self._step += 1
        self.trace.append(f"step {self._step} {text}")

    def _materialize(self, names) -> None:
        for n in names:
            if n in self.pending:
                value = self.pending.pop(n)
                blank = QuditState.basis([RegisterLabel(n, self.q)], [value])
                self.state = tensor([self.state, blank])

    # operations ---------------------------------------------------------

    def fresh(self, node: str, name: str) -> None:
        """Create a blank ``|0>`` register at ``node`` (kept pending until first used)."""
        if name in self.state or name in self.pending:
            raise AccessViolation(f"register {name} already exists")
        self.pending[name] = 0
        self.location[name] = node

    def local(self, node: str, u, names, *, check: bool = True) -> None:
        self.guard(names, node)
        self._materialize(names)
        self.state = apply_unitary(self.state, u, list(names), check=check)

    def send(self, name: str, dst: str, new_name: str) -> None:
        """Teleport register ``name`` to node ``dst``, where it is called ``new_name``."""
        self.guard([name])
        src = self.location[name]
        self._materialize([name])
        self.ledger.charge(src, dst, self.q, QUANTUM)
        self.trace.append(self.ledger.events[-1].line())
        if new_name in self.pending:
            # a blank register at the receiver is discarded and replaced by the incoming qudit
            if self.location.get(new_name) != dst:
                raise AccessViolation(f"{new_name} is not held by {dst}")
            del self.pending[new_name]
        log: list = []
        self.state = teleport(self.state, name, (f"{src}:pair", new_name), log=log, rng=self.rng)
        self.teleport_outcomes.extend(log)
        hub = self.topology.hub_node
        other = dst if src == hub else src
        for _ in range(2):
            self.ledger.charge(hub, other, self.q, CLASSICAL)
            self.trace.append(self.ledger.events[-1].line())
        del self.location[name]
        self.location[new_name] = dst

    def measure(self, node: str, name: str, outcome: int | None = None) -> int:
        self.guard([name], node)
        self._materialize([name])
        forced = None if outcome is None else (int(outcome),)
        res = measure_computational(self.state, [name], self.rng, outcome=forced)
        self.state = res.state
        self.measurements.append((name, res.outcome))
        return res.outcome[0]

    def project_erased(self, value: int) -> None:
        """Contract the erased register with ``<value|``; the state keeps its residual norm.

        After the hub measures its copy of the erased qudit's value, the
        erased register holds that value; contracting it is exact and the
        weight is recorded so the final fidelity stays a true overlap.
        """
        name = storage_node(self.topology.e)
        if name not in self.state:
            return
        self.state, weight = partial_inner(self.state, [value], [name])
        self.projection_weight = weight
        self.trace.append(f"note erased register {name} collapsed to |{value}> weight={weight:.17g}")


def _target(instance: StorageInstance) -> QuditState:
    e = instance.erased
    return instance.original.relabel({storage_node(e): replacement_node(e)})


def _helper_order(code: QmdsCode, e: int, helpers) -> tuple[tuple[int, ...], tuple[int, ...]]:
    helpers = tuple(sorted(int(j) for j in helpers))
    if len(helpers) != code.t:
        raise BadHelperSet(f"the download-and-return protocol uses exactly t={code.t} helpers")
    rest = tuple(i for i in range(1, code.n + 1) if i not in helpers and i != e)
    return helpers, rest + (e,)


def _caps_for(topology: Topology, cap) -> dict:
    if cap is None:
        return {}
    if isinstance(cap, dict):
        return cap
    return {ed: int(cap) for ed in topology.edges}


def _finish(session: Session, instance: StorageInstance, header: str) -> ProtocolResult:
    target = _target(instance)
    final = session.state
    leftovers = [n for n in final.labels if n not in target.labels]
    if leftovers:
        raise AccessViolation(f"registers {leftovers} were left behind")
    # pending blanks still unused are product |0> factors absent from the target
    overlap = np.vdot(target.permuted(sorted(target.labels)).amplitudes,
                      final.permuted(sorted(target.labels)).amplitudes)
    fid = float(abs(overlap) ** 2)
    snap = session.ledger.snapshot()
    ec = entanglement_cost(snap)
    passed = fid >= 1 - FIDELITY_TOL
    lines = [header] + session.trace + [f"fidelity={fid:.17g} ec={ec}"]
    outcomes = {"teleport": list(session.teleport_outcomes), "measure": list(session.measurements)}
    return ProtocolResult(final, snap, fid, outcomes, passed, ec, "\n".join(lines) + "\n")


def _header(instance: StorageInstance, topology: Topology, seed) -> str:
    c = instance.code
    hub = "-" if topology.hub is None else str(topology.hub)
    return (
        "qmds-trace v1\n"
        f"Q={c.q} n={c.n} t={c.t} e={topology.e} T={','.join(map(str, topology.helpers))} "
        f"topology={topology.kind} hub={hub} seed={seed}"
    )


def run_download_return_h1(instance: StorageInstance, helpers, seed=None, *, outcome: int | None = None,
                           cap=None) -> ProtocolResult:
    """Repair over the star centred on the replacement node.

    Args:
        helpers: the ``t`` helper nodes.
        seed: seeds the teleportation outcomes and the hub measurement.
        outcome: force the hub measurement result instead of sampling.
        cap: per-edge limit on ``log_Q beta`` (an int for every edge or a dict).
    """
    code, e = instance.code, instance.erased
    if e is None:
        raise BadHelperSet("no node has been erased")
    topo = star_h1(e, helpers, t=code.t)
    order, comp = _helper_order(code, e, helpers)
    u = extract_helper_unitary(code, order, comp).matrix
    s = Session(instance, topo, caps=_caps_for(topo, cap), seed=seed)
    hub = replacement_node(e)

    s.step(f"download {len(order)} helper qudits to {hub}")
    copies = [f"{hub}:{storage_node(j)}" for j in order]
    for j, name in zip(order, copies):
        s.send(storage_node(j), hub, name)
    s.step(f"{hub} applies U_T^dagger")
    s.local(hub, u.conj().T, copies, check=False)
    s.step(f"{hub} measures {copies[-1]}")
    eps = s.measure(hub, copies[-1], outcome)
    s.project_erased(eps)
    s.step(f"{hub} resets {copies[-1]} and prepares |Q+> with {hub}")
    s.local(hub, shift(code.q, -eps), [copies[-1]])
    s.local(hub, _pair_preparation(code.q), [copies[-1], hub])
    s.step(f"{hub} applies U_T")
    s.local(hub, u, copies, check=False)
    s.step(f"return {len(order)} qudits")
    for j, name in zip(order, copies):
        s.send(name, storage_node(j), storage_node(j))
    return _finish(s, instance, _header(instance, topo, seed))


def run_download_return_h2(instance: StorageInstance, helpers, hub: int, seed=None, *,
                           outcome: int | None = None, cap=None) -> ProtocolResult:
    """Repair over the star centred on helper ``W<hub>``; the repaired qudit is sent to ``Wh<e>`` last."""
    code, e = instance.code, instance.erased
    if e is None:
        raise BadHelperSet("no node has been erased")
    topo = star_h2(e, helpers, hub, t=code.t)
    order, comp = _helper_order(code, e, helpers)
    u = extract_helper_unitary(code, order, comp).matrix
    s = Session(instance, topo, caps=_caps_for(topo, cap), seed=seed)
    centre = storage_node(hub)

    names = [centre if j == hub else f"{centre}:{storage_node(j)}" for j in order]
    s.step(f"download {len(order) - 1} helper qudits to {centre}")
    for j, name in zip(order, names):
        if j != hub:
            s.send(storage_node(j), centre, name)
    s.step(f"{centre} applies U_T^dagger")
    s.local(centre, u.conj().T, names, check=False)
    s.step(f"{centre} measures {names[-1]}")
    eps = s.measure(centre, names[-1], outcome)
    s.project_erased(eps)
    ancilla = f"{centre}:ancilla"
    s.step(f"{centre} resets {names[-1]} and prepares |Q+> with {ancilla}")
    s.fresh(centre, ancilla)
    s.local(centre, shift(code.q, -eps), [names[-1]])
    s.local(centre, _pair_preparation(code.q), [names[-1], ancilla])
    s.step(f"{centre} applies U_T")
    s.local(centre, u, names, check=False)
    s.step(f"return {len(order) - 1} qudits and send the replacement qudit")
    for j, name in zip(order, names):
        if j != hub:
            s.send(name, storage_node(j), storage_node(j))
    s.send(ancilla, replacement_node(e), replacement_node(e))
    return _finish(s, instance, _header(instance, topo, seed))


# ---------------------------------------------------------------------------
# fewer than t helpers


@dataclass(frozen=True)
class InfeasibilityCertificate:
    e: int
    helpers: tuple[int, ...]
    q: int
    sr_in: int
    sr_required: int

    @property
    def cut(self) -> tuple[str, ...]:
        return tuple(storage_node(j) for j in self.helpers) + (replacement_node(self.e),)

    @property
    def violated(self) -> bool:
        return self.sr_in < self.sr_required

    def export(self) -> str:
        cut = ",".join(self.cut)
        return (
            f"infeasible e={self.e} L={','.join(map(str, self.helpers))}\n"
            f"cut={cut} sr_in={self.sr_in} sr_out={self.sr_required}\n"
            f"monotonicity requires sr_in >= sr_out; {self.sr_in} < {self.sr_required}\n"
        )


def attempt_with_fewer_helpers(instance: StorageInstance, helpers, *, epsilon: int = 0):
    """Schmidt-rank obstruction to repair with fewer than ``t`` helpers.

    Builds the start state (storage state with a blank ``Wh<e>``) and the
    required end state (the storage state moved onto ``Wh<e>`` with ``W<e>``
    left in ``|epsilon>``), both with the reference attached, and compares
    their Schmidt ranks across ``W_L Wh<e>``.  Returns ``None`` when
    ``|L| >= t`` since the download-and-return protocol then applies.
    """
    code, e = instance.code, instance.erased
    if e is None:
        raise BadHelperSet("no node has been erased")
    helpers = tuple(sorted(int(j) for j in helpers))
    if e in helpers or len(set(helpers)) != len(helpers) or not set(helpers) <= set(range(1, code.n + 1)):
        raise BadHelperSet(f"invalid helper set {helpers} for erased node {e}")
    if len(helpers) >= code.t:
        return None
    base = instance if instance.reference else erase(encode_with_reference(code), e)
    chi_in = base  # Wh<e> is still a blank pending register
    moved = base.original.relabel({storage_node(e): replacement_node(e)})
    chi_out = replace(base, state=moved, pending={storage_node(e): int(epsilon)}, inaccessible=frozenset())
    cut = [storage_node(j) for j in helpers] + [replacement_node(e)]
    return InfeasibilityCertificate(e, helpers, code.q, chi_in.schmidt_rank(cut), chi_out.schmidt_rank(cut))
