"""Schmidt-rank lower bounds on the entanglement cost of repair.

The states compared are the helper registers ``W_T`` together with the
copies ``W'_T`` produced by ``U_T`` (named ``Wp<j>``) and, after the
transformation, the replacement register ``Wh<e>``.  Every computation uses
the real node labels; the certificate records the relabeling that sends
``e`` to ``n`` and ``T`` to ``1..t``.
"""

from __future__ import annotations

import itertools
import math
import weakref
from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.stats

from .errors import FidelityMismatch, NotADistribution, NotNormalized, NotUnitary, Unsupported, ZeroProjection
from .network import Topology, edge_name, replacement_node, storage_node
from .protocol import encode_with_reference
from .qmds import QmdsCode, extract_helper_unitary
from .qstate import (
    MAX_AMPLITUDES,
    QuditState,
    RegisterLabel,
    SlicedState,
    apply_unitary,
    fidelity,
    is_unitary,
    max_entangled,
    schmidt,
    schmidt_rank,
    tensor,
)

PSI_IN_TOL = 1e-9
ENTROPY_TOL = 1e-7
MAJORIZATION_TOL = 1e-12
DISTRIBUTION_TOL = 1e-9


def copy_label(j: int) -> str:
    return f"Wp{j}"


def _layout(code: QmdsCode, helpers, e: int | None):
    helpers = tuple(sorted(int(j) for j in helpers))
    if len(helpers) != code.t:
        raise Unsupported(f"bounds are certified only for exactly t={code.t} helpers")
    rest = [i for i in range(1, code.n + 1) if i not in helpers]
    if e is None:
        e = rest[-1]
    if e not in rest:
        raise ValueError(f"erased node {e} must lie outside the helper set")
    complement = tuple(i for i in rest if i != e) + (e,)
    return helpers, complement, int(e)


def relabeling(code: QmdsCode, helpers, e: int | None = None) -> dict:
    """Map real node indices to the canonical picture with ``e = n`` and ``T = 1..t``."""
    helpers, complement, e = _layout(code, helpers, e)
    return {old: new for new, old in enumerate(helpers + complement, start=1)}


def build_psi_in(code: QmdsCode, helpers, e: int | None = None) -> QuditState:
    """Apply ``U_T`` to ``R`` and ``W_[n]\\T`` of the reference state and return the result.

    The ``t`` output registers become ``Wp<j>`` for ``j`` in ``T``.  The
    result must equal the product of ``|Q+>`` pairs on ``(W<j>, Wp<j>)``.

    Raises:
        FidelityMismatch: the product form fails, which happens when
            ``U_T U_T^T != I`` (a gauge other than the real one).
    """
    helpers, complement, e = _layout(code, helpers, e)
    hu = extract_helper_unitary(code, helpers, complement)
    phi = encode_with_reference(code).state
    inputs = [f"R{i}" for i in range(1, code.k + 1)] + [storage_node(i) for i in complement]
    out = apply_unitary(phi, hu.matrix, inputs, check=False)
    out = out.regroup(inputs, [RegisterLabel(copy_label(j), code.q) for j in helpers])
    out = QuditState(out.registers, out.amplitudes)
    pairs = tensor([max_entangled(code.q, storage_node(j), copy_label(j)) for j in helpers])
    f = fidelity(out, pairs)
    if f < 1 - PSI_IN_TOL:
        raise FidelityMismatch(f"psi_in has fidelity {f} with the product of maximally entangled pairs")
    return out


def haar_unitary(q: int, rng) -> np.ndarray:
    return scipy.stats.unitary_group.rvs(q, random_state=rng)


def random_gs(code: QmdsCode, seed) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [haar_unitary(code.q, rng) for _ in range(code.n - code.t - 1)]


def build_psi_out(code: QmdsCode, helpers, g_list=None, epsilon=None, e: int | None = None):
    """The state after the transformation, synthesized term by term.

    ``Q**(-t/2) sum_{s,r} U_T|s,r>_{W_T} |r_last>_{Wh<e>} U_T|s, G^dag r', eps>_{W'_T}``
    where ``r'`` drops the last digit of ``r``.  Returned as a
    :class:`QuditState` when it fits under the amplitude cap, otherwise as a
    :class:`SlicedState` over ``Wh<e>``.

    Args:
        g_list: ``n-t-1`` unitaries on one qudit (identity by default).
        epsilon: a qudit state vector (``|0>`` by default).
    """
    helpers, complement, e = _layout(code, helpers, e)
    q, t, n = code.q, code.t, code.n
    m = n - t - 1
    g_list = [np.eye(q)] * m if g_list is None else [np.asarray(g) for g in g_list]
    if len(g_list) != m:
        raise ValueError(f"expected {m} single-qudit unitaries")
    for g in g_list:
        if g.shape != (q, q) or not is_unitary(g):
            raise NotUnitary("every G_i must be a unitary on one qudit")
    eps = np.zeros(q) if epsilon is None else np.asarray(epsilon)
    if epsilon is None:
        eps[0] = 1.0
    if eps.shape != (q,) or abs(np.linalg.norm(eps) - 1) > 1e-10:
        raise ValueError("epsilon must be a normalized qudit vector")

    u = extract_helper_unitary(code, helpers, complement).matrix
    # Columns |s> (x) G_1^dag|r_1> ... (x) |eps>, indexed by (s, r').
    lift = scipy.sparse.identity(code.K, format="csr")
    for g in g_list:
        lift = scipy.sparse.kron(lift, scipy.sparse.csr_array(g.conj().T), format="csr")
    lift = scipy.sparse.kron(lift, scipy.sparse.csr_array(eps.reshape(q, 1)), format="csr")
    v0 = (u @ lift).toarray()  # W'_T amplitudes per (s, r')
    scale = q ** (-t / 2)
    d = q**t
    base = np.arange(d // q) * q  # column (s, r', h) = (s, r') * q + h
    w_regs = [RegisterLabel(storage_node(j), q) for j in helpers]
    p_regs = [RegisterLabel(copy_label(j), q) for j in helpers]
    hat = RegisterLabel(replacement_node(e), q)

    def block(h: int) -> np.ndarray:
        a = u[:, base + h]
        return np.asarray((a @ v0.T) * scale)

    if q ** (2 * t + 1) <= MAX_AMPLITUDES:
        amps = np.stack([block(h) for h in range(q)], axis=1)  # (W_T, Wh, W'_T)
        return QuditState(w_regs + [hat] + p_regs, amps.reshape(-1))
    blocks = [QuditState(w_regs + p_regs, block(h).reshape(-1), normalized=False) for h in range(q)]
    return SlicedState(hat, blocks)


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class CutInequality:
    cut: tuple[str, ...]
    sr_in: int
    edge: str
    sr_out: int
    required: int

    def line(self) -> str:
        return (f"cut={','.join(self.cut)} sr_in={self.sr_in} sr_out={self.sr_out} "
                f"requires log_Q beta >= {self.required}")


@dataclass(frozen=True)
class BoundCertificate:
    kind: str
    e: int
    helpers: tuple[int, ...]
    q: int
    relabel: tuple[tuple[int, int], ...]
    inequalities: tuple[CutInequality, ...]

    @property
    def per_edge(self) -> dict:
        return {ineq.edge: ineq.required for ineq in self.inequalities}

    @property
    def conclusion(self) -> int:
        return sum(ineq.required for ineq in self.inequalities)

    def export(self) -> str:
        mapping = ",".join(f"{a}->{b}" for a, b in self.relabel)
        lines = [f"certificate topology={self.kind} Q={self.q} e={self.e} "
                 f"T={','.join(map(str, self.helpers))} relabel={mapping}"]
        lines += [ineq.line() for ineq in self.inequalities]
        lines.append(f"conclusion EC >= {self.conclusion}")
        return "\n".join(lines) + "\n"


def _required_power(sr_in: int, sr_out: int, q: int) -> int:
    """Smallest ``m`` with ``sr_in * q**m >= sr_out``."""
    m = 0
    while sr_in * q**m < sr_out:
        m += 1
    return m


# Default-choice (identity G, |0> epsilon) cut ranks per code, shared by every topology over the same (e, T).
_RANK_CACHE: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _cut_ranks(code: QmdsCode, helpers, e: int, g_list, epsilon) -> dict:
    """``{(cut registers, node): (sr_in, sr_out)}`` for every helper pair cut and the ``Wh<e>`` cut."""
    cacheable = g_list is None and epsilon is None
    key = (helpers, e)
    if cacheable and key in _RANK_CACHE.get(code, {}):
        return _RANK_CACHE[code][key]
    psi_in = build_psi_in(code, helpers, e)
    psi_out = build_psi_out(code, helpers, g_list, epsilon, e)
    hat = replacement_node(e)
    cuts = [((storage_node(j), copy_label(j)), storage_node(j)) for j in helpers] + [((hat,), hat)]
    ranks = {}
    for regs, node in cuts:
        # the replacement register starts blank, so its input rank is 1
        sr_in = 1 if hat in regs else schmidt_rank(psi_in, list(regs))
        ranks[(regs, node)] = (sr_in, schmidt_rank(psi_out, list(regs)))
    if cacheable:
        _RANK_CACHE.setdefault(code, {})[key] = ranks
    return ranks


def certify_lower_bound(code: QmdsCode, helpers, topology: Topology, *, g_list=None, epsilon=None) -> BoundCertificate:
    """Per-edge lower bounds on ``log_Q beta`` from Schmidt-rank monotonicity.

    Each candidate cut (a helper's pair ``W<j> Wp<j>``, or ``Wh<e>`` alone)
    is used when exactly one network edge crosses it; that edge must carry
    enough dimension to raise the cut's Schmidt rank from its value in
    ``psi_in`` to its value in ``psi_out``.

    Raises:
        Unsupported: for general topologies or a helper count other than ``t``.
    """
    if topology.kind not in ("h1", "h2"):
        raise Unsupported("bound certification covers the two star topologies only")
    helpers, complement, e = _layout(code, helpers, topology.e)
    if tuple(sorted(topology.helpers)) != helpers:
        raise ValueError("topology helper set differs from the requested helpers")
    q = code.q
    ranks = _cut_ranks(code, helpers, e, g_list, epsilon)
    found = []
    for (regs, node), (sr_in, sr_out) in ranks.items():
        crossing = [ed for ed in topology.sorted_edges() if node in ed]
        if len(crossing) != 1:
            continue
        found.append(CutInequality(regs, sr_in, edge_name(crossing[0]), sr_out, _required_power(sr_in, sr_out, q)))
    relabel = tuple(sorted(relabeling(code, helpers, e).items()))
    return BoundCertificate(topology.kind, e, helpers, q, relabel, tuple(found))


# ---------------------------------------------------------------------------
# majorization


def _distribution(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0 or np.any(v < -MAJORIZATION_TOL) or abs(v.sum() - 1) > DISTRIBUTION_TOL:
        raise NotADistribution(f"{name} is not a probability vector")
    return np.sort(np.clip(v, 0, None))[::-1]


def majorizes(sigma, mu) -> bool:
    """True iff every prefix sum of sorted ``sigma`` is at least that of sorted ``mu`` (within 1e-12)."""
    a, b = _distribution(sigma, "sigma"), _distribution(mu, "mu")
    size = max(a.size, b.size)
    a = np.pad(a, (0, size - a.size))
    b = np.pad(b, (0, size - b.size))
    return bool(np.all(np.cumsum(a) >= np.cumsum(b) - MAJORIZATION_TOL))


def nielsen_feasible(lambda_in, lambda_out) -> bool:
    """Whether a bipartite pure state with Schmidt coefficients ``lambda_in`` can reach ``lambda_out`` by LOCC."""
    sq = []
    for v, name in ((lambda_in, "lambda_in"), (lambda_out, "lambda_out")):
        v = np.asarray(v, dtype=float)
        if np.any(v < 0) or abs(np.sum(v**2) - 1) > DISTRIBUTION_TOL:
            raise NotNormalized(f"{name} must be nonnegative with unit sum of squares")
        sq.append(v**2)
    return majorizes(sq[1], sq[0])


# ---------------------------------------------------------------------------
# claim batteries


@dataclass(frozen=True)
class Claim:
    id: str
    anchor: str
    measured: float
    expected: float
    tol: float
    passed: bool


def verify_entropy_table(code: QmdsCode) -> list[Claim]:
    """``S(W_A) = min(|A|, 2t - |A|) log Q`` on the reference state for every nonempty ``A``."""
    phi = encode_with_reference(code).state
    logq = math.log(code.q)
    claims = []
    for size in range(1, code.n + 1):
        for subset in itertools.combinations(range(1, code.n + 1), size):
            names = [storage_node(i) for i in subset]
            if len(names) == len(phi.registers):
                entropy = 0.0
            else:
                entropy = schmidt(phi, names).entropy
            expected = min(size, 2 * code.t - size) * logq
            ok = abs(entropy - expected) <= ENTROPY_TOL
            label = "".join(map(str, subset))
            claims.append(Claim(f"entropy-A{label}", "entropy of W_A", entropy, expected, ENTROPY_TOL, ok))
    return claims


def build_chi(code: QmdsCode, epsilon=None, e: int | None = None) -> tuple[QuditState, float]:
    """Project ``W<e>`` of the reference state onto ``epsilon`` and renormalize; returns ``(chi, weight)``."""
    e = code.n if e is None else int(e)
    phi = encode_with_reference(code).state
    eps = np.zeros(code.q) if epsilon is None else np.asarray(epsilon)
    if epsilon is None:
        eps[0] = 1.0
    # <eps| on W<e> is a partial inner product against a general bra
    t = np.moveaxis(phi.tensor, phi.axis(storage_node(e)), 0)
    rest = np.tensordot(eps.conj(), t, axes=([0], [0])).reshape(-1)
    regs = [r for r in phi.registers if r.name != storage_node(e)]
    weight = float(np.vdot(rest, rest).real)
    if weight < 1e-12:
        raise ZeroProjection("epsilon is orthogonal to the support of the erased register")
    return QuditState(regs, rest / math.sqrt(weight)), weight


def verify_chi_rank(code: QmdsCode, epsilon=None, e: int | None = None) -> list[Claim]:
    """``sr(W_j) = Q`` for every remaining node after projecting ``W<e>`` onto ``epsilon``."""
    e = code.n if e is None else int(e)
    chi, weight = build_chi(code, epsilon, e)
    claims = [Claim("chi-weight", "projection weight 1/Q", weight, 1 / code.q, 1e-9, abs(weight - 1 / code.q) <= 1e-9)]
    for j in range(1, code.n + 1):
        if j == e:
            continue
        sr = schmidt_rank(chi, [storage_node(j)])
        claims.append(Claim(f"chi-sr-W{j}", "sr(W_j) of chi", sr, code.q, 0, sr == code.q))
    return claims

