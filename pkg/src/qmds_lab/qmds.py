"""Quantum MDS codes built from nested GRS pairs.

The code state for logical basis vector ``s`` is the uniform superposition
over the coset ``s @ coset + span(inner)`` written in the computational
basis of ``W1..Wn``.  Logical indices are lexicographic with ``s[0]`` most
significant, matching the register order of ``R1..Rk``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse

from .errors import BudgetExceeded, NotUnitary, ParameterViolation, ResidualTooLarge
from .field import NestedCodePair, make_nested_pair
from .qstate import QuditState, RegisterLabel, trace_distance

GRAM_TOL = 1e-9
DISTANCE_TOL = 1e-8
MARGINAL_TOL = 1e-8
RESIDUAL_TOL = 1e-8
# Distance sweep budget: n, Q and the size of the transition-operator tensor.
MAX_SWEEP_N = 7
MAX_SWEEP_Q = 7
MAX_SWEEP_ENTRIES = 1 << 27


def node_label(i: int) -> str:
    return f"W{i}"


@dataclass(eq=False)
class QmdsCode:
    """An ``[[n, 2t-n]]_Q`` code given by its ``K = Q**k`` code states.

    ``states`` has shape ``(K, Q**n)``; row ``s`` is the encoding of logical
    basis state ``s``.  ``pair`` is set for codes built from GRS data;
    ``parent`` records ``(code, T)`` for codes derived with
    :func:`derive_small_code`.
    """

    q: int
    n: int
    t: int
    states: np.ndarray = field(repr=False)
    pair: NestedCodePair | None = field(default=None, repr=False)
    parent: tuple | None = field(default=None, repr=False)
    _helpers: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return 2 * self.t - self.n

    @property
    def K(self) -> int:
        return self.q**self.k

    @property
    def design_distance(self) -> int:
        return self.n - self.t + 1

    @cached_property
    def registers(self) -> tuple[RegisterLabel, ...]:
        return tuple(RegisterLabel(node_label(i), self.q) for i in range(1, self.n + 1))

    def state(self, s: int) -> QuditState:
        return QuditState(self.registers, self.states[s])

    def encode(self, coefficients) -> QuditState:
        """Encoded state ``sum_s c_s |phi_s>`` for normalized logical coefficients."""
        c = np.asarray(coefficients)
        if c.shape != (self.K,):
            raise ValueError(f"expected {self.K} logical coefficients")
        return QuditState(self.registers, c @ self.states)

    def name(self) -> str:
        return f"[[{self.n},{self.k}]]_{self.q}"

    def __repr__(self):
        return f"QmdsCode({self.name()}, t={self.t})"


def build_code(pair: NestedCodePair) -> QmdsCode:
    """CSS-style code states ``Q**(-(n-t)/2) sum_u |s B + u G_inner>``."""
    if not isinstance(pair, NestedCodePair):
        raise ParameterViolation("build_code expects a NestedCodePair")
    q, n, t = pair.field.p, pair.n, pair.t
    k = 2 * t - n
    inner_words = pair.inner.codewords()
    place = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
    states = np.zeros((q**k, q**n), dtype=np.float64)
    amp = q ** (-(n - t) / 2)
    for s_idx, s in enumerate(itertools.product(range(q), repeat=k)):
        shift = (np.asarray(s, dtype=np.int64) @ pair.coset) % q if k else np.zeros(n, dtype=np.int64)
        words = (inner_words + shift) % q
        idx = words @ place
        if np.unique(idx).size != idx.size:
            raise ParameterViolation("coset words collide; inner code is degenerate")
        states[s_idx, idx] = amp
    states.setflags(write=False)
    return QmdsCode(q, n, t, states, pair=pair)


def make_code(q: int, n: int, t: int, points=None, multipliers=None) -> QmdsCode:
    return build_code(make_nested_pair(q, n, t, points, multipliers))


def gram_matrix(code: QmdsCode) -> np.ndarray:
    return code.states.conj() @ code.states.T


# ---------------------------------------------------------------------------
# distance verification


@dataclass
class DistanceReport:
    distance: int
    verified_weight: int
    checks: int
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.witness is None


def _shift_table(q: int, w: int) -> np.ndarray:
    """``table[a, c]`` = flat index of digitwise ``c + a (mod q)`` over ``w`` digits."""
    digits = np.array(list(itertools.product(range(q), repeat=w)), dtype=np.int64).reshape(-1, w)
    place = q ** np.arange(w - 1, -1, -1, dtype=np.int64)
    return (((digits[:, None, :] + digits[None, :, :]) % q) @ place).astype(np.int64)


def pauli_expectations(states: np.ndarray, q: int, n: int, subset) -> np.ndarray:
    """All matrix elements ``<phi_i| X^a Z^b (x) I |phi_j>`` for Paulis supported on ``subset``.

    Returns an array ``E[i, j, a, b]`` with ``a``, ``b`` flat indices over
    ``len(subset)`` digits.  It is computed from the transition operators
    ``Tr_rest |phi_j><phi_i|`` by a discrete Weyl transform.
    """
    w = len(subset)
    kk = states.shape[0]
    rest = [i for i in range(n) if i not in subset]
    tens = states.reshape((kk,) + (q,) * n).transpose([0] + [i + 1 for i in subset] + [i + 1 for i in rest])
    y = np.ascontiguousarray(tens).reshape(kk * q**w, q ** (n - w))
    g = y @ y.conj().T
    # g[(j, c), (i, d)] = sum_rest phi_j[c] conj(phi_i[d]) = sigma_ij[c, d]
    sigma = g.reshape(kk, q**w, kk, q**w).transpose(2, 0, 1, 3)
    table = _shift_table(q, w)
    cols = np.arange(q**w)
    diag = sigma[:, :, cols[None, :], table]  # [i, j, a, c] = sigma_ij[c, c + a]
    diag = diag.reshape((kk, kk, q**w) + (q,) * w)
    axes = tuple(range(3, 3 + w))
    out = np.fft.ifftn(diag, axes=axes) * q**w
    return out.reshape(kk, kk, q**w, q**w)


def verify_distance(code: QmdsCode, *, tol: float = DISTANCE_TOL, max_weight: int | None = None) -> DistanceReport:
    """Sweep generalized Paulis of weight ``1..n-t`` and check the distance conditions.

    For ``K > 1`` every ``<phi_i|G|phi_j>`` must equal ``c(G) delta_ij`` with
    ``c(G)`` read from ``i = j = 0``; for ``K = 1`` the expectation must equal
    ``Q**-n Tr(G)``, which is zero for every non-identity Pauli.  Paulis span
    all operators on a subset, so this covers arbitrary ``G``.

    Returns the largest weight ``w`` for which every check passed as
    ``distance = w + 1``, plus the first failing witness if any.
    """
    q, n, kk = code.q, code.n, code.K
    top = code.n - code.t if max_weight is None else max_weight
    if n > MAX_SWEEP_N or q > MAX_SWEEP_Q or kk**2 * q ** (2 * top) > MAX_SWEEP_ENTRIES:
        raise BudgetExceeded(f"distance sweep for {code.name()} up to weight {top} exceeds the budget")
    checks = 0
    verified = 0
    eye = np.eye(kk)
    for w in range(1, top + 1):
        for subset in itertools.combinations(range(n), w):
            e = pauli_expectations(code.states, q, n, list(subset))
            e[:, :, 0, 0] = 0  # identity: <phi_i|phi_j> = delta_ij, checked by the Gram matrix
            if kk > 1:
                c = e[0, 0]
                expected = eye[:, :, None, None] * c[None, None]
            else:
                expected = np.zeros_like(e)
            dev = np.abs(e - expected)
            checks += dev.size - kk * kk
            worst = np.unravel_index(int(np.argmax(dev)), dev.shape)
            if dev[worst] > tol:
                i, j, a, b = (int(v) for v in worst)
                digits = lambda x: tuple(int(d) for d in np.unravel_index(x, (q,) * w))  # noqa: E731
                witness = {
                    "subset": tuple(s + 1 for s in subset),
                    "x_powers": digits(a),
                    "z_powers": digits(b),
                    "element": (i, j),
                    "value": complex(e[worst]),
                    "expected": complex(expected[worst]),
                }
                return DistanceReport(verified + 1, verified, checks, witness)
        verified = w
    return DistanceReport(verified + 1, verified, checks)


def verify_marginals(code: QmdsCode, size: int | None = None) -> tuple[float, tuple]:
    """Largest trace distance between any ``size``-register marginal of any code state and ``I/Q**size``.

    Returns ``(deviation, (state index, subset))`` for the worst case.
    """
    q, n = code.q, code.n
    size = code.n - code.t if size is None else size
    target = np.eye(q**size) / q**size
    worst, where = 0.0, None
    for subset in itertools.combinations(range(n), size):
        rest = [i for i in range(n) if i not in subset]
        for s in range(code.K):
            tens = code.states[s].reshape((q,) * n).transpose(list(subset) + rest).reshape(q**size, -1)
            rho = tens @ tens.conj().T
            d = trace_distance(rho, target)
            if where is None or d > worst:
                worst, where = d, (s, tuple(i + 1 for i in subset))
    return worst, where


# ---------------------------------------------------------------------------
# helper-set unitaries


@dataclass(frozen=True, eq=False)
class HelperUnitary:
    """``U_T`` with column index ``s * Q**(n-t) + r`` (``s`` major).

    ``helpers`` lists the node indices of ``W_T`` in output-register order
    and ``complement`` the nodes of ``W_[n]\\T`` in the order of ``r``'s
    digits.  ``matrix`` is a scipy CSR matrix.
    """

    helpers: tuple[int, ...]
    complement: tuple[int, ...]
    matrix: scipy.sparse.csr_array = field(repr=False)
    residual: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def column(self, index: int) -> np.ndarray:
        return self.matrix[:, [index]].toarray().reshape(-1)


def extract_helper_unitary(code: QmdsCode, helpers, complement=None) -> HelperUnitary:
    """Read ``U_T`` off the code states by contracting ``<r|`` on ``W_[n]\\T``.

    Args:
        helpers: the helper node indices ``T`` (1-based), ``|T| = t``; the
            output registers of ``U_T`` follow this order.
        complement: order of the remaining nodes (default ascending).

    Raises:
        NotUnitary: the columns are not orthonormal (input is not QMDS).
        ResidualTooLarge: re-encoding with ``U_T`` does not give back the code states.
    """
    q, n, t = code.q, code.n, code.t
    helpers = tuple(int(h) for h in helpers)
    if len(helpers) != t or len(set(helpers)) != t or not set(helpers) <= set(range(1, n + 1)):
        raise ParameterViolation(f"helper set {helpers} must be {t} distinct nodes of 1..{n}")
    if complement is None:
        complement = tuple(i for i in range(1, n + 1) if i not in helpers)
    complement = tuple(int(c) for c in complement)
    if sorted(helpers + complement) != list(range(1, n + 1)):
        raise ParameterViolation("helpers and complement must partition the nodes")
    key = (helpers, complement)
    if key in code._helpers:
        return code._helpers[key]

    d_t, d_r = q**t, q ** (n - t)
    perm = [h - 1 for h in helpers] + [c - 1 for c in complement]
    scale = math.sqrt(d_r)
    blocks = []
    for s in range(code.K):
        blk = code.states[s].reshape((q,) * n).transpose(perm).reshape(d_t, d_r) * scale
        blocks.append(scipy.sparse.csc_array(np.where(np.abs(blk) > 1e-14, blk, 0)))
    u = scipy.sparse.hstack(blocks, format="csr")

    gram = (u.conj().T @ u - scipy.sparse.identity(d_t, format="csr")).tocoo()
    if gram.nnz and float(np.max(np.abs(gram.data))) > GRAM_TOL:
        raise NotUnitary(f"columns of U_T for T={helpers} are not orthonormal; input is not a QMDS code")

    # Re-encode each code state from U_T and compare with the stored one.
    inv = np.argsort(perm)
    residual = 0.0
    for s in range(code.K):
        blk = u[:, s * d_r : (s + 1) * d_r].toarray() / scale
        recon = blk.reshape((q,) * n).transpose(inv).reshape(-1)
        residual = max(residual, float(np.max(np.abs(recon - code.states[s]))))
    if residual > RESIDUAL_TOL:
        raise ResidualTooLarge(f"reconstruction residual {residual} for T={helpers}")
    helper = HelperUnitary(helpers, complement, u, residual)
    code._helpers[key] = helper
    return helper


def derive_small_code(code: QmdsCode, helpers, complement=None) -> QmdsCode:
    """The ``[[t+1, t-1]]_Q`` code ``Q**-1/2 sum_r U_T(|s>|r>) (x) |r>``.

    Register ``W_i`` of the result (``i <= t``) is the ``i``-th output of
    ``U_T``; ``W_{t+1}`` holds the copy of ``r``.
    """
    hu = extract_helper_unitary(code, helpers, complement)
    q, t = code.q, code.t
    u = hu.matrix
    states = np.empty((q ** (t - 1), q ** (t + 1)), dtype=np.result_type(u.dtype, np.float64))
    for s in range(q ** (t - 1)):
        blk = u[:, s * q : (s + 1) * q].toarray() / math.sqrt(q)  # rows: W_T, columns: r
        states[s] = blk.reshape(-1)
    states.setflags(write=False)
    return QmdsCode(q, t + 1, t, states, parent=(code, hu.helpers))


# ---------------------------------------------------------------------------
# descriptor files


def format_descriptor(code: QmdsCode) -> str:
    if code.pair is None:
        raise ParameterViolation("only codes built from GRS data have a descriptor")
    pair = code.pair
    return (
        f"qmds v1; Q={code.q}; n={code.n}; t={code.t}; "
        f"points={','.join(map(str, pair.outer.points))}; "
        f"multipliers={','.join(map(str, pair.outer.multipliers))}\n"
    )


def parse_descriptor(text: str) -> dict:
    parts = [p.strip() for p in text.strip().split(";")]
    if parts[0] != "qmds v1":
        raise ValueError(f"unsupported descriptor header {parts[0]!r}")
    fields = {}
    for p in parts[1:]:
        key, _, val = p.partition("=")
        fields[key.strip()] = val.strip()
    return {
        "q": int(fields["Q"]),
        "n": int(fields["n"]),
        "t": int(fields["t"]),
        "points": tuple(int(x) for x in fields["points"].split(",")),
        "multipliers": tuple(int(x) for x in fields["multipliers"].split(",")),
    }


def load_descriptor(text: str) -> QmdsCode:
    d = parse_descriptor(text)
    return make_code(d["q"], d["n"], d["t"], d["points"], d["multipliers"])
