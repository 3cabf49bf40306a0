"""Dense state vectors over labeled qudit registers.

A :class:`QuditState` is immutable: every operation returns a new state.
Registers are addressed by name; the amplitude vector is stored flat in
row-major order of the register list (first register most significant).
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse

from .errors import (
    BadDim,
    BadPartition,
    DimensionMismatch,
    DuplicateLabel,
    LabelMismatch,
    NotUnitary,
    OutOfRange,
    ResourceTooSmall,
    SizeCap,
)

MAX_AMPLITUDES = 2**24
NORM_TOL = 1e-10
UNITARY_TOL = 1e-9
RANK_TOL = 1e-8
# Columns below this norm are skipped by the Schmidt routines.  The induced
# perturbation of every singular value is at most sqrt(#columns) * 1e-15,
# i.e. < 1e-11 for any state under the amplitude cap.
_NEGLIGIBLE_COLUMN = 1e-15
DUMP_THRESHOLD = 1e-12


@dataclass(frozen=True, order=True)
class RegisterLabel:
    name: str
    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise BadDim(f"register {self.name!r} has dimension {self.dim}")

    def __str__(self):
        return self.name


def _check_size(total: int) -> None:
    if total > MAX_AMPLITUDES:
        raise SizeCap(f"{total} amplitudes exceed the cap of {MAX_AMPLITUDES}")


class QuditState:
    """Pure state on an ordered tuple of :class:`RegisterLabel`.

    Args:
        registers: register labels, unique by name.
        amplitudes: flat vector of length ``prod(dims)``.
        normalized: when true (the default) the 2-norm must be 1 within 1e-10.
    """

    __slots__ = ("registers", "amplitudes", "_index")

    def __init__(self, registers: Sequence[RegisterLabel], amplitudes, *, normalized: bool = True):
        registers = tuple(registers)
        names = [r.name for r in registers]
        if len(set(names)) != len(names):
            raise DuplicateLabel(f"duplicate register names in {names}")
        total = math.prod(r.dim for r in registers)
        _check_size(total)
        amps = np.asarray(amplitudes)
        if not np.iscomplexobj(amps) and amps.dtype != np.float64:
            amps = amps.astype(np.float64)
        elif np.iscomplexobj(amps) and amps.dtype != np.complex128:
            amps = amps.astype(np.complex128)
        amps = amps.reshape(-1)
        if amps.size != total:
            raise DimensionMismatch(f"{amps.size} amplitudes for register dims product {total}")
        if normalized:
            nrm = np.linalg.norm(amps)
            if abs(nrm - 1.0) > NORM_TOL:
                raise ValueError(f"state norm {nrm!r} differs from 1")
        amps.setflags(write=False)
        self.registers = registers
        self.amplitudes = amps
        self._index = {r.name: i for i, r in enumerate(registers)}

    # basic accessors ---------------------------------------------------

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(r.dim for r in self.registers)

    @property
    def size(self) -> int:
        return self.amplitudes.size

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims) if self.registers else self.amplitudes.reshape(())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def register(self, name) -> RegisterLabel:
        return self.registers[self.axis(name)]

    def axis(self, name) -> int:
        key = name.name if isinstance(name, RegisterLabel) else name
        try:
            return self._index[key]
        except KeyError:
            raise BadPartition(f"register {key!r} not in state {self.labels}") from None

    def axes(self, names: Iterable) -> list[int]:
        out = [self.axis(n) for n in names]
        if len(set(out)) != len(out):
            raise BadPartition("register listed twice")
        return out

    def __contains__(self, name) -> bool:
        key = name.name if isinstance(name, RegisterLabel) else name
        return key in self._index

    def __repr__(self):
        regs = ", ".join(f"{r.name}:{r.dim}" for r in self.registers)
        return f"QuditState([{regs}])"

    # constructors / rearrangements -------------------------------------

    @classmethod
    def basis(cls, registers: Sequence[RegisterLabel], values: Sequence[int]) -> QuditState:
        registers = tuple(registers)
        dims = tuple(r.dim for r in registers)
        if len(values) != len(dims) or any(not 0 <= v < d for v, d in zip(values, dims)):
            raise OutOfRange(f"basis values {values} out of range for dims {dims}")
        total = math.prod(dims)
        _check_size(total)
        amps = np.zeros(total, dtype=np.float64)
        amps[np.ravel_multi_index(tuple(values), dims) if dims else 0] = 1.0
        return cls(registers, amps)

    def normalized(self) -> QuditState:
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return QuditState(self.registers, self.amplitudes / nrm)

    def relabel(self, mapping: dict) -> QuditState:
        """Rename registers; ``mapping`` maps old names to new names."""
        regs = [RegisterLabel(mapping.get(r.name, r.name), r.dim) for r in self.registers]
        return QuditState(regs, self.amplitudes, normalized=False)

    def permuted(self, order: Sequence) -> QuditState:
        """Reorder registers to ``order`` (names); amplitudes are transposed accordingly."""
        ax = self.axes(order)
        if len(ax) != len(self.registers):
            raise LabelMismatch(f"order {list(order)} is not a permutation of {self.labels}")
        data = np.ascontiguousarray(self.tensor.transpose(ax)).reshape(-1)
        return QuditState([self.registers[i] for i in ax], data, normalized=False)

    def regroup(self, old: Sequence, new: Sequence[RegisterLabel]) -> QuditState:
        """Replace the registers ``old`` by ``new`` with identical total dimension.

        The new registers take the position of the first old register; the
        joint index of ``old`` (in the given order) is reinterpreted as the
        joint index of ``new``.
        """
        ax = self.axes(old)
        d_old = math.prod(self.registers[i].dim for i in ax)
        d_new = math.prod(r.dim for r in new)
        if d_old != d_new:
            raise DimensionMismatch(f"cannot regroup dimension {d_old} into {d_new}")
        rest = [i for i in range(len(self.registers)) if i not in ax]
        pos = min(ax) if ax else 0
        before = [i for i in rest if i < pos]
        after = [i for i in rest if i > pos]
        data = np.ascontiguousarray(self.tensor.transpose(before + ax + after)).reshape(-1)
        regs = [self.registers[i] for i in before] + list(new) + [self.registers[i] for i in after]
        return QuditState(regs, data, normalized=False)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) <= tol

    # text dump ---------------------------------------------------------

    def dump(self) -> str:
        lines = [f"qstate v1; labels={','.join(self.labels)}; dims={','.join(map(str, self.dims))}"]
        amps = self.amplitudes
        for idx in np.nonzero(np.abs(amps) > DUMP_THRESHOLD)[0]:
            a = complex(amps[idx])
            lines.append(f"{idx} {a.real:.17g} {a.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str, *, normalized: bool = True) -> QuditState:
        lines = [ln for ln in text.strip().splitlines() if ln.strip()]
        fields = {}
        head = [part.strip() for part in lines[0].split(";")]
        if head[0] != "qstate v1":
            raise ValueError(f"unsupported header {lines[0]!r}")
        for part in head[1:]:
            key, _, val = part.partition("=")
            fields[key.strip()] = val.strip()
        names = fields["labels"].split(",") if fields["labels"] else []
        dims = [int(d) for d in fields["dims"].split(",")] if fields["dims"] else []
        regs = [RegisterLabel(n, d) for n, d in zip(names, dims)]
        total = math.prod(dims)
        _check_size(total)
        amps = np.zeros(total, dtype=np.complex128)
        for ln in lines[1:]:
            i, re, im = ln.split()
            amps[int(i)] = complex(float(re), float(im))
        return cls(regs, amps, normalized=normalized)


def _label(x, dim: int | None = None) -> RegisterLabel:
    if isinstance(x, RegisterLabel):
        return x
    if dim is None:
        raise BadDim(f"no dimension given for register {x!r}")
    return RegisterLabel(str(x), int(dim))


# ---------------------------------------------------------------------------
# constructors


def tensor(states: Sequence[QuditState]) -> QuditState:
    """Kronecker product; register lists are concatenated in order."""
    states = list(states)
    if not states:
        raise ValueError("tensor of an empty list")
    regs = [r for s in states for r in s.registers]
    names = [r.name for r in regs]
    if len(set(names)) != len(names):
        raise DuplicateLabel(f"registers overlap: {names}")
    _check_size(math.prod(r.dim for r in regs))
    amps = states[0].amplitudes
    for s in states[1:]:
        amps = np.multiply.outer(amps, s.amplitudes).reshape(-1)
    return QuditState(regs, amps, normalized=all(s.is_normalized() for s in states))


def max_entangled(dim: int, a, b) -> QuditState:
    """``|M+> = M**-0.5 * sum_i |i>_a |i>_b``."""
    dim = int(dim)
    if dim < 2:
        raise BadDim(f"maximally entangled state needs dim >= 2, got {dim}")
    ra, rb = _label(a, dim), _label(b, dim)
    if ra.dim != dim or rb.dim != dim:
        raise BadDim("register dimensions must equal M")
    amps = np.eye(dim, dtype=np.float64).reshape(-1) / math.sqrt(dim)
    return QuditState([ra, rb], amps)


def product_basis(registers: Sequence[RegisterLabel], values: Sequence[int]) -> QuditState:
    return QuditState.basis(registers, values)


# ---------------------------------------------------------------------------
# operators


def generalized_pauli(q: int, a: int, b: int) -> np.ndarray:
    """``X**a @ Z**b`` with ``X|j> = |j+1>`` and ``Z|j> = w**j |j>``, ``w = exp(2 pi i / q)``."""
    q = int(q)
    if q < 2:
        raise BadDim(f"q must be >= 2, got {q}")
    if not (0 <= a < q and 0 <= b < q):
        raise OutOfRange(f"(a, b) = ({a}, {b}) out of range for q = {q}")
    j = np.arange(q)
    mat = np.zeros((q, q), dtype=np.complex128)
    mat[(j + a) % q, j] = np.exp(2j * np.pi * b * j / q)
    return mat


def shift(q: int, a: int) -> np.ndarray:
    return generalized_pauli(q, a % q, 0)


def clock(q: int, b: int) -> np.ndarray:
    return generalized_pauli(q, 0, b % q)


def is_unitary(u, tol: float = UNITARY_TOL) -> bool:
    if scipy.sparse.issparse(u):
        d = u.shape[0]
        diff = (u.conj().T @ u - scipy.sparse.identity(d, format="csr")).tocoo()
        return diff.nnz == 0 or float(np.max(np.abs(diff.data))) <= tol
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


def apply_unitary(state: QuditState, u, targets: Sequence, *, check: bool = True) -> QuditState:
    """Apply ``u`` (dense array or scipy sparse matrix) to ``targets``.

    The joint index of the targets follows the order given in ``targets``;
    identity acts elsewhere and the register order of ``state`` is kept.
    """
    ax = state.axes(targets)
    if not ax:
        raise BadPartition("no target registers")
    dim = math.prod(state.registers[i].dim for i in ax)
    if u.shape != (dim, dim):
        raise DimensionMismatch(f"operator shape {u.shape} does not match target dimension {dim}")
    if check and not is_unitary(u):
        raise NotUnitary("operator is not unitary within 1e-9")
    nreg = len(state.registers)
    rest = [i for i in range(nreg) if i not in ax]
    mat = state.tensor.transpose(ax + rest).reshape(dim, -1)
    out = u @ mat
    if scipy.sparse.issparse(out):
        out = out.toarray()
    out = np.asarray(out).reshape([state.registers[i].dim for i in ax + rest])
    out = np.ascontiguousarray(out.transpose(np.argsort(ax + rest))).reshape(-1)
    return QuditState(state.registers, out, normalized=False)


# ---------------------------------------------------------------------------
# Schmidt analysis


@dataclass(frozen=True)
class SchmidtData:
    coefficients: np.ndarray
    rank: int
    entropy: float

    def entropy_in(self, base: float) -> float:
        """Entropy in units of ``log(base)``."""
        return self.entropy / math.log(base)


def _cut_matrix(state: QuditState, part: Sequence) -> np.ndarray:
    ax = state.axes(part)
    if not ax or len(ax) >= len(state.registers):
        raise BadPartition(f"{list(part)} is not a nonempty proper subset of {state.labels}")
    rest = [i for i in range(len(state.registers)) if i not in ax]
    da = math.prod(state.registers[i].dim for i in ax)
    return state.tensor.transpose(ax + rest).reshape(da, -1)


def _wide(mat: np.ndarray) -> np.ndarray:
    return mat if mat.shape[0] <= mat.shape[1] else mat.T


def _significant_columns(mat: np.ndarray) -> np.ndarray:
    norms = np.einsum("ij,ij->j", mat.conj(), mat).real if np.iscomplexobj(mat) else np.einsum("ij,ij->j", mat, mat)
    keep = norms > _NEGLIGIBLE_COLUMN**2
    if keep.all():
        return mat
    return mat[:, keep]


def _monomial_singular_values(mat: np.ndarray) -> np.ndarray | None:
    """Exact singular values when every column (or every row) has at most one nonzero.

    Then ``mat @ mat^H`` (or ``mat^H @ mat``) is diagonal and the singular
    values are the norms of the row (column) groups.  Entries below
    ``_NEGLIGIBLE_COLUMN`` count as zero.  Returns ``None`` otherwise.
    """
    support = np.abs(mat) > _NEGLIGIBLE_COLUMN
    sq = np.abs(mat) ** 2
    if np.all(np.count_nonzero(support, axis=0) <= 1):
        weights = sq.sum(axis=1)
    elif np.all(np.count_nonzero(support, axis=1) <= 1):
        weights = sq.sum(axis=0)
    else:
        return None
    return np.sort(np.sqrt(weights[weights > 0]))[::-1]


def _singular_values(mat: np.ndarray) -> np.ndarray:
    """Singular values of a matrix, descending, computed stably.

    Wide matrices are reduced to a square triangular factor by QR of the
    (conjugate) transpose before the SVD.
    """
    fast = _monomial_singular_values(mat)
    if fast is not None:
        return fast
    mat = _significant_columns(_wide(mat))
    rows, cols = mat.shape
    if cols == 0:
        return np.zeros(0)
    if cols > 2 * rows:
        r = scipy.linalg.qr(mat.conj().T, mode="r", check_finite=False)[0]
        mat = r[:rows]
    return scipy.linalg.svd(mat, compute_uv=False, check_finite=False, lapack_driver="gesdd")


def schmidt(state: QuditState, part: Sequence, *, tol: float = RANK_TOL) -> SchmidtData:
    """Schmidt coefficients of ``state`` across ``part`` versus the rest.

    ``rank`` counts coefficients above ``tol``; ``entropy`` is in nats with
    ``0 log 0 = 0``.
    """
    mat = _cut_matrix(state, part)
    n_coeff = min(mat.shape)
    sv = _singular_values(mat)
    coeffs = np.zeros(n_coeff)
    coeffs[: sv.size] = sv[:n_coeff]
    coeffs = np.sort(coeffs)[::-1]
    probs = coeffs**2
    nz = probs[probs > 0]
    entropy = float(-np.sum(nz * np.log(nz)))
    return SchmidtData(coeffs, int(np.count_nonzero(coeffs > tol)), entropy)


def _rank_of_columns(rows: int, chunks: Iterable[np.ndarray], tol: float) -> int:
    """Numerical rank of the matrix whose column blocks are ``chunks``.

    An upper-triangular factor is accumulated by QR; the scan stops as soon
    as the rank reaches ``rows`` (adding columns cannot lower singular values).
    """
    acc = None
    rank = 0
    for chunk in chunks:
        chunk = _significant_columns(chunk)
        if chunk.shape[1] == 0:
            continue
        block = chunk.conj().T
        stacked = block if acc is None else np.vstack([acc, block])
        acc = scipy.linalg.qr(stacked, mode="r", check_finite=False)[0][: min(rows, stacked.shape[0])]
        sv = scipy.linalg.svd(acc, compute_uv=False, check_finite=False)
        rank = int(np.count_nonzero(sv > tol))
        if rank == rows:
            break
    return rank


def _column_chunks(mat: np.ndarray) -> Iterator[np.ndarray]:
    rows, cols = mat.shape
    # Largest columns first; full rank is usually certified by a small prefix.
    norms = np.einsum("ij,ij->j", mat.conj(), mat).real
    order = np.argsort(-norms, kind="stable")
    order = order[norms[order] > _NEGLIGIBLE_COLUMN**2]
    for sl in _column_slices(order.size, rows):
        yield mat[:, order[sl]]


def _column_slices(cols: int, rows: int) -> Iterator[slice]:
    """Geometrically growing column windows, each capped at about 2**22 entries."""
    start, width = 0, 4 * rows
    cap = max(4 * rows, (1 << 22) // max(rows, 1))
    while start < cols:
        yield slice(start, start + width)
        start += width
        width = min(width * 4, cap)


def schmidt_rank(state, part: Sequence, *, tol: float = RANK_TOL) -> int:
    """Schmidt rank of ``state`` across ``part``; accepts :class:`SlicedState` too."""
    if isinstance(state, SlicedState):
        return state.schmidt_rank(part, tol=tol)
    mat = _wide(_cut_matrix(state, part))
    fast = _monomial_singular_values(mat)
    if fast is not None:
        return int(np.count_nonzero(fast > tol))
    return _rank_of_columns(mat.shape[0], _column_chunks(mat), tol)


def reduced_density(state: QuditState, part: Sequence) -> np.ndarray:
    mat = _cut_matrix(state, part)
    return mat @ mat.conj().T


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))


# ---------------------------------------------------------------------------
# measurement-like operations


def partial_inner(state: QuditState, values: Sequence[int], registers: Sequence) -> tuple[QuditState, float]:
    """Contract ``<values|`` on ``registers``; returns the residual vector and its squared norm."""
    ax = state.axes(registers)
    if not ax:
        raise BadPartition("no registers to contract")
    values = list(values)
    if len(values) != len(ax):
        raise BadPartition("one basis value per register is required")
    for v, i in zip(values, ax):
        if not 0 <= v < state.registers[i].dim:
            raise OutOfRange(f"value {v} out of range for register {state.registers[i]}")
    index = [slice(None)] * len(state.registers)
    for v, i in zip(values, ax):
        index[i] = v
    rest = np.ascontiguousarray(state.tensor[tuple(index)]).reshape(-1)
    regs = [r for i, r in enumerate(state.registers) if i not in ax]
    out = QuditState(regs, rest, normalized=False)
    return out, float(np.vdot(rest, rest).real)


class Measurement(NamedTuple):
    outcome: tuple[int, ...]
    state: QuditState
    probability: float


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def measure_computational(state: QuditState, registers: Sequence, rng_seed=None, *,
                          outcome: Sequence[int] | None = None, discard: bool = False) -> Measurement:
    """Computational-basis measurement with Born-rule sampling.

    ``rng_seed`` is an int seed or a ``numpy.random.Generator``.  Passing
    ``outcome`` selects that branch instead of sampling.  Measured registers
    stay in the post-state (collapsed) unless ``discard`` is set.
    """
    ax = state.axes(registers)
    if not ax:
        raise BadPartition("no registers to measure")
    dims = [state.registers[i].dim for i in ax]
    rest = [i for i in range(len(state.registers)) if i not in ax]
    t = state.tensor.transpose(ax + rest).reshape(math.prod(dims), -1)
    probs = np.einsum("ij,ij->i", t.conj(), t).real
    probs = probs / probs.sum()
    if outcome is None:
        flat = int(_rng(rng_seed).choice(probs.size, p=probs))
        outcome = tuple(int(v) for v in np.unravel_index(flat, dims))
    else:
        outcome = tuple(int(v) for v in outcome)
        flat = int(np.ravel_multi_index(outcome, dims))
    prob = float(probs[flat])
    if prob <= 0:
        raise ValueError(f"outcome {outcome} has zero probability")
    residual, weight = partial_inner(state, outcome, registers)
    post = QuditState(residual.registers, residual.amplitudes / math.sqrt(weight))
    if not discard:
        kept = [state.registers[i] for i in ax]
        post = tensor([QuditState.basis(kept, outcome), post]).permuted(state.labels)
    return Measurement(outcome, post, prob)


def teleport(state: QuditState, source, resource: tuple, *, dim: int | None = None,
             log: list | None = None, outcome: tuple[int, int] | None = None, rng=None) -> QuditState:
    """Teleport register ``source`` to ``resource[1]`` through a fresh ``|M+>`` on ``resource``.

    The Bell measurement on ``(source, resource[0])`` uses the basis
    ``|b_xz> = M**-0.5 sum_j w**(j z) |j>|j+x>``; projecting the joint state
    (with the resource pair contracted in closed form) leaves
    ``X**x Z**-z`` applied to the source contents on the receiving register,
    which is then undone with ``Z**z X**-x``.  The two classical symbols
    ``(x, z)`` are appended to ``log``.  The receiving register replaces
    ``source`` in the register order.

    Args:
        dim: resource dimension M (defaults to the source dimension).
        outcome: force a measurement branch instead of sampling with ``rng``.
    """
    ax = state.axis(source)
    src = state.registers[ax]
    m = src.dim if dim is None else int(dim)
    if m < src.dim:
        raise ResourceTooSmall(f"resource dimension {m} < source dimension {src.dim}")
    name_a, name_b = (r.name if isinstance(r, RegisterLabel) else str(r) for r in resource)
    if name_b in state and name_b != src.name:
        raise DuplicateLabel(f"receiving register {name_b!r} already present")

    t = np.moveaxis(state.tensor, ax, 0)
    if m > src.dim:
        pad = np.zeros((m - src.dim,) + t.shape[1:], dtype=t.dtype)
        t = np.concatenate([t, pad], axis=0)
    if outcome is None:
        # Every branch has probability |psi|^2 / M^2 for a fresh maximally entangled resource.
        flat = int(_rng(rng).integers(m * m))
        outcome = divmod(flat, m)
    x, z = (int(v) for v in outcome)
    if not (0 <= x < m and 0 <= z < m):
        raise OutOfRange(f"teleport outcome {outcome} out of range")
    phase = np.exp(-2j * np.pi * z * np.arange(m) / m).reshape((m,) + (1,) * (t.ndim - 1))
    branch = np.roll(t * phase, x, axis=0) / m
    weight = float(np.vdot(branch, branch).real)
    if abs(weight - state.norm() ** 2 / m**2) > 1e-9:
        raise ArithmeticError("teleportation branch weight inconsistent with a maximally entangled resource")
    if log is not None:
        log.append((x, z))
    # Correction Z^z X^-x on the receiving register.
    corr = clock(m, z) @ shift(m, -x)
    fixed = np.tensordot(corr, branch, axes=([1], [0])) * m
    if m > src.dim:
        leak = np.linalg.norm(fixed[src.dim :])
        if leak > 1e-9:
            raise ArithmeticError(f"teleported state leaked outside the source subspace ({leak})")
        fixed = fixed[: src.dim]
    fixed = np.ascontiguousarray(np.moveaxis(fixed, 0, ax)).reshape(-1)
    regs = list(state.registers)
    regs[ax] = RegisterLabel(name_b, src.dim)
    return QuditState(regs, fixed, normalized=False)


def fidelity(s1: QuditState, s2: QuditState) -> float:
    """``|<s1|s2>|**2`` after aligning register order by name."""
    if sorted(s1.registers) != sorted(s2.registers):
        raise LabelMismatch(f"register sets differ: {s1.labels} vs {s2.labels}")
    a = s1.permuted(sorted(s1.labels))
    b = s2.permuted(sorted(s2.labels))
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


# ---------------------------------------------------------------------------
# states stored as slices over one register


class SlicedState:
    """``sum_h |h>_register (x) blocks[h]`` with every block a dense :class:`QuditState`.

    Used for states whose full amplitude vector would exceed the cap; each
    block stays under it.  Blocks share one register list and are not
    individually normalized.
    """

    def __init__(self, register: RegisterLabel, blocks: Sequence[QuditState]):
        blocks = list(blocks)
        if len(blocks) != register.dim:
            raise DimensionMismatch(f"{len(blocks)} blocks for register of dimension {register.dim}")
        regs = blocks[0].registers
        if any(b.registers != regs for b in blocks):
            raise LabelMismatch("blocks must share the same registers")
        if register.name in blocks[0]:
            raise DuplicateLabel(f"sliced register {register.name!r} repeated inside the blocks")
        self.register = register
        self.blocks = blocks

    @property
    def registers(self) -> tuple[RegisterLabel, ...]:
        return (self.register,) + self.blocks[0].registers

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(r.name for r in self.registers)

    def norm(self) -> float:
        return math.sqrt(sum(b.norm() ** 2 for b in self.blocks))

    def assemble(self) -> QuditState:
        amps = np.concatenate([b.amplitudes for b in self.blocks])
        return QuditState(self.registers, amps, normalized=False)

    def schmidt_rank(self, part: Sequence, *, tol: float = RANK_TOL) -> int:
        names = [p.name if isinstance(p, RegisterLabel) else p for p in part]
        inner = self.blocks[0]
        if len(set(names)) != len(names) or any(n != self.register.name and n not in inner for n in names):
            raise BadPartition(f"{names} is not a subset of {self.labels}")
        if not names or len(names) == len(self.registers):
            raise BadPartition("partition must be a nonempty proper subset")
        side = [n for n in names if n != self.register.name]
        if self.register.name in names:
            mats = [self._cut(b, side) for b in self.blocks]
            # Rows of the cut matrix are (h, a) pairs: stack blocks vertically, chunk by columns.
            rows, cols = sum(m.shape[0] for m in mats), mats[0].shape[1]

            def chunks():
                for sl in _column_slices(cols, rows):
                    yield np.vstack([m[:, sl] for m in mats])

            return _rank_of_columns(rows, chunks(), tol)
        # Columns of the cut matrix range over (h, rest): blocks sit side by side.
        rows = math.prod(inner.register(n).dim for n in side)
        mats = (self._cut(b, side) for b in self.blocks)
        return _rank_of_columns(rows, (c for m in mats for c in _column_chunks(m)), tol)

    @staticmethod
    def _cut(block: QuditState, side: Sequence[str]) -> np.ndarray:
        if not side:
            return block.amplitudes.reshape(1, -1)
        ax = block.axes(side)
        rest = [i for i in range(len(block.registers)) if i not in ax]
        da = math.prod(block.registers[i].dim for i in ax)
        return block.tensor.transpose(ax + rest).reshape(da, -1)
