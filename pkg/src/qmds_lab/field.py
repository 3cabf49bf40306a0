"""Prime-field arithmetic and generalized Reed-Solomon codes.

Only prime moduli are supported.  Matrices over GF(p) are plain ``numpy``
integer arrays with entries in ``[0, p)``; the helpers below keep them
reduced.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    BadDimensions,
    DuplicatePoint,
    NotPrime,
    ParameterViolation,
    TooLarge,
    ZeroMultiplier,
)

MAX_PRIME = 64


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p**0.5) + 1))


@dataclass(frozen=True)
class FieldElement:
    value: int
    modulus: int

    def __post_init__(self):
        if not 0 <= self.value < self.modulus:
            object.__setattr__(self, "value", self.value % self.modulus)

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.modulus != self.modulus:
                raise ValueError("elements belong to different fields")
            return other.value
        return int(other) % self.modulus

    def __add__(self, other):
        return FieldElement((self.value + self._coerce(other)) % self.modulus, self.modulus)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - self._coerce(other)) % self.modulus, self.modulus)

    def __rsub__(self, other):
        return FieldElement((self._coerce(other) - self.value) % self.modulus, self.modulus)

    def __mul__(self, other):
        return FieldElement((self.value * self._coerce(other)) % self.modulus, self.modulus)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.modulus, self.modulus)

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        return FieldElement(pow(self.value, k, self.modulus), self.modulus)

    def __truediv__(self, other):
        return self * FieldElement(self._coerce(other), self.modulus).inv()

    def inv(self) -> FieldElement:
        if self.value == 0:
            raise ZeroDivisionError("0 has no inverse")
        return FieldElement(pow(self.value, self.modulus - 2, self.modulus), self.modulus)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.modulus})"


class PrimeField:
    """Handle for GF(p); also carries the matrix routines used by the code builders."""

    def __init__(self, p: int):
        self.p = int(p)

    def __repr__(self):
        return f"GF({self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("GF", self.p))

    def __call__(self, value: int) -> FieldElement:
        return FieldElement(int(value) % self.p, self.p)

    def elements(self) -> list[FieldElement]:
        return [self(v) for v in range(self.p)]

    def add(self, a, b) -> FieldElement:
        return self(a) + self(b)

    def mul(self, a, b) -> FieldElement:
        return self(a) * self(b)

    def neg(self, a) -> FieldElement:
        return -self(a)

    def inv(self, a) -> FieldElement:
        return self(a).inv()

    def pow(self, a, k: int) -> FieldElement:
        return self(a) ** k

    # matrix helpers -------------------------------------------------

    def array(self, data) -> np.ndarray:
        return np.asarray(data, dtype=np.int64) % self.p

    def rref(self, mat) -> tuple[np.ndarray, list[int]]:
        """Reduced row echelon form and pivot columns (lowest-index pivoting)."""
        m = self.array(mat).copy()
        if m.ndim != 2:
            raise BadDimensions("expected a 2-d matrix")
        rows, cols = m.shape
        pivots = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(m[r:, c])[0]
            if nz.size == 0:
                continue
            i = r + nz[0]
            if i != r:
                m[[r, i]] = m[[i, r]]
            m[r] = (m[r] * pow(int(m[r, c]), self.p - 2, self.p)) % self.p
            for i in range(rows):
                if i != r and m[i, c]:
                    m[i] = (m[i] - m[i, c] * m[r]) % self.p
            pivots.append(c)
            r += 1
        return m, pivots

    def rank(self, mat) -> int:
        mat = self.array(mat)
        if mat.size == 0:
            return 0
        return len(self.rref(mat)[1])

    def solve_left(self, basis, vec) -> np.ndarray | None:
        """Coefficients ``x`` with ``x @ basis == vec`` or ``None`` if vec is not in the row space."""
        basis = self.array(basis)
        vec = self.array(vec)
        k = basis.shape[0]
        if k == 0:
            return np.zeros(0, dtype=np.int64) if not vec.any() else None
        # Solve basis.T x = vec via the augmented system.
        aug = np.concatenate([basis.T, vec.reshape(-1, 1)], axis=1)
        red, piv = self.rref(aug)
        if k in piv:
            return None
        x = np.zeros(k, dtype=np.int64)
        for row, c in enumerate(piv):
            x[c] = red[row, k]
        return x

    def in_row_space(self, basis, vec) -> bool:
        return self.solve_left(basis, vec) is not None


def make_field(p: int) -> PrimeField:
    """Return the GF(p) handle.

    Raises:
        NotPrime: if ``p`` is not prime.
        TooLarge: if ``p`` exceeds the desk-scale cap of 64.
    """
    p = int(p)
    if not _is_prime(p):
        raise NotPrime(f"{p} is not prime")
    if p > MAX_PRIME:
        raise TooLarge(f"p={p} exceeds the cap of {MAX_PRIME}")
    return PrimeField(p)


@dataclass(frozen=True, eq=False)
class GrsCode:
    field: PrimeField
    n: int
    k: int
    points: tuple[int, ...]
    multipliers: tuple[int, ...]
    generator: np.ndarray = field(repr=False)

    @cached_property
    def minimum_distance(self) -> int:
        """Brute-force minimum Hamming weight over all nonzero codewords."""
        return brute_force_distance(self.field, self.generator)

    def codewords(self) -> np.ndarray:
        msgs = np.array(list(itertools.product(range(self.field.p), repeat=self.k)), dtype=np.int64)
        return (msgs @ self.generator) % self.field.p

    def encode(self, message) -> np.ndarray:
        return (self.field.array(message) @ self.generator) % self.field.p


def brute_force_distance(fld: PrimeField, generator) -> int:
    gen = fld.array(generator)
    k, n = gen.shape
    best = n + 1
    for msg in itertools.product(range(fld.p), repeat=k):
        if not any(msg):
            continue
        word = (np.asarray(msg, dtype=np.int64) @ gen) % fld.p
        best = min(best, int(np.count_nonzero(word)))
    return best


def make_grs(fld: PrimeField, n: int, k: int, points=None, multipliers=None) -> GrsCode:
    """GRS[n, k] with generator rows ``v_i * alpha_i**d`` for ``d = 0..k-1``."""
    p = fld.p
    if not 1 <= k <= n <= p:
        raise BadDimensions(f"need 1 <= k <= n <= p, got k={k}, n={n}, p={p}")
    points = tuple(range(n)) if points is None else tuple(int(a) % p for a in points)
    multipliers = (1,) * n if multipliers is None else tuple(int(v) % p for v in multipliers)
    if len(points) != n or len(multipliers) != n:
        raise BadDimensions("points and multipliers must have length n")
    if len(set(points)) != n:
        raise DuplicatePoint(f"evaluation points not distinct: {points}")
    if 0 in multipliers:
        raise ZeroMultiplier(f"column multipliers must be nonzero: {multipliers}")
    alpha = np.array(points, dtype=np.int64)
    v = np.array(multipliers, dtype=np.int64)
    gen = np.empty((k, n), dtype=np.int64)
    for d in range(k):
        gen[d] = (v * np.array([pow(int(a), d, p) for a in alpha], dtype=np.int64)) % p
    gen.setflags(write=False)
    return GrsCode(fld, n, k, points, multipliers, gen)


@dataclass(frozen=True, eq=False)
class NestedCodePair:
    """GRS[n, n-t] inside GRS[n, t], plus coset representatives ``coset``."""

    field: PrimeField
    n: int
    t: int
    outer: GrsCode
    inner: GrsCode
    coset: np.ndarray = field(repr=False)

    @property
    def k(self) -> int:
        return 2 * self.t - self.n


def make_nested_pair(p: int, n: int, t: int, points=None, multipliers=None) -> NestedCodePair:
    """Nested GRS pair for an ``[[n, 2t-n]]_p`` CSS code.

    The coset matrix is picked by scanning the outer generator rows in index
    order and keeping each row that raises the rank of ``[inner; kept]``.
    """
    try:
        fld = make_field(p)
    except (NotPrime, TooLarge) as exc:
        raise ParameterViolation(str(exc)) from exc
    if not (1 < t < n <= 2 * t):
        raise ParameterViolation(f"need 1 < t < n <= 2t, got n={n}, t={t}")
    if n > p:
        raise ParameterViolation(f"need n <= p, got n={n}, p={p}")
    try:
        outer = make_grs(fld, n, t, points, multipliers)
        inner = make_grs(fld, n, n - t, points, multipliers)
    except (BadDimensions, DuplicatePoint, ZeroMultiplier) as exc:
        raise ParameterViolation(str(exc)) from exc

    rows = []
    current = inner.generator
    rank = fld.rank(current)
    for row in outer.generator:
        cand = np.vstack([current, row])
        r = fld.rank(cand)
        if r > rank:
            rows.append(row)
            current, rank = cand, r
    coset = np.array(rows, dtype=np.int64).reshape(len(rows), n)
    if coset.shape[0] != 2 * t - n:
        raise ParameterViolation("inner code is not contained in the outer code")
    coset.setflags(write=False)
    return NestedCodePair(fld, n, t, outer, inner, coset)
