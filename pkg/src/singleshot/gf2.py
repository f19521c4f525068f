"""Dense GF(2) vectors and matrices, bit-packed into Python integers.

Bit ``j`` of a packed integer holds position ``j`` of the vector, so the
leftmost character of a printed row is bit 0.  Every value is immutable.

Enumeration-heavy helpers (:func:`span_array`, :func:`min_distance`,
:func:`weight_enumerator`) switch to ``numpy.uint64`` arrays and therefore
require row lengths of at most 64 bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

WORD_BITS = 64


class DimensionError(ValueError):
    """Operands have incompatible shapes."""


class InconsistentSystemError(ValueError):
    """A linear system over GF(2) has no solution."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


def parity(x: int) -> int:
    return x.bit_count() & 1


@dataclass(frozen=True)
class BitVector:
    """A binary vector of fixed ``length`` packed into the integer ``bits``."""

    length: int
    bits: int = 0

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError(f"bits set beyond length {self.length}")

    @classmethod
    def zeros(cls, length: int) -> BitVector:
        return cls(length, 0)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> BitVector:
        value = 0
        length = 0
        for j, b in enumerate(bits):
            if b not in (0, 1, True, False):
                raise ValueError(f"bit {j} is {b!r}, expected 0 or 1")
            value |= int(b) << j
            length = j + 1
        return cls(length, value)

    @classmethod
    def from_support(cls, length: int, support: Iterable[int]) -> BitVector:
        value = 0
        for j in support:
            if not 0 <= j < length:
                raise IndexError(j)
            value |= 1 << j
        return cls(length, value)

    @classmethod
    def parse(cls, text: str) -> BitVector:
        return cls.from_bits(int(c) for c in text if c in "01")

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    @property
    def support(self) -> list[int]:
        return [j for j in range(self.length) if self.bits >> j & 1]

    def to_list(self) -> list[int]:
        return [self.bits >> j & 1 for j in range(self.length)]

    def dot(self, other: BitVector) -> int:
        self._check(other)
        return parity(self.bits & other.bits)

    def distance(self, other: BitVector) -> int:
        self._check(other)
        return (self.bits ^ other.bits).bit_count()

    def concat(self, other: BitVector) -> BitVector:
        return BitVector(self.length + other.length, self.bits | other.bits << self.length)

    def _check(self, other: BitVector) -> None:
        if self.length != other.length:
            raise DimensionError(f"length mismatch: {self.length} vs {other.length}")

    def __xor__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.length, self.bits ^ other.bits)

    __add__ = __xor__

    def __and__(self, other: BitVector) -> BitVector:
        self._check(other)
        return BitVector(self.length, self.bits & other.bits)

    def __getitem__(self, j: int) -> int:
        if not -self.length <= j < self.length:
            raise IndexError(j)
        return self.bits >> (j % self.length) & 1

    def __len__(self) -> int:
        return self.length

    def __bool__(self) -> bool:
        return self.bits != 0

    def __str__(self) -> str:
        return "".join(str(b) for b in self.to_list())


def hamming_distance(u: BitVector, v: BitVector) -> int:
    return u.distance(v)


@dataclass(frozen=True)
class BitMatrix:
    """A binary matrix stored as a tuple of packed row integers."""

    rows: tuple[int, ...]
    ncols: int

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        limit = 1 << self.ncols
        for i, r in enumerate(self.rows):
            if r < 0 or r >= limit:
                raise ValueError(f"row {i} has bits beyond column {self.ncols}")

    # -- construction -------------------------------------------------
    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> BitMatrix:
        return cls((0,) * nrows, ncols)

    @classmethod
    def identity(cls, n: int) -> BitMatrix:
        return cls(tuple(1 << i for i in range(n)), n)

    @classmethod
    def from_vectors(cls, vectors: Sequence[BitVector], ncols: int | None = None) -> BitMatrix:
        if ncols is None:
            if not vectors:
                raise ValueError("ncols required for an empty row list")
            ncols = vectors[0].length
        for v in vectors:
            if v.length != ncols:
                raise DimensionError(f"row length {v.length} != {ncols}")
        return cls(tuple(v.bits for v in vectors), ncols)

    @classmethod
    def from_lists(cls, rows: Sequence[Sequence[int]], ncols: int | None = None) -> BitMatrix:
        vecs = [BitVector.from_bits(r) for r in rows]
        return cls.from_vectors(vecs, ncols)

    @classmethod
    def from_array(cls, array) -> BitMatrix:
        a = np.asarray(array)
        if a.ndim != 2:
            raise DimensionError("expected a 2-D array")
        return cls.from_lists([[int(x) & 1 for x in row] for row in a], a.shape[1])

    @classmethod
    def parse(cls, text: str) -> BitMatrix:
        """Read the matrix literal format: one row per line of '0'/'1', spaces ignored.

        Blank lines and lines starting with ``#`` are skipped.
        """
        rows: list[BitVector] = []
        for lineno, line in enumerate(text.splitlines(), 1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            compact = stripped.replace(" ", "").replace("\t", "")
            if set(compact) - {"0", "1"}:
                raise ValueError(f"line {lineno}: unexpected characters in {line!r}")
            rows.append(BitVector.parse(compact))
        if not rows:
            raise ValueError("no matrix rows found")
        return cls.from_vectors(rows)

    @classmethod
    def load(cls, path) -> BitMatrix:
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def format(self, sep: str = " ") -> str:
        return "\n".join(sep.join(str(b) for b in self.row(i).to_list()) for i in range(self.nrows))

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.format() + "\n")

    # -- accessors ----------------------------------------------------
    @property
    def nrows(self) -> int:
        return len(self.rows)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nrows, self.ncols

    def row(self, i: int) -> BitVector:
        return BitVector(self.ncols, self.rows[i])

    def column(self, j: int) -> BitVector:
        return BitVector(self.nrows, sum(((r >> j) & 1) << i for i, r in enumerate(self.rows)))

    def __getitem__(self, idx):
        if isinstance(idx, tuple):
            i, j = idx
            return self.rows[i] >> j & 1
        return self.row(idx)

    def __iter__(self):
        return (self.row(i) for i in range(self.nrows))

    def __len__(self) -> int:
        return self.nrows

    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def column_weights(self) -> list[int]:
        return [sum(r >> j & 1 for r in self.rows) for j in range(self.ncols)]

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.ncols):
                out[i, j] = r >> j & 1
        return out

    # -- structural ops -----------------------------------------------
    @property
    def T(self) -> BitMatrix:
        return BitMatrix(tuple(self.column(j).bits for j in range(self.ncols)), self.nrows)

    def take_rows(self, indices: Iterable[int]) -> BitMatrix:
        return BitMatrix(tuple(self.rows[i] for i in indices), self.ncols)

    def vstack(self, other: BitMatrix) -> BitMatrix:
        if other.ncols != self.ncols:
            raise DimensionError(f"column mismatch: {self.ncols} vs {other.ncols}")
        return BitMatrix(self.rows + other.rows, self.ncols)

    def hstack(self, other: BitMatrix) -> BitMatrix:
        if other.nrows != self.nrows:
            raise DimensionError(f"row mismatch: {self.nrows} vs {other.nrows}")
        return BitMatrix(tuple(a | b << self.ncols for a, b in zip(self.rows, other.rows)),
                         self.ncols + other.ncols)

    def __matmul__(self, other):
        if isinstance(other, BitMatrix):
            return mat_mul(self, other)
        if isinstance(other, BitVector):
            return mat_vec_mul(self, other)
        return NotImplemented

    def __add__(self, other: BitMatrix) -> BitMatrix:
        if other.shape != self.shape:
            raise DimensionError(f"shape mismatch: {self.shape} vs {other.shape}")
        return BitMatrix(tuple(a ^ b for a, b in zip(self.rows, other.rows)), self.ncols)

    def __str__(self) -> str:
        return self.format()


def mat_vec_mul(M: BitMatrix, v: BitVector) -> BitVector:
    """Return ``M v`` over GF(2); bit ``i`` is the parity of ``row_i AND v``."""
    if v.length != M.ncols:
        raise DimensionError(f"vector length {v.length} != matrix cols {M.ncols}")
    out = 0
    for i, r in enumerate(M.rows):
        out |= parity(r & v.bits) << i
    return BitVector(M.nrows, out)


def vec_mat_mul(v: BitVector, M: BitMatrix) -> BitVector:
    """Return ``v M`` (XOR of the rows of ``M`` selected by ``v``)."""
    if v.length != M.nrows:
        raise DimensionError(f"vector length {v.length} != matrix rows {M.nrows}")
    out = 0
    bits = v.bits
    i = 0
    while bits:
        if bits & 1:
            out ^= M.rows[i]
        bits >>= 1
        i += 1
    return BitVector(M.ncols, out)


def mat_mul(A: BitMatrix, B: BitMatrix) -> BitMatrix:
    if A.ncols != B.nrows:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return BitMatrix(tuple(vec_mat_mul(A.row(i), B).bits for i in range(A.nrows)), B.ncols)


@dataclass(frozen=True)
class RowReduction:
    reduced: BitMatrix
    rank: int
    pivots: tuple[int, ...]
    transform: BitMatrix


def row_reduce(M: BitMatrix) -> RowReduction:
    """Gauss-Jordan elimination to reduced row-echelon form.

    ``transform @ M == reduced``; the first ``rank`` rows of ``reduced`` are
    nonzero and carry pivots in increasing column order.
    """
    rows = list(M.rows)
    ops = [1 << i for i in range(M.nrows)]
    pivots: list[int] = []
    r = 0
    for col in range(M.ncols):
        bit = 1 << col
        pivot = next((i for i in range(r, len(rows)) if rows[i] & bit), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        ops[r], ops[pivot] = ops[pivot], ops[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
                ops[i] ^= ops[r]
        pivots.append(col)
        r += 1
        if r == len(rows):
            break
    return RowReduction(
        reduced=BitMatrix(tuple(rows), M.ncols),
        rank=r,
        pivots=tuple(pivots),
        transform=BitMatrix(tuple(ops), M.nrows),
    )


def rank(M: BitMatrix) -> int:
    return row_reduce(M).rank


class EchelonBasis:
    """Incrementally built basis with distinct leading (highest) bits.

    ``reduce`` also reports which inserted vectors combine to the eliminated
    part, as a bitmask over insertion order.
    """

    def __init__(self, length: int):
        self.length = length
        self._by_lead: dict[int, tuple[int, int]] = {}
        self._inserted = 0

    def reduce(self, x: int) -> tuple[int, int]:
        combo = 0
        while x:
            entry = self._by_lead.get(x.bit_length() - 1)
            if entry is None:
                break
            x ^= entry[0]
            combo ^= entry[1]
        return x, combo

    def add(self, x: int) -> bool:
        """Insert ``x``; return False if it already lies in the span."""
        idx = self._inserted
        self._inserted += 1
        res, combo = self.reduce(x)
        if not res:
            return False
        self._by_lead[res.bit_length() - 1] = (res, combo ^ (1 << idx))
        return True

    def __contains__(self, x: int) -> bool:
        return self.reduce(x)[0] == 0

    @property
    def rank(self) -> int:
        return len(self._by_lead)


def kernel_basis(M: BitMatrix) -> BitMatrix:
    """Basis of ``{v : M v = 0}`` read off the reduced row-echelon form."""
    red = row_reduce(M)
    pivset = set(red.pivots)
    basis = []
    for free in range(M.ncols):
        if free in pivset:
            continue
        v = 1 << free
        for r, p in enumerate(red.pivots):
            if red.reduced.rows[r] >> free & 1:
                v |= 1 << p
        basis.append(v)
    return BitMatrix(tuple(basis), M.ncols)


def rowspace_contains(M: BitMatrix, v: BitVector) -> bool:
    if v.length != M.ncols:
        raise DimensionError(f"vector length {v.length} != matrix cols {M.ncols}")
    red = row_reduce(M)
    x = v.bits
    for r, p in enumerate(red.pivots):
        if x >> p & 1:
            x ^= red.reduced.rows[r]
    return x == 0


def solve(M: BitMatrix, b: BitVector) -> BitVector:
    """Return one ``x`` with ``M x = b``; raises :class:`InconsistentSystemError`."""
    if b.length != M.nrows:
        raise DimensionError(f"rhs length {b.length} != matrix rows {M.nrows}")
    red = row_reduce(M)
    tb = mat_vec_mul(red.transform, b).bits
    if tb >> red.rank:
        raise InconsistentSystemError("system M x = b is inconsistent")
    x = 0
    for r, p in enumerate(red.pivots):
        if tb >> r & 1:
            x |= 1 << p
    return BitVector(M.ncols, x)


def express_rows(H: BitMatrix, P: BitMatrix) -> BitMatrix:
    """Solve ``A^T H = P`` for ``A`` (shape ``H.nrows x P.nrows``).

    Column ``c`` of ``A`` lists which rows of ``H`` sum to row ``c`` of ``P``.
    ``H`` must have full row rank so the answer is unique.
    """
    if P.ncols != H.ncols and P.nrows:
        raise DimensionError(f"P has {P.ncols} columns, H has {H.ncols}")
    red = row_reduce(H)
    if red.rank != H.nrows:
        raise ValueError(f"H must have full row rank (rank {red.rank} < {H.nrows} rows)")
    columns = []
    for c, p in enumerate(P.rows):
        x = p
        coeff = 0
        for r, piv in enumerate(red.pivots):
            if x >> piv & 1:
                x ^= red.reduced.rows[r]
                coeff ^= red.transform.rows[r]
        if x:
            raise InconsistentSystemError(f"row {c} of P is not in the row space of H", row=c)
        columns.append(coeff)
    return BitMatrix(tuple(columns), H.nrows).T if columns else BitMatrix.zeros(H.nrows, 0)


# -- enumeration kernels ------------------------------------------------

def span_array(rows: Sequence[int], width: int) -> np.ndarray:
    """All ``2**len(rows)`` XOR combinations; entry ``i`` combines the rows set in ``i``.

    Built by doubling, so each entry reuses the partial sum of its prefix.
    """
    if width > WORD_BITS:
        raise DimensionError(f"width {width} exceeds {WORD_BITS} bits")
    out = np.zeros(1, dtype=np.uint64)
    for r in rows:
        out = np.concatenate([out, out ^ np.uint64(r)])
    return out


def popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a)


def batch_mat_vec(M: BitMatrix, words: np.ndarray) -> np.ndarray:
    """Vectorized ``M v`` for every packed ``v`` in ``words``; results packed the same way."""
    if M.nrows > WORD_BITS:
        raise DimensionError(f"{M.nrows} rows exceed {WORD_BITS} output bits")
    words = np.asarray(words, dtype=np.uint64)
    out = np.zeros(words.shape, dtype=np.uint64)
    for i, r in enumerate(M.rows):
        bit = popcount(words & np.uint64(r)).astype(np.uint64) & np.uint64(1)
        out |= bit << np.uint64(i)
    return out


def column_masks(M: BitMatrix) -> list[int]:
    """Packed columns of ``M``: entry ``j`` has bit ``i`` set iff ``M[i, j] == 1``."""
    return [M.column(j).bits for j in range(M.ncols)]


def _basis_rows(G: BitMatrix) -> list[int]:
    red = row_reduce(G)
    return list(red.reduced.rows[: red.rank])


def weight_enumerator(G: BitMatrix) -> list[int]:
    """Histogram ``h`` of codeword weights of ``rowspace(G)``; ``len(h) == G.ncols + 1``."""
    words = span_array(_basis_rows(G), G.ncols)
    return np.bincount(popcount(words), minlength=G.ncols + 1).astype(int).tolist()


def min_distance(G: BitMatrix) -> tuple[int, int]:
    """Return ``(d_min, multiplicity)`` of the code spanned by the rows of ``G``."""
    basis = _basis_rows(G)
    if not basis:
        raise ValueError("row space is trivial; minimum distance undefined")
    w = popcount(span_array(basis, G.ncols)[1:])
    d = int(w.min())
    return d, int(np.count_nonzero(w == d))
