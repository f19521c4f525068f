"""Built-in CSS code sectors and the degeneracy structure attached to them.

A :class:`StabilizerCode` is one sector of a CSS code: the stabilizer rows
``H_full`` that get measured (possibly with built-in redundancy), a
full-rank subset ``H``, the degeneracy generators ``D`` whose row space
defines which residual errors are harmless, and a labeler ``L`` that maps a
kernel vector to its logical class.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .gf2 import (
    BitMatrix,
    BitVector,
    EchelonBasis,
    batch_mat_vec,
    kernel_basis,
    mat_mul,
    popcount,
    rank,
    solve,
    span_array,
)

ENUMERATION_LIMIT = 24


class CodeConstructionError(ValueError):
    pass


class CodeValidationError(ValueError):
    def __init__(self, failures: list[str]):
        super().__init__("; ".join(failures))
        self.failures = failures


class UnknownCodeError(ValueError):
    pass


@dataclass(frozen=True)
class StabilizerCode:
    name: str
    H_full: BitMatrix
    H: BitMatrix
    D: BitMatrix
    L: BitMatrix
    k_q: int
    h_indices: tuple[int, ...]
    d_provenance: str = "greedy weight-4 kernel vectors"

    @property
    def n(self) -> int:
        return self.H.ncols

    @property
    def n_q(self) -> int:
        return self.n

    @property
    def r(self) -> int:
        """Number of independent checks, ``n - k`` of the classical sector code."""
        return self.H.nrows

    @property
    def builtin_redundant(self) -> BitMatrix:
        chosen = set(self.h_indices)
        return self.H_full.take_rows(i for i in range(self.H_full.nrows) if i not in chosen)

    def syndrome(self, e: BitVector) -> BitVector:
        return self.H @ e

    def logical_label(self, v: BitVector) -> BitVector:
        return self.L @ v

    def __repr__(self) -> str:
        return f"StabilizerCode({self.name!r}, n={self.n}, rank={self.r}, k_q={self.k_q})"


def independent_row_indices(M: BitMatrix) -> tuple[int, ...]:
    """Indices of the first linearly independent rows of ``M``, scanning top to bottom."""
    basis = EchelonBasis(M.ncols)
    return tuple(i for i, r in enumerate(M.rows) if basis.add(r))


def kernel_vectors(H: BitMatrix) -> np.ndarray:
    """Every vector of ``ker(H)`` as a packed ``uint64`` array (zero first)."""
    K = kernel_basis(H)
    if K.nrows > ENUMERATION_LIMIT:
        raise CodeConstructionError(f"kernel dimension {K.nrows} too large to enumerate")
    return span_array(K.rows, H.ncols)


def _lex_key(bits: int, n: int) -> str:
    return "".join("1" if bits >> j & 1 else "0" for j in range(n))


def greedy_degeneracy_matrix(H: BitMatrix, weight: int = 4) -> BitMatrix:
    target = rank(H)
    kernel = kernel_vectors(H)
    light = sorted((int(v) for v in kernel[popcount(kernel) == weight]),
                   key=lambda v: _lex_key(v, H.ncols))
    basis = EchelonBasis(H.ncols)
    chosen = []
    for v in light:
        if len(chosen) == target:
            break
        if basis.add(v):
            chosen.append(v)
    if len(chosen) < target:
        raise CodeConstructionError(
            f"only {len(chosen)} independent weight-{weight} kernel vectors, need {target}; "
            "supply D explicitly"
        )
    return BitMatrix(tuple(chosen), H.ncols)


def derive_degeneracy_matrix(code: StabilizerCode | BitMatrix) -> BitMatrix:
    """Deterministic D: lexicographically sorted weight-4 kernel vectors, added greedily.

    Stops once ``rank(D) == rank(H)``.  Raises :class:`CodeConstructionError`
    when the kernel does not hold enough independent weight-4 vectors.
    """
    H = code.H if isinstance(code, StabilizerCode) else code
    return greedy_degeneracy_matrix(H)


def _labeler(H: BitMatrix, D: BitMatrix) -> BitMatrix:
    n = H.ncols
    span = EchelonBasis(n)
    for d in D.rows:
        span.add(d)
    extension = []
    for g in kernel_basis(H).rows:
        if span.add(g):
            extension.append(g)
    k_q = len(extension)
    if not k_q:
        return BitMatrix.zeros(0, n)
    d_basis = [D.rows[i] for i in independent_row_indices(D)] if D.nrows else []
    system = BitMatrix(tuple(d_basis) + tuple(extension), n)
    if rank(system) != len(d_basis) + k_q:
        raise CodeConstructionError("rank deficiency while extending rowspace(D) to ker(H)")
    rows = []
    for i in range(k_q):
        rhs = BitVector(system.nrows, 1 << (len(d_basis) + i))
        rows.append(solve(system, rhs).bits)
    return BitMatrix(tuple(rows), n)


def build_coset_labeler(code: StabilizerCode) -> BitMatrix:
    """Rows ``l_i`` orthogonal to D with ``l_i . g_j = [i == j]`` on a complement ``g`` of D in ker(H)."""
    return _labeler(code.H, code.D)


def make_code(name: str, H_full: BitMatrix, D: BitMatrix | None = None) -> StabilizerCode:
    """Assemble a :class:`StabilizerCode` from measured rows and optional degeneracy matrix."""
    h_idx = independent_row_indices(H_full)
    H = H_full.take_rows(h_idx)
    provenance = "user-supplied"
    if D is None:
        D = greedy_degeneracy_matrix(H)
        provenance = "greedy weight-4 kernel vectors"
    elif D.ncols != H.ncols:
        raise CodeConstructionError(f"D has {D.ncols} columns, expected {H.ncols}")
    L = _labeler(H, D)
    k_q = kernel_basis(H).nrows - (rank(D) if D.nrows else 0)
    return StabilizerCode(name=name, H_full=H_full, H=H, D=D, L=L, k_q=k_q,
                          h_indices=h_idx, d_provenance=provenance)


def product_code_rows(side: int = 4) -> BitMatrix:
    """Row checks then column checks of a ``side x side`` grid, qubit ``side*a + b``."""
    n = side * side
    grid_rows = [sum(1 << (side * a + b) for b in range(side)) for a in range(side)]
    grid_cols = [sum(1 << (side * a + b) for a in range(side)) for b in range(side)]
    return BitMatrix(tuple(grid_rows + grid_cols), n)


def toric_vertex_rows(size: int = 3) -> BitMatrix:
    """Vertex checks of the ``size x size`` toric code.

    Vertex ``(r, c)`` is row ``size*r + c``.  Horizontal edge ``size*r + c``
    joins ``(r, c-1)`` and ``(r, c)``; vertical edge ``size**2 + size*r + c``
    joins ``(r, c)`` and ``(r+1, c)``, all indices mod ``size``.
    """
    s = size
    rows = []
    for r in range(s):
        for c in range(s):
            edges = (
                s * r + c,
                s * r + (c + 1) % s,
                s * s + s * r + c,
                s * s + s * ((r - 1) % s) + c,
            )
            rows.append(sum(1 << e for e in edges))
    return BitMatrix(tuple(rows), 2 * s * s)


def build_product_16_2(D: BitMatrix | None = None) -> StabilizerCode:
    """The [[16,2]] product-code X sector: 8 weight-4 checks, one of them redundant."""
    return make_code("product16", product_code_rows(4), D)


def build_toric_18_2(D: BitMatrix | None = None) -> StabilizerCode:
    """The [[18,2]] 3x3 toric-code vertex checks; the ninth row is the sum of the others."""
    return make_code("toric18", toric_vertex_rows(3), D)


BUILTIN_CODES = {
    "product16": build_product_16_2,
    "toric18": build_toric_18_2,
}


def get_code(code_id: str, D: BitMatrix | None = None) -> StabilizerCode:
    try:
        builder = BUILTIN_CODES[code_id]
    except KeyError:
        raise UnknownCodeError(
            f"unknown code {code_id!r}; choose from {', '.join(sorted(BUILTIN_CODES))}"
        ) from None
    return builder(D)


@dataclass
class ValidationReport:
    name: str
    n: int
    rank: int
    k_q: int
    kernel_dim: int
    rank_D: int
    weight_profile: dict[int, int]
    sector_distance: int | None
    d_provenance: str
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        profile = ", ".join(f"w{w}x{c}" for w, c in sorted(self.weight_profile.items()))
        return [
            f"code: {self.name}",
            f"n: {self.n}",
            f"rank: {self.rank}",
            f"k_q: {self.k_q}",
            f"kernel dim: {self.kernel_dim}",
            f"rank D: {self.rank_D}",
            f"stabilizer weights: {profile}",
            f"sector distance: {self.sector_distance}",
            f"D provenance: {self.d_provenance}",
            f"status: {'ok' if self.ok else 'INVALID: ' + '; '.join(self.failures)}",
        ]


def sector_distance(code: StabilizerCode) -> int | None:
    """Minimum weight over ``ker(H)`` outside ``rowspace(D)``; None when k_q == 0."""
    if not code.L.nrows:
        return None
    kernel = kernel_vectors(code.H)
    logical = kernel[batch_mat_vec(code.L, kernel) != 0]
    return int(popcount(logical).min()) if logical.size else None


def validate_code(code: StabilizerCode, strict: bool = True) -> ValidationReport:
    """Check every structural invariant of ``code`` and summarize it.

    With ``strict`` a violated invariant raises :class:`CodeValidationError`
    listing each failure; otherwise failures are only recorded in the report.
    """
    failures = []
    H, D, L = code.H, code.D, code.L
    r_full = rank(code.H_full)
    r_h = rank(H)
    if r_h != H.nrows:
        failures.append(f"H is not full row rank ({r_h} < {H.nrows})")
    if r_full != r_h:
        failures.append(f"rank(H_full)={r_full} differs from rank(H)={r_h}")
    basis = EchelonBasis(code.n)
    for row in H.rows:
        basis.add(row)
    for i, row in enumerate(code.H_full.rows):
        if row not in basis:
            failures.append(f"H_full row {i} not in rowspace(H)")
    if D.nrows and any(mat_mul(H, D.T).rows):
        failures.append("H D^T != 0")
    r_d = rank(D) if D.nrows else 0
    if r_d != r_h:
        failures.append(f"rank(D)={r_d} differs from rank(H)={r_h}")
    kdim = kernel_basis(H).nrows
    if kdim - r_d != code.k_q:
        failures.append(f"dim ker(H) - rank(D) = {kdim - r_d} != k_q = {code.k_q}")
    if L.nrows != code.k_q:
        failures.append(f"L has {L.nrows} rows, expected k_q={code.k_q}")
    if L.nrows and D.nrows and any(mat_mul(L, D.T).rows):
        failures.append("L D^T != 0")
    dist = None
    if not failures and L.nrows:
        label_rank = EchelonBasis(L.nrows)
        for g in kernel_basis(H).rows:
            label_rank.add((L @ BitVector(code.n, g)).bits)
        if label_rank.rank != code.k_q:
            failures.append(f"labeler rank on ker(H) is {label_rank.rank}, expected {code.k_q}")
        dist = sector_distance(code)
    report = ValidationReport(
        name=code.name,
        n=code.n,
        rank=r_h,
        k_q=code.k_q,
        kernel_dim=kdim,
        rank_D=r_d,
        weight_profile=dict(Counter(code.H_full.row_weights())),
        sector_distance=dist,
        d_provenance=code.d_provenance,
        failures=failures,
    )
    if strict and failures:
        raise CodeValidationError(failures)
    return report
