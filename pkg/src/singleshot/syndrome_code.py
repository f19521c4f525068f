"""Syndrome error-correcting codes built from redundant stabilizer rows.

Measuring ``m`` rows ``H_o = [H; P]`` instead of the ``n - k`` rows of ``H``
turns the syndrome ``s`` into a codeword ``z = s G_s`` of an ``(m, n-k)``
code with systematic generator ``G_s = [I | A]`` where ``A^T H = P``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .codes import StabilizerCode
from .gf2 import (
    BitMatrix,
    BitVector,
    express_rows,
    mat_vec_mul,
    min_distance,
    popcount,
    span_array,
    vec_mat_mul,
)
from .noise import average_delta


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SyndromeCode:
    code: StabilizerCode
    H_o: BitMatrix
    P: BitMatrix
    A: BitMatrix
    G_s: BitMatrix
    d_min: int
    multiplicity: int
    label: str
    selected: tuple[int, ...] | None = field(default=None, compare=False)

    @property
    def m(self) -> int:
        return self.H_o.nrows

    @property
    def k_s(self) -> int:
        return self.G_s.nrows

    @property
    def row_weights(self) -> list[int]:
        return self.H_o.row_weights()

    def weight_profile(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for w in self.row_weights:
            out[w] = out.get(w, 0) + 1
        return dict(sorted(out.items()))

    def encode(self, s: BitVector) -> BitVector:
        return vec_mat_mul(s, self.G_s)

    def measure(self, e: BitVector) -> BitVector:
        """Noiseless redundant syndrome ``z = H_o e``."""
        return mat_vec_mul(self.H_o, e)

    @cached_property
    def codewords(self) -> np.ndarray:
        """Packed ``z(s)`` for every syndrome ``s`` (index = packed ``s``)."""
        return span_array(self.G_s.rows, self.m)

    def average_delta(self, q: float) -> float:
        return average_delta(self.H_o, q)

    def describe(self, q: float | None = None) -> list[str]:
        profile = ", ".join(f"w{w}x{c}" for w, c in self.weight_profile().items())
        lines = [
            f"label: {self.label}",
            f"code: {self.code.name}",
            f"m: {self.m}",
            f"k_s: {self.k_s}",
            f"d_min: {self.d_min}",
            f"multiplicity: {self.multiplicity}",
            f"row weights: {profile}",
        ]
        if q is not None:
            lines.append(f"average delta at q={q:g}: {self.average_delta(q):.6f}")
        return lines


def assemble(code: StabilizerCode, redundant_rows: BitMatrix | None, label: str,
             selected: tuple[int, ...] | None = None) -> SyndromeCode:
    """Stack ``H_o = [H; P]``, solve ``A^T H = P`` and form ``G_s = [I | A]``."""
    H = code.H
    P = redundant_rows if redundant_rows is not None else BitMatrix.zeros(0, H.ncols)
    A = express_rows(H, P)
    G_s = BitMatrix.identity(H.nrows).hstack(A) if P.nrows else BitMatrix.identity(H.nrows)
    H_o = H.vstack(P)
    d, mult = min_distance(G_s)
    return SyndromeCode(code=code, H_o=H_o, P=P, A=A, G_s=G_s, d_min=d,
                        multiplicity=mult, label=label, selected=selected)


def _require(code: StabilizerCode, name: str) -> None:
    if code.name != name:
        raise ValueError(f"expected the {name} code, got {code.name!r}")


def generate_candidates_product(code: StabilizerCode) -> BitMatrix:
    """Built-in redundant row, then the 16 weight-6 sums (grid row i) + (grid column j).

    Ordered i-major, matching the column order of the reference ``A`` fixture.
    """
    _require(code, "product16")
    rows = code.H_full.rows
    sums = [rows[i] ^ rows[j] for i in range(4) for j in range(4, 8)]
    return code.builtin_redundant.vstack(BitMatrix(tuple(sums), code.n))


def weight_six_combinations(code: StabilizerCode) -> list[int]:
    """Distinct weight-6 vectors among all ``2**rows`` sums of ``H_full`` rows, sorted."""
    words = span_array(code.H_full.rows, code.n)
    hits = {int(v) for v in words[popcount(words) == 6]}
    return sorted(hits, key=lambda v: BitVector(code.n, v).to_list())


def generate_candidates_toric(code: StabilizerCode) -> BitMatrix:
    """Built-in redundant row followed by the 24 weight-6 row combinations."""
    _require(code, "toric18")
    extra = weight_six_combinations(code)
    return code.builtin_redundant.vstack(BitMatrix(tuple(extra), code.n))


CANDIDATE_GENERATORS = {
    "product16": generate_candidates_product,
    "toric18": generate_candidates_toric,
}


def generate_candidates(code: StabilizerCode) -> BitMatrix:
    try:
        return CANDIDATE_GENERATORS[code.name](code)
    except KeyError:
        raise ValueError(f"no candidate generator for {code.name!r}") from None


def build_repetition(code: StabilizerCode, repeats: int,
                     include_builtin_redundant: bool = False) -> SyndromeCode:
    """Measure every base row ``repeats`` times.

    The base is ``H`` or, with ``include_builtin_redundant``, all rows of ``H_full``;
    the latter is the concatenation of a single-parity code with ``I (x) [1..1]``.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    base = code.H
    if include_builtin_redundant:
        base = base.vstack(code.builtin_redundant)
    P_rows = code.builtin_redundant.rows if include_builtin_redundant else ()
    P_rows = P_rows + base.rows * (repeats - 1)
    m = base.nrows * repeats
    kind = "con" if include_builtin_redundant and code.builtin_redundant.nrows else "rep"
    return assemble(code, BitMatrix(P_rows, code.n), f"{kind}({m},{code.r})")


def build_concatenated_mixed(code: StabilizerCode, base: SyndromeCode,
                             extra_repeats) -> SyndromeCode:
    """Append one more measurement of each listed ``base.H_o`` row."""
    extra = tuple(extra_repeats)
    if not extra:
        return base
    for i in extra:
        if not 0 <= i < base.m:
            raise IndexError(f"row index {i} outside 0..{base.m - 1}")
    P = base.P.vstack(base.H_o.take_rows(extra))
    m = base.m + len(extra)
    return assemble(code, P, f"con({m},{code.r})")


def _subset_scores(words: np.ndarray, masks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w = popcount(words[None, :] & masks[:, None])
    d = w.min(axis=1)
    mult = (w == d[:, None]).sum(axis=1)
    return d, mult


def _swap_refine(words: np.ndarray, subset: tuple[int, ...], pool: int, mask_of) -> tuple[int, ...]:
    """Hill-climb over single in/out exchanges until no exchange improves the score."""
    def key(d, mult, s):
        return (-int(d), int(mult), s)

    d, mult = _subset_scores(words, np.array([mask_of(subset)], dtype=np.uint64))
    best = key(d[0], mult[0], subset)
    while True:
        outside = [c for c in range(pool) if c not in subset]
        options = [tuple(sorted(subset[:j] + subset[j + 1:] + (c,)))
                   for j in range(len(subset)) for c in outside]
        if not options:
            return subset
        d, mult = _subset_scores(words, np.array([mask_of(s) for s in options], dtype=np.uint64))
        i = min(range(len(options)), key=lambda j: key(d[j], mult[j], options[j]))
        cand = key(d[i], mult[i], options[i])
        if cand[:2] >= best[:2]:
            return subset
        subset, best = options[i], cand


def select_rows(code: StabilizerCode, candidates: BitMatrix, target_m: int,
                strategy: str = "exhaustive", required: BitMatrix | None = None,
                chunk: int = 16384) -> SyndromeCode:
    """Keep ``H`` (and ``required``) and choose candidate rows up to ``target_m`` measurements.

    Maximizes ``d_min``, then minimizes the number of minimum-weight
    codewords; remaining ties go to the lexicographically least index subset.
    ``greedy`` drops one row at a time under the same order, then improves
    the result by single row exchanges.
    """
    required = required if required is not None else BitMatrix.zeros(0, code.n)
    fixed = code.r + required.nrows
    k = target_m - fixed
    if not 0 <= k <= candidates.nrows:
        raise SelectionError(
            f"target m={target_m} infeasible: need {fixed}..{fixed + candidates.nrows}"
        )
    full = assemble(code, required.vstack(candidates), "pool")
    # codewords over every measured row; a subset keeps a column mask
    words = full.codewords[1:]
    fixed_mask = (1 << fixed) - 1

    def mask_of(subset) -> int:
        m = fixed_mask
        for c in subset:
            m |= 1 << (fixed + c)
        return m

    if strategy == "exhaustive":
        best: tuple[int, int] | None = None
        best_subset: tuple[int, ...] = ()
        combos = itertools.combinations(range(candidates.nrows), k)
        while True:
            batch = list(itertools.islice(combos, chunk))
            if not batch:
                break
            masks = np.fromiter((mask_of(s) for s in batch), dtype=np.uint64, count=len(batch))
            d, mult = _subset_scores(words, masks)
            # first index wins ties, preserving lexicographic order
            order = np.lexsort((np.arange(len(batch)), mult, -d.astype(np.int64)))
            i = int(order[0])
            score = (int(d[i]), -int(mult[i]))
            if best is None or score > best:
                best, best_subset = score, batch[i]
        subset = best_subset
    elif strategy == "greedy":
        current = list(range(candidates.nrows))
        while len(current) > k:
            options = [tuple(current[:j] + current[j + 1:]) for j in range(len(current))]
            masks = np.array([mask_of(s) for s in options], dtype=np.uint64)
            d, mult = _subset_scores(words, masks)
            i = min(range(len(options)), key=lambda j: (-int(d[j]), int(mult[j]), options[j]))
            current = list(options[i])
        subset = _swap_refine(words, tuple(current), candidates.nrows, mask_of)
    else:
        raise SelectionError(f"unknown strategy {strategy!r}")
    P = required.vstack(candidates.take_rows(subset))
    return assemble(code, P, f"red({target_m},{code.r})", selected=tuple(subset))


_SPEC = re.compile(r"^(red|rep|con)\(?(\d+)(?:,\d+\))?$")


def parse_synd_spec(text: str) -> tuple[str, int]:
    """``"red21"`` or ``"red(21,7)"`` -> ``("red", 21)``."""
    match = _SPEC.match(text.strip())
    if not match:
        raise SelectionError(f"cannot parse syndrome code spec {text!r} (expected e.g. red21, rep24)")
    return match.group(1), int(match.group(2))


def build_variant(code: StabilizerCode, variant: str, m: int,
                  strategy: str = "exhaustive") -> SyndromeCode:
    """Construct one of the families ``red``, ``rep`` or ``con`` with ``m`` measurements.

    * ``red``: ``H`` plus candidate redundant rows; all of them when ``m`` equals
      the full count, otherwise a subset chosen by :func:`select_rows`.
    * ``rep``: ``H`` repeated ``m / (n - k)`` times.
    * ``con``: all rows of ``H_full`` repeated when ``m`` is a multiple of their
      count, else the full ``red`` code plus a second measurement of its first
      ``m - m_full`` rows.
    """
    r = code.r
    if m < r:
        raise SelectionError(f"m={m} is below n-k={r}")
    if variant == "rep":
        if m % r:
            raise SelectionError(f"rep needs m divisible by {r}, got {m}")
        return build_repetition(code, m // r)
    if variant == "red":
        cands = generate_candidates(code)
        if m == r + cands.nrows:
            return assemble(code, cands, f"red({m},{r})")
        return select_rows(code, cands, m, strategy)
    if variant == "con":
        n_full = code.H_full.nrows
        if m % n_full == 0 and code.builtin_redundant.nrows:
            return build_repetition(code, m // n_full, include_builtin_redundant=True)
        full = build_variant(code, "red", r + generate_candidates(code).nrows)
        if m <= full.m:
            raise SelectionError(f"con with m={m} not constructible for {code.name}")
        return build_concatenated_mixed(code, full, range(m - full.m))
    raise SelectionError(f"unknown variant {variant!r}")


def build_from_spec(code: StabilizerCode, spec: str, strategy: str = "exhaustive") -> SyndromeCode:
    variant, m = parse_synd_spec(spec)
    return build_variant(code, variant, m, strategy)
