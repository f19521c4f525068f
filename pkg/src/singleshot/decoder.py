"""Exact MAP and degenerate-MAP decoding of a noisy redundant syndrome.

One pass over all ``2**n`` error patterns builds two immutable tables:

* a coset-leader table mapping each syndrome ``s`` to a minimum-weight
  error ``e*(s)`` (ties resolved uniformly with the table seed), and
* per-coset weight histograms, where a coset is identified by the pair
  (syndrome, logical label ``e L^T``).

Decoding then scores ``2**(n-k)`` syndromes (MAP) or ``2**(n - rank D)``
cosets (degenerate MAP) in the log domain.  The ``naive_*`` functions
evaluate the same rules by brute force over every error pattern and exist
only as oracles.
"""

from __future__ import annotations

import hashlib
import io
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .codes import StabilizerCode
from .gf2 import BitVector, batch_mat_vec, popcount, rowspace_contains, span_array
from .noise import STREAM_TABLES, stream
from .syndrome_code import SyndromeCode

MAX_ENUMERATION_BITS = 26
TIE_TOL = 1e-9
TABLE_FORMAT_VERSION = 1


class DecoderError(ValueError):
    pass


def _check_probabilities(epsilon: float, delta: float) -> None:
    if not 0.0 <= epsilon < 0.5:
        raise DecoderError(f"epsilon={epsilon} outside [0, 0.5)")
    if not 0.0 <= delta < 0.5:
        raise DecoderError(f"delta={delta} outside [0, 0.5)")


def _log_ratio(p: float) -> float:
    return -np.inf if p == 0.0 else float(np.log(p / (1.0 - p)))


def _scaled(count: np.ndarray, log_ratio: float) -> np.ndarray:
    """``count * log_ratio`` with ``0 * -inf`` taken as 0."""
    count = np.asarray(count)
    if np.isfinite(log_ratio):
        return count * log_ratio
    return np.where(count == 0, 0.0, -np.inf)


@dataclass(frozen=True)
class CosetLeaderTable:
    n: int
    r: int
    leaders: np.ndarray
    leader_weight: np.ndarray
    tie_count: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.leaders)

    def leader(self, s: BitVector) -> BitVector:
        return BitVector(self.n, int(self.leaders[s.bits]))


@dataclass(frozen=True)
class CosetEnumeratorTable:
    """Weight histograms per coset; coset index is ``s | label << r``."""

    n: int
    r: int
    k_q: int
    histograms: np.ndarray
    representatives: np.ndarray

    @property
    def n_cosets(self) -> int:
        return self.histograms.shape[0]

    @property
    def coset_syndromes(self) -> np.ndarray:
        return np.arange(self.n_cosets, dtype=np.int64) & ((1 << self.r) - 1)

    def coset_index(self, s: int, label: int) -> int:
        return s | label << self.r

    def log_prior_mass(self, epsilon: float) -> np.ndarray:
        """``log sum_{e in coset} Pr(e)`` for every coset."""
        w = np.arange(self.n + 1)
        with np.errstate(divide="ignore"):
            log_counts = np.log(self.histograms.astype(np.float64))
        terms = log_counts + _scaled(w, _log_ratio(epsilon))[None, :]
        top = terms.max(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            mass = top[:, 0] + np.log(np.exp(terms - top).sum(axis=1))
        mass = np.where(np.isfinite(top[:, 0]), mass, -np.inf)
        return mass + self.n * np.log1p(-epsilon)


@dataclass(frozen=True)
class DecodingTables:
    """Everything one exhaustive pass produces, shared read-only by decoders."""

    code: StabilizerCode
    leaders: CosetLeaderTable
    cosets: CosetEnumeratorTable
    syndrome_of: np.ndarray
    label_of: np.ndarray


def _error_space(code: StabilizerCode) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = code.n
    if n > MAX_ENUMERATION_BITS:
        raise DecoderError(f"n={n} too large for exhaustive tables")
    # span over unit vectors puts pattern e at index e
    syndromes = span_array([code.H.column(j).bits for j in range(n)], code.r)
    labels = span_array([code.L.column(j).bits for j in range(n)], max(code.k_q, 1))
    weights = popcount(np.arange(1 << n, dtype=np.uint64)).astype(np.int64)
    return syndromes, labels, weights


def _first_per_group(group: np.ndarray, weights: np.ndarray, keys: np.ndarray, n_groups: int):
    order = np.lexsort((keys, weights, group))
    g_sorted = group[order]
    starts = np.flatnonzero(np.r_[True, g_sorted[1:] != g_sorted[:-1]])
    if len(starts) != n_groups:
        raise DecoderError(f"expected {n_groups} groups, found {len(starts)}")
    first = order[starts]
    w_first = weights[first]
    # ties: members of the group sharing the minimum weight
    w_sorted = weights[order]
    is_min = w_sorted == np.repeat(w_first, np.diff(np.r_[starts, len(order)]))
    ties = np.add.reduceat(is_min.astype(np.int64), starts)
    return first.astype(np.uint64), w_first, ties


def build_tables(code: StabilizerCode, seed: int = 0) -> DecodingTables:
    """Single exhaustive pass producing the coset-leader and coset-enumerator tables."""
    syndromes, labels, weights = _error_space(code)
    keys = stream(seed, STREAM_TABLES).random(len(weights))
    r = code.r
    s_idx = syndromes.astype(np.int64)
    leaders, leader_w, ties = _first_per_group(s_idx, weights, keys, 1 << r)
    coset = s_idx | (labels.astype(np.int64) << r)
    n_cosets = 1 << (r + code.k_q)
    reps, _, _ = _first_per_group(coset, weights, keys, n_cosets)
    hist = np.bincount(coset * (code.n + 1) + weights, minlength=n_cosets * (code.n + 1))
    hist = hist.reshape(n_cosets, code.n + 1)
    return DecodingTables(
        code=code,
        leaders=CosetLeaderTable(code.n, r, leaders, leader_w, ties, seed),
        cosets=CosetEnumeratorTable(code.n, r, code.k_q, hist, reps),
        syndrome_of=syndromes,
        label_of=labels,
    )


def build_coset_leader_table(code: StabilizerCode, seed: int = 0) -> CosetLeaderTable:
    return build_tables(code, seed).leaders


def build_coset_enumerator_table(code: StabilizerCode, seed: int = 0) -> CosetEnumeratorTable:
    return build_tables(code, seed).cosets


@dataclass(frozen=True)
class DecodeOutcome:
    syndrome_estimate: BitVector
    error_estimate: BitVector
    coset_label: tuple[BitVector, BitVector]
    score: float
    ties: int


@dataclass
class BatchDecision:
    """Vectorized decoder output; ``index`` is a syndrome (MAP) or coset (deg-MAP)."""

    index: np.ndarray
    error: np.ndarray
    score: np.ndarray
    ties: np.ndarray


def pick_argmax(scores: np.ndarray, u: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise argmax, ties resolved by uniform draws ``u`` in [0, 1).

    Without ``u`` the lowest tied index is returned.
    """
    top = scores.max(axis=1, keepdims=True)
    tied = scores >= top - TIE_TOL * np.maximum(1.0, np.abs(top))
    counts = tied.sum(axis=1)
    if u is None:
        pick = np.zeros(len(scores), dtype=np.int64)
    else:
        pick = np.minimum((np.asarray(u) * counts).astype(np.int64), counts - 1)
    cum = np.cumsum(tied, axis=1)
    idx = np.argmax(cum > pick[:, None], axis=1)
    return idx, counts


def _as_words(z_tilde) -> np.ndarray:
    if isinstance(z_tilde, BitVector):
        return np.array([z_tilde.bits], dtype=np.uint64)
    return np.atleast_1d(np.asarray(z_tilde, dtype=np.uint64))


def syndrome_likelihoods(synd_code: SyndromeCode, z_tilde: np.ndarray, delta: float) -> np.ndarray:
    """``log Pr(z~ | s)`` for every syndrome, shape ``(batch, 2**(n-k))``."""
    dist = popcount(z_tilde[:, None] ^ synd_code.codewords[None, :])
    return _scaled(dist, _log_ratio(delta)) + synd_code.m * np.log1p(-delta)


def map_scores(leaders: CosetLeaderTable, synd_code: SyndromeCode, z_tilde, epsilon: float,
               delta: float) -> np.ndarray:
    """Joint ``log Pr(z~ | s) + log Pr(e*(s))`` for every syndrome."""
    _check_probabilities(epsilon, delta)
    prior = _scaled(leaders.leader_weight, _log_ratio(epsilon)) + leaders.n * np.log1p(-epsilon)
    return syndrome_likelihoods(synd_code, _as_words(z_tilde), delta) + prior[None, :]


def deg_map_scores(cosets: CosetEnumeratorTable, synd_code: SyndromeCode, z_tilde,
                   epsilon: float, delta: float) -> np.ndarray:
    """Joint ``log sum_{e in coset} Pr(z~|e) Pr(e)`` for every coset.

    ``Pr(z~|e)`` is constant on a coset because its members share a syndrome,
    so the sum factors into a likelihood times the coset's prior mass.
    """
    _check_probabilities(epsilon, delta)
    like = syndrome_likelihoods(synd_code, _as_words(z_tilde), delta)
    return like[:, cosets.coset_syndromes] + cosets.log_prior_mass(epsilon)[None, :]


def _check_shapes(synd_code: SyndromeCode, n: int, r: int) -> None:
    if synd_code.code.n != n or synd_code.k_s != r:
        raise DecoderError(
            f"table (n={n}, n-k={r}) does not match syndrome code {synd_code.label}"
        )


def map_decode_batch(leaders: CosetLeaderTable, synd_code: SyndromeCode, z_tilde: np.ndarray,
                     epsilon: float, delta: float, u: np.ndarray | None = None) -> BatchDecision:
    _check_shapes(synd_code, leaders.n, leaders.r)
    scores = map_scores(leaders, synd_code, z_tilde, epsilon, delta)
    idx, ties = pick_argmax(scores, u)
    return BatchDecision(idx, leaders.leaders[idx], scores[np.arange(len(idx)), idx], ties)


def deg_map_decode_batch(cosets: CosetEnumeratorTable, synd_code: SyndromeCode,
                         z_tilde: np.ndarray, epsilon: float, delta: float,
                         u: np.ndarray | None = None) -> BatchDecision:
    _check_shapes(synd_code, cosets.n, cosets.r)
    scores = deg_map_scores(cosets, synd_code, z_tilde, epsilon, delta)
    idx, ties = pick_argmax(scores, u)
    return BatchDecision(idx, cosets.representatives[idx], scores[np.arange(len(idx)), idx], ties)


def _draw(rng: np.random.Generator | None) -> np.ndarray | None:
    return None if rng is None else rng.random(1)


def _check_length(synd_code: SyndromeCode, z_tilde: BitVector) -> None:
    if z_tilde.length != synd_code.m:
        raise DecoderError(f"observation has length {z_tilde.length}, expected m={synd_code.m}")


def _outcome(code: StabilizerCode, e_hat: int, score: float, ties: int) -> DecodeOutcome:
    e = BitVector(code.n, int(e_hat))
    s = code.H @ e
    return DecodeOutcome(s, e, (s, code.L @ e), float(score), int(ties))


def map_decode(table: CosetLeaderTable, synd_code: SyndromeCode, z_tilde: BitVector,
               epsilon: float, delta: float, rng: np.random.Generator | None = None) -> DecodeOutcome:
    """Most probable syndrome; the estimate is that syndrome's coset leader."""
    _check_length(synd_code, z_tilde)
    dec = map_decode_batch(table, synd_code, _as_words(z_tilde), epsilon, delta, _draw(rng))
    return _outcome(synd_code.code, dec.error[0], dec.score[0], dec.ties[0])


def deg_map_decode(enum_table: CosetEnumeratorTable, synd_code: SyndromeCode,
                   z_tilde: BitVector, epsilon: float, delta: float,
                   rng: np.random.Generator | None = None) -> DecodeOutcome:
    """Most probable coset; the estimate is its minimum-weight member."""
    _check_length(synd_code, z_tilde)
    dec = deg_map_decode_batch(enum_table, synd_code, _as_words(z_tilde), epsilon, delta,
                               _draw(rng))
    return _outcome(synd_code.code, dec.error[0], dec.score[0], dec.ties[0])


# -- brute-force oracles -------------------------------------------------

@lru_cache(maxsize=8)
def _naive_space(synd_code: SyndromeCode):
    code = synd_code.code
    if code.n > MAX_ENUMERATION_BITS:
        raise DecoderError(f"n={code.n} too large for brute force")
    every = np.arange(1 << code.n, dtype=np.uint64)
    z = batch_mat_vec(synd_code.H_o, every)
    weights = popcount(every).astype(np.int64)
    coset = batch_mat_vec(code.H, every).astype(np.int64)
    if code.L.nrows:
        coset |= batch_mat_vec(code.L, every).astype(np.int64) << code.r
    return z, weights, coset


def naive_joint_log_probs(synd_code: SyndromeCode, z_tilde: BitVector, epsilon: float,
                          delta: float) -> np.ndarray:
    """``log Pr(z~ | z(e)) + log Pr(e)`` for every error pattern ``e``."""
    _check_probabilities(epsilon, delta)
    z, weights, _ = _naive_space(synd_code)
    dist = popcount(z ^ np.uint64(z_tilde.bits))
    return (_scaled(dist, _log_ratio(delta)) + synd_code.m * np.log1p(-delta)
            + _scaled(weights, _log_ratio(epsilon)) + synd_code.code.n * np.log1p(-epsilon))


def naive_map_decode(code: StabilizerCode, synd_code: SyndromeCode, z_tilde: BitVector,
                     epsilon: float, delta: float,
                     rng: np.random.Generator | None = None) -> DecodeOutcome:
    """Maximize over all ``2**n`` error patterns directly."""
    _check_length(synd_code, z_tilde)
    scores = naive_joint_log_probs(synd_code, z_tilde, epsilon, delta)
    idx, ties = pick_argmax(scores[None, :], _draw(rng))
    return _outcome(code, idx[0], scores[idx[0]], ties[0])


def naive_coset_scores(code: StabilizerCode, synd_code: SyndromeCode, z_tilde: BitVector,
                       epsilon: float, delta: float) -> np.ndarray:
    """Per-coset ``log sum_e Pr(z~|e) Pr(e)`` summed literally over members."""
    joint = naive_joint_log_probs(synd_code, z_tilde, epsilon, delta)
    _, _, coset = _naive_space(synd_code)
    n_cosets = 1 << (code.r + code.k_q)
    top = joint.max()
    if not np.isfinite(top):
        return np.full(n_cosets, -np.inf)
    sums = np.bincount(coset, weights=np.exp(joint - top), minlength=n_cosets)
    with np.errstate(divide="ignore"):
        return np.log(sums) + top


def naive_deg_map_decode(code: StabilizerCode, synd_code: SyndromeCode, z_tilde: BitVector,
                         epsilon: float, delta: float,
                         rng: np.random.Generator | None = None) -> DecodeOutcome:
    _check_length(synd_code, z_tilde)
    scores = naive_coset_scores(code, synd_code, z_tilde, epsilon, delta)
    idx, ties = pick_argmax(scores[None, :], _draw(rng))
    c = int(idx[0])
    _, weights, coset = _naive_space(synd_code)
    members = np.flatnonzero(coset == c)
    e_hat = members[np.argmin(weights[members])]
    return _outcome(code, e_hat, scores[c], ties[0])


# -- failure predicate ---------------------------------------------------

def is_logical_failure(code: StabilizerCode, e_true: BitVector, e_hat: BitVector) -> bool:
    """True unless ``e_true + e_hat`` is a combination of degeneracy generators."""
    return not rowspace_contains(code.D, e_true ^ e_hat)


def is_logical_failure_fast(code: StabilizerCode, e_true: BitVector, e_hat: BitVector) -> bool:
    diff = e_true ^ e_hat
    return bool((code.H @ diff).bits or (code.L @ diff).bits)


def logical_failures(tables: DecodingTables, e_true: np.ndarray, e_hat: np.ndarray) -> np.ndarray:
    """Vectorized failure predicate via the precomputed syndrome and label lookups."""
    diff = (np.asarray(e_true, dtype=np.uint64) ^ np.asarray(e_hat, dtype=np.uint64)).astype(np.int64)
    return (tables.syndrome_of[diff] != 0) | (tables.label_of[diff] != 0)


# -- on-disk cache -------------------------------------------------------

def code_fingerprint(code: StabilizerCode) -> str:
    h = hashlib.sha256()
    for part in (code.name, code.H_full.format(""), code.D.format(""), code.L.format("")):
        h.update(part.encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


_ARRAYS = ("leaders", "leader_weight", "tie_count", "histograms", "representatives",
           "syndrome_of", "label_of")


def _arrays(tables: DecodingTables) -> dict[str, np.ndarray]:
    return {
        "leaders": tables.leaders.leaders,
        "leader_weight": tables.leaders.leader_weight,
        "tie_count": tables.leaders.tie_count,
        "histograms": tables.cosets.histograms,
        "representatives": tables.cosets.representatives,
        "syndrome_of": tables.syndrome_of,
        "label_of": tables.label_of,
    }


def _digest(arrays: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256()
    for name in _ARRAYS:
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(str(a.dtype).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def save_tables(path, tables: DecodingTables) -> None:
    """Write tables as ``.npz`` with format version, code fingerprint, seed and checksum."""
    arrays = _arrays(tables)
    meta = np.array([TABLE_FORMAT_VERSION, tables.leaders.seed], dtype=np.int64)
    buf = io.BytesIO()
    np.savez_compressed(buf, meta=meta, fingerprint=np.array(code_fingerprint(tables.code)),
                        checksum=np.array(_digest(arrays)), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_tables(path, code: StabilizerCode, seed: int | None = None) -> DecodingTables:
    with np.load(path, allow_pickle=False) as data:
        version, stored_seed = (int(x) for x in data["meta"])
        if version != TABLE_FORMAT_VERSION:
            raise DecoderError(f"table format {version} != {TABLE_FORMAT_VERSION}")
        if str(data["fingerprint"]) != code_fingerprint(code):
            raise DecoderError("cached tables belong to a different code")
        if seed is not None and seed != stored_seed:
            raise DecoderError(f"cached tables built with seed {stored_seed}, wanted {seed}")
        arrays = {name: data[name] for name in _ARRAYS}
        if _digest(arrays) != str(data["checksum"]):
            raise DecoderError("table checksum mismatch")
    return DecodingTables(
        code=code,
        leaders=CosetLeaderTable(code.n, code.r, arrays["leaders"], arrays["leader_weight"],
                                 arrays["tie_count"], stored_seed),
        cosets=CosetEnumeratorTable(code.n, code.r, code.k_q, arrays["histograms"],
                                    arrays["representatives"]),
        syndrome_of=arrays["syndrome_of"],
        label_of=arrays["label_of"],
    )


def cached_tables(code: StabilizerCode, seed: int = 0, cache_dir=None) -> DecodingTables:
    """Build tables, reusing ``cache_dir/<code>-<fingerprint>-<seed>.npz`` when present."""
    if cache_dir is None:
        return build_tables(code, seed)
    path = os.path.join(cache_dir, f"{code.name}-{code_fingerprint(code)}-{seed}.npz")
    if os.path.exists(path):
        return load_tables(path, code, seed)
    tables = build_tables(code, seed)
    os.makedirs(cache_dir, exist_ok=True)
    save_tables(path, tables)
    return tables
