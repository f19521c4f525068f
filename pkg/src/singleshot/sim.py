"""Monte Carlo estimation of the logical failure rate versus epsilon.

Trials are grouped into fixed-size blocks.  Block ``b`` of grid point ``p``
draws all of its randomness from a Philox stream keyed by
``(seed, p, b)``, so for a fixed block size the outcome of trial ``t``
depends only on ``(seed, p, t)`` and never on how blocks are spread over
worker processes.
The stopping rule is applied afterwards in trial order, which makes the
result bit-identical for any worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .codes import StabilizerCode, get_code
from .decoder import (
    DecodingTables,
    build_tables,
    code_fingerprint,
    deg_map_decode_batch,
    logical_failures,
    map_decode_batch,
)
from .gf2 import BitMatrix
from .noise import STREAM_TRIALS, NoiseSpec, pack_bits, stream
from .syndrome_code import SyndromeCode, assemble, build_from_spec

DECODERS = ("map", "deg_map")
# baseline that never corrects; used to sanity-check the estimator
PASS_THROUGH = "none"

CSV_COLUMNS = ("code", "synd_code", "decoder", "q", "delta", "epsilon", "trials", "failures",
               "p_e", "ci_low", "ci_high", "ties", "seed")


class ConfigError(ValueError):
    pass


def wilson_interval(failures: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= failures <= trials:
        raise ValueError("failures must lie in [0, trials]")
    z = NormalDist().inv_cdf(0.5 + confidence / 2)
    p = failures / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = 0.0 if failures == 0 else max(0.0, centre - half)
    high = 1.0 if failures == trials else min(1.0, centre + half)
    return float(low), float(high)


@dataclass(frozen=True)
class RunConfig:
    code: str = "product16"
    synd: str = "red21"
    decoder: str = "map"
    q: float | None = 0.013
    delta: float | None = None
    delta_mode: str = "uniform"
    epsilons: tuple[float, ...] = (0.01,)
    max_trials: int = 10_000_000
    target_failures: int = 100
    seed: int = 0
    workers: int = 1
    strategy: str = "exhaustive"
    block_size: int = 4096
    synd_matrix: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if not self.epsilons:
            raise ConfigError("epsilon grid is empty")
        for e in self.epsilons:
            if not 0.0 < e < 0.5:
                raise ConfigError(f"epsilon {e} outside (0, 0.5)")
        if self.decoder not in DECODERS + (PASS_THROUGH,):
            raise ConfigError(f"unknown decoder {self.decoder!r}; choose map or deg_map")
        if self.target_failures < 1:
            raise ConfigError("target_failures must be >= 1")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.block_size < 1:
            raise ConfigError("block_size must be >= 1")
        if self.q is None and self.delta is None:
            raise ConfigError("give q or delta")
        if self.delta_mode not in ("uniform", "per_row"):
            raise ConfigError(f"unknown delta_mode {self.delta_mode!r}")
        if self.delta_mode == "per_row" and self.q is None:
            raise ConfigError("per_row delta mode needs q")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["epsilons"] = list(self.epsilons)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "epsilons" in data:
            data["epsilons"] = tuple(data["epsilons"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def noise(self, epsilon: float) -> NoiseSpec:
        return NoiseSpec(epsilon=epsilon, q=self.q, delta=self.delta,
                         delta_mode=self.delta_mode, seed=self.seed)


@dataclass
class PointResult:
    epsilon: float
    delta: float
    trials: int
    failures: int
    ties: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def p_e(self) -> float:
        return self.failures / self.trials

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.failures, self.trials)

    @property
    def sigma(self) -> float:
        p = self.p_e
        return float(np.sqrt(max(p * (1 - p), 1e-300) / self.trials))


@dataclass
class RunResult:
    config: RunConfig
    points: list[PointResult]
    fingerprints: dict[str, str]

    def csv_rows(self) -> list[dict]:
        return [csv_row(self.config, p) for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_csv(buf, self.config, self.points)
        return buf.getvalue()

    def manifest(self) -> dict:
        return {
            "version": __version__,
            "config": self.config.to_dict(),
            "fingerprints": self.fingerprints,
            "results": [dict(csv_row(self.config, p), wall_time=p.wall_time) for p in self.points],
        }


def csv_row(config: RunConfig, point: PointResult) -> dict:
    low, high = point.interval
    return {
        "code": config.code,
        "synd_code": config.synd if config.synd_matrix is None else config.synd_matrix,
        "decoder": config.decoder,
        "q": "" if config.q is None else repr(config.q),
        "delta": repr(point.delta),
        "epsilon": repr(point.epsilon),
        "trials": point.trials,
        "failures": point.failures,
        "p_e": repr(point.p_e),
        "ci_low": repr(low),
        "ci_high": repr(high),
        "ties": point.ties,
        "seed": config.seed,
    }


def write_csv(fh, config: RunConfig, points: Sequence[PointResult], header: bool = True) -> None:
    writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    if header:
        writer.writeheader()
    for p in points:
        writer.writerow(csv_row(config, p))


# -- simulation context ------------------------------------------------------

def synd_code_from_matrix(code: StabilizerCode, H_o: BitMatrix, label: str) -> SyndromeCode:
    """Wrap an explicit measured-row matrix whose first ``n - k`` rows are ``H``."""
    if H_o.ncols != code.n:
        raise ConfigError(f"matrix has {H_o.ncols} columns, code has n={code.n}")
    if H_o.rows[: code.r] != code.H.rows:
        raise ConfigError(f"the first {code.r} rows of the matrix must equal H of {code.name}")
    return assemble(code, H_o.take_rows(range(code.r, H_o.nrows)), label)


@dataclass(frozen=True)
class SimContext:
    code: StabilizerCode
    synd_code: SyndromeCode
    tables: DecodingTables
    flip_probs: np.ndarray
    decoder_delta: float


def prepare(config: RunConfig, tables: DecodingTables | None = None) -> SimContext:
    try:
        code = get_code(config.code)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if config.synd_matrix is not None:
        synd = synd_code_from_matrix(code, BitMatrix.load(config.synd_matrix), config.synd_matrix)
    else:
        try:
            synd = build_from_spec(code, config.synd, config.strategy)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if tables is None:
        tables = build_tables(code, config.seed)
    elif tables.code != code:
        raise ConfigError(f"tables were built for {tables.code.name}, config uses {code.name}")
    spec = config.noise(0.0)
    delta = spec.resolve_delta(synd.H_o)
    if not 0.0 <= delta < 0.5:
        raise ConfigError(f"derived delta {delta} outside [0, 0.5)")
    probs = spec.flip_probabilities(synd.row_weights)
    return SimContext(code, synd, tables, probs, delta)


def simulate_block(ctx: SimContext, decoder: str, seed: int, point: int, block: int,
                   epsilon: float, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Run ``size`` trials of block ``block``; returns (failed, tied) boolean arrays."""
    rng = stream(seed, STREAM_TRIALS, point, block)
    n, m = ctx.code.n, ctx.synd_code.m
    e = pack_bits(rng.random((size, n)) < epsilon)
    flips = pack_bits(rng.random((size, m)) < ctx.flip_probs)
    u = rng.random(size)
    s = ctx.tables.syndrome_of[e.astype(np.int64)].astype(np.int64)
    z_tilde = ctx.synd_code.codewords[s] ^ flips
    if decoder == "map":
        dec = map_decode_batch(ctx.tables.leaders, ctx.synd_code, z_tilde, epsilon,
                               ctx.decoder_delta, u)
    elif decoder == "deg_map":
        dec = deg_map_decode_batch(ctx.tables.cosets, ctx.synd_code, z_tilde, epsilon,
                                   ctx.decoder_delta, u)
    else:
        failed = logical_failures(ctx.tables, e, np.zeros_like(e))
        return failed, np.zeros(size, dtype=bool)
    return logical_failures(ctx.tables, e, dec.error), dec.ties > 1


_WORKER_CTX: SimContext | None = None


def _init_worker(config_dict: dict) -> None:
    global _WORKER_CTX
    _WORKER_CTX = prepare(RunConfig.from_dict(config_dict))


def _worker_block(args) -> tuple[np.ndarray, np.ndarray]:
    decoder, seed, point, block, epsilon, size = args
    return simulate_block(_WORKER_CTX, decoder, seed, point, block, epsilon, size)


def run_point(config: RunConfig, epsilon: float, point_index: int = 0,
              context: SimContext | None = None, pool: ProcessPoolExecutor | None = None) -> PointResult:
    """Simulate one grid point until ``target_failures`` or ``max_trials``."""
    ctx = context if context is not None else prepare(config)
    if ctx.code.name != config.code:
        raise ConfigError(f"context built for {ctx.code.name}, config uses {config.code}")
    start = time.perf_counter()
    trials = failures = ties = 0
    block = 0
    wave = config.workers if pool is not None else 1
    while True:
        jobs = [(config.decoder, config.seed, point_index, block + i, epsilon, config.block_size)
                for i in range(wave)]
        if pool is not None:
            outputs = list(pool.map(_worker_block, jobs))
        else:
            outputs = [simulate_block(ctx, *job) for job in jobs]
        block += wave
        for failed, tied in outputs:
            take = min(len(failed), config.max_trials - trials)
            failed, tied = failed[:take], tied[:take]
            cum = np.cumsum(failed)
            need = config.target_failures - failures
            if cum.size and cum[-1] >= need:
                take = int(np.searchsorted(cum, need)) + 1
                failed, tied = failed[:take], tied[:take]
            trials += take
            failures += int(failed.sum())
            ties += int(tied.sum())
            if failures >= config.target_failures or trials >= config.max_trials:
                return PointResult(epsilon, ctx.decoder_delta, trials, failures, ties,
                                   time.perf_counter() - start)


def fingerprints(ctx: SimContext) -> dict[str, str]:
    synd = hashlib.sha256(ctx.synd_code.H_o.format("").encode()).hexdigest()[:16]
    return {"code": code_fingerprint(ctx.code), "synd_code": synd,
            "synd_label": ctx.synd_code.label}


def run_sweep(config: RunConfig, on_point: Callable[[PointResult], None] | None = None,
              context: SimContext | None = None) -> RunResult:
    """Run every grid point in order, reporting each through ``on_point`` as it finishes."""
    ctx = context if context is not None else prepare(config)
    points: list[PointResult] = []
    pool = None
    if config.workers > 1:
        pool = ProcessPoolExecutor(config.workers, initializer=_init_worker,
                                   initargs=(config.to_dict(),))
    try:
        for i, eps in enumerate(config.epsilons):
            result = run_point(config, eps, i, ctx, pool)
            points.append(result)
            if on_point is not None:
                on_point(result)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return RunResult(config, points, fingerprints(ctx))


def save_manifest(path, result: RunResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return RunConfig.from_dict(data["config"] if "config" in data else data)
