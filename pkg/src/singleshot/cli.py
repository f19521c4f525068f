"""Command-line interface: ``singleshot {codes,synd-code,simulate,export}``.

Exit status is 0 on success, 2 for usage or configuration errors, 1 for
internal errors and 130 when a simulation is interrupted (rows finished so
far are already flushed to the CSV).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from collections import defaultdict

import numpy as np

from .codes import BUILTIN_CODES, get_code, validate_code
from .gf2 import BitMatrix, min_distance
from .noise import NoiseConfigError
from .sim import (
    CSV_COLUMNS,
    ConfigError,
    RunConfig,
    RunResult,
    csv_row,
    fingerprints,
    prepare,
    run_sweep,
    save_manifest,
)
from .syndrome_code import (
    SelectionError,
    build_from_spec,
    build_variant,
    generate_candidates,
    select_rows,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INTERRUPTED = 130


class UsageError(Exception):
    pass


def parse_eps_grid(text: str, log: bool = False) -> tuple[float, ...]:
    """``start:stop:count`` (inclusive) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad epsilon grid {text!r}; expected start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise UsageError(f"bad epsilon grid {text!r}") from None
        if count < 1:
            raise UsageError("epsilon grid needs count >= 1")
        if count == 1:
            return (start,)
        if log:
            if start <= 0 or stop <= 0:
                raise UsageError("log grid needs positive endpoints")
            values = np.geomspace(start, stop, count)
        else:
            values = np.linspace(start, stop, count)
        return tuple(float(round(v, 12)) for v in values)
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"bad epsilon list {text!r}") from None


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file (keys as flag names) or a JSON run manifest."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        data = data.get("config", data)
        if "epsilons" in data:
            data = dict(data)
            data["eps"] = ",".join(repr(float(e)) for e in data.pop("epsilons"))
        return {k.replace("_", "-"): v for k, v in data.items()}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


SIM_DEFAULTS = {
    "code": "product16",
    "synd": "red21",
    "decoder": "map",
    "q": None,
    "delta": None,
    "delta-mode": "uniform",
    "eps": None,
    "log-eps": False,
    "target-failures": 100,
    "max-trials": 10_000_000,
    "seed": 0,
    "workers": 1,
    "strategy": "exhaustive",
    "block-size": 4096,
    "synd-matrix": None,
}

_CASTS = {
    "q": float, "delta": float, "target-failures": int, "max-trials": int, "seed": int,
    "workers": int, "block-size": int,
}


def _as_bool(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "on")


def build_run_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(SIM_DEFAULTS)
    if args.config:
        from_file = read_config_file(args.config)
        unknown = set(from_file) - set(SIM_DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update({k: v for k, v in from_file.items() if v is not None and v != ""})
    for key in SIM_DEFAULTS:
        value = getattr(args, key.replace("-", "_"))
        if value is not None:
            merged[key] = value
    try:
        for key, cast in _CASTS.items():
            if merged[key] is not None:
                merged[key] = cast(merged[key])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if merged["eps"] is None:
        raise UsageError("an epsilon grid is required (--eps start:stop:count)")
    eps = merged["eps"]
    grid = tuple(eps) if isinstance(eps, (list, tuple)) else parse_eps_grid(
        str(eps), _as_bool(merged["log-eps"]))
    if merged["q"] is None and merged["delta"] is None:
        merged["q"] = 0.013
    return RunConfig(
        code=merged["code"], synd=merged["synd"], decoder=merged["decoder"], q=merged["q"],
        delta=merged["delta"], delta_mode=merged["delta-mode"], epsilons=grid,
        max_trials=merged["max-trials"], target_failures=merged["target-failures"],
        seed=merged["seed"], workers=merged["workers"], strategy=merged["strategy"],
        block_size=merged["block-size"], synd_matrix=merged["synd-matrix"],
    )


# -- subcommands ---------------------------------------------------------------

def cmd_codes(args) -> int:
    if args.action == "list":
        for name in sorted(BUILTIN_CODES):
            print(name)
        return EXIT_OK
    if not args.code:
        raise UsageError("codes inspect needs --code")
    code = get_code(args.code)
    report = validate_code(code, strict=False)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.ok else EXIT_INTERNAL


def _write_synd_outputs(synd, out_dir: str | None) -> None:
    if not out_dir:
        return
    os.makedirs(out_dir, exist_ok=True)
    stem = synd.label.replace("(", "").replace(")", "").replace(",", "_")
    synd.H_o.dump(os.path.join(out_dir, f"{synd.code.name}_{stem}_Ho.txt"))
    synd.G_s.dump(os.path.join(out_dir, f"{synd.code.name}_{stem}_Gs.txt"))


def cmd_synd_code(args) -> int:
    code = get_code(args.code) if args.code else None
    if args.action == "distance":
        if args.matrix:
            G = BitMatrix.load(args.matrix)
            d, mult = min_distance(G)
            print(f"d_min: {d}")
            print(f"multiplicity: {mult}")
            return EXIT_OK
        if code is None or not args.synd:
            raise UsageError("distance needs --matrix, or --code with --synd")
        synd = build_from_spec(code, args.synd, args.strategy)
    elif code is None:
        raise UsageError(f"synd-code {args.action} needs --code")
    elif args.action == "build":
        if args.m is None or args.variant is None:
            raise UsageError("build needs --variant and --m")
        synd = build_variant(code, args.variant, args.m, args.strategy)
    else:
        if args.m is None:
            raise UsageError("select needs --m")
        synd = select_rows(code, generate_candidates(code), args.m, args.strategy)
    for line in synd.describe(args.q):
        print(line)
    _write_synd_outputs(synd, args.out_dir)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = build_run_config(args)
    ctx = prepare(config)
    print(f"# {ctx.synd_code.label} on {ctx.code.name}, decoder={config.decoder}, "
          f"delta={ctx.decoder_delta:.6f}", file=sys.stderr)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    out.flush()
    done = []

    def on_point(point):
        done.append(point)
        writer.writerow(csv_row(config, point))
        out.flush()
        low, high = point.interval
        print(f"eps={point.epsilon:g} trials={point.trials} failures={point.failures} "
              f"p_e={point.p_e:.3e} [{low:.3e}, {high:.3e}]", file=sys.stderr)

    try:
        result = run_sweep(config, on_point, ctx)
    except KeyboardInterrupt:
        print("interrupted; partial results flushed", file=sys.stderr)
        if args.manifest:
            save_manifest(args.manifest, RunResult(config, done, fingerprints(ctx)))
        return EXIT_INTERRUPTED
    finally:
        if out is not sys.stdout:
            out.close()
    if args.manifest:
        save_manifest(args.manifest, result)
    return EXIT_OK


def cmd_export(args) -> int:
    if args.what == "matrices":
        if not args.code:
            raise UsageError("export matrices needs --code")
        code = get_code(args.code)
        os.makedirs(args.out_dir, exist_ok=True)
        for name, M in (("H_full", code.H_full), ("H", code.H), ("D", code.D), ("L", code.L)):
            M.dump(os.path.join(args.out_dir, f"{code.name}_{name}.txt"))
        if args.synd:
            _write_synd_outputs(build_from_spec(code, args.synd, args.strategy), args.out_dir)
        return EXIT_OK
    if not args.inputs:
        raise UsageError("export curves needs result CSV files")
    series: dict[str, list[dict]] = defaultdict(list)
    for path in args.inputs:
        with open(path, encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = f"{row['code']}/{row['synd_code']}/{row['decoder']}/delta={row['delta']}"
                series[key].append(row)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("# series epsilon p_e ci_low ci_high failures trials\n")
        for key, rows in series.items():
            for row in sorted(rows, key=lambda r: float(r["epsilon"])):
                out.write(f"{key} {row['epsilon']} {row['p_e']} {row['ci_low']} "
                          f"{row['ci_high']} {row['failures']} {row['trials']}\n")
            out.write("\n\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singleshot",
        description="Syndrome error-correcting codes and exact single-shot decoders.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("codes", help="list or inspect built-in codes")
    p.add_argument("action", choices=["list", "inspect"])
    p.add_argument("--code", choices=sorted(BUILTIN_CODES))
    p.set_defaults(func=cmd_codes)

    p = sub.add_parser("synd-code", help="build, select or measure syndrome codes")
    p.add_argument("action", choices=["build", "select", "distance"])
    p.add_argument("--code", choices=sorted(BUILTIN_CODES))
    p.add_argument("--variant", choices=["red", "rep", "con"])
    p.add_argument("--m", type=int)
    p.add_argument("--synd", help="shorthand such as red21 or rep(24,8)")
    p.add_argument("--matrix", help="generator matrix file for 'distance'")
    p.add_argument("--strategy", choices=["exhaustive", "greedy"], default="exhaustive")
    p.add_argument("--q", type=float, help="report the average delta at this q")
    p.add_argument("--out-dir", help="write H_o and G_s matrix files here")
    p.set_defaults(func=cmd_synd_code)

    p = sub.add_parser("simulate", help="Monte Carlo failure-rate sweep")
    p.add_argument("--config", help="key = value file or JSON manifest; flags override it")
    p.add_argument("--code", choices=sorted(BUILTIN_CODES))
    p.add_argument("--synd", help="syndrome code, e.g. red21, rep21, con28")
    p.add_argument("--synd-matrix", help="explicit H_o matrix file (first rows must be H)")
    p.add_argument("--decoder", choices=["map", "deg_map"])
    p.add_argument("--q", type=float, help="per-interaction failure probability")
    p.add_argument("--delta", type=float, help="pin the syndrome flip probability")
    p.add_argument("--delta-mode", choices=["uniform", "per_row"])
    p.add_argument("--eps", help="epsilon grid start:stop:count or comma list")
    p.add_argument("--log-eps", action="store_const", const=True, default=None)
    p.add_argument("--target-failures", type=int)
    p.add_argument("--max-trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--strategy", choices=["exhaustive", "greedy"])
    p.add_argument("--block-size", type=int)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--manifest", help="JSON run manifest path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="write matrices or plot-ready curve tables")
    p.add_argument("what", choices=["matrices", "curves"])
    p.add_argument("inputs", nargs="*", help="result CSVs for 'curves'")
    p.add_argument("--code", choices=sorted(BUILTIN_CODES))
    p.add_argument("--synd")
    p.add_argument("--strategy", choices=["exhaustive", "greedy"], default="exhaustive")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError, SelectionError, NoiseConfigError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        return EXIT_INTERRUPTED
    except Exception as exc:  # noqa: BLE001
        print(f"{parser.prog}: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
