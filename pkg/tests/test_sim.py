from __future__ import annotations

import csv
import io
import json
from math import sqrt

import numpy as np
import pytest

from singleshot.gf2 import BitMatrix
from singleshot.sim import (
    CSV_COLUMNS,
    ConfigError,
    RunConfig,
    load_manifest_config,
    prepare,
    run_point,
    run_sweep,
    save_manifest,
    synd_code_from_matrix,
    wilson_interval,
)


def config(**kw):
    base = dict(code="product16", synd="red21", decoder="map", q=0.013,
                epsilons=(0.02,), target_failures=20, seed=3, block_size=512)
    base.update(kw)
    return RunConfig(**base)


def test_wilson_zero_failures():
    # closed form for zero successes: upper = z^2 / (n + z^2)
    z = 1.959963984540054
    low, high = wilson_interval(0, 100)
    assert low == 0.0
    assert high == pytest.approx(z * z / (100 + z * z), rel=1e-12)
    assert high == pytest.approx(0.0370, abs=1e-4)


def test_wilson_symmetric_and_contains_estimate():
    low, high = wilson_interval(50, 100)
    assert low + high == pytest.approx(1.0)
    low, high = wilson_interval(7, 1000)
    assert low < 0.007 < high
    with pytest.raises(ValueError):
        wilson_interval(5, 0)
    with pytest.raises(ValueError):
        wilson_interval(11, 10)


@pytest.mark.parametrize("bad", [
    dict(epsilons=()), dict(epsilons=(0.7,)), dict(decoder="bp"), dict(target_failures=0),
    dict(workers=0), dict(q=None, delta=None), dict(delta_mode="per_row", q=None, delta=0.05),
    dict(seed=-1),
])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        config(**bad)


def test_config_dict_round_trip():
    cfg = config(epsilons=(0.01, 0.02), workers=2)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ConfigError):
        RunConfig.from_dict({**cfg.to_dict(), "colour": "red"})


def test_stops_at_target_failure():
    cfg = config(target_failures=15)
    point = run_point(cfg, 0.03)
    assert point.failures == 15
    assert 0 < point.trials


def test_stops_at_max_trials():
    cfg = config(max_trials=1000, target_failures=10_000)
    point = run_point(cfg, 0.01)
    assert point.trials == 1000
    assert point.failures < 10_000


def test_tiny_epsilon_rarely_fails():
    cfg = config(synd="red24", q=None, delta=0.0, max_trials=20_000, target_failures=100)
    point = run_point(cfg, 1e-6)
    assert point.failures == 0


def test_worker_count_does_not_change_results():
    cfg = config(epsilons=(0.02, 0.03), target_failures=25)
    serial = run_sweep(cfg)
    parallel = run_sweep(RunConfig.from_dict({**cfg.to_dict(), "workers": 2}))
    assert serial.to_csv() == parallel.to_csv()


def test_repeated_runs_are_identical():
    a = run_point(config(block_size=512), 0.02)
    b = run_point(config(block_size=512), 0.02)
    assert (a.trials, a.failures) == (b.trials, b.failures)


def test_noiseless_syndrome_makes_redundancy_irrelevant():
    # with delta = 0 both codes see the exact syndrome and decide identically
    common = dict(q=None, delta=0.0, epsilons=(0.03, 0.05), target_failures=40)
    red = run_sweep(config(synd="red21", **common))
    rep = run_sweep(config(synd="rep21", **common))
    assert [(p.trials, p.failures) for p in red.points] == [(p.trials, p.failures) for p in rep.points]


def test_pass_through_matches_exact_coset_mass(product):
    eps = 0.1
    cfg = config(decoder="none", target_failures=10**9, max_trials=40_000)
    ctx = prepare(cfg)
    hist = ctx.tables.cosets.histograms[0]
    w = np.arange(product.n + 1)
    p_ok = float((hist * eps**w * (1 - eps) ** (product.n - w)).sum())
    point = run_point(cfg, eps, context=ctx)
    sigma = sqrt(p_ok * (1 - p_ok) / point.trials)
    assert abs(point.p_e - (1 - p_ok)) < 4 * sigma


def test_failure_rate_grows_with_epsilon():
    result = run_sweep(config(epsilons=(0.01, 0.03, 0.06), target_failures=200))
    rates = [p.p_e for p in result.points]
    assert rates == sorted(rates)


def test_per_row_mode_runs():
    point = run_point(config(delta_mode="per_row"), 0.02)
    assert point.failures == 20
    assert point.delta == pytest.approx(0.0654, abs=2e-4)


def test_csv_and_manifest(tmp_path):
    cfg = config(epsilons=(0.02, 0.03))
    result = run_sweep(cfg)
    rows = list(csv.DictReader(io.StringIO(result.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert [float(r["epsilon"]) for r in rows] == [0.02, 0.03]
    path = tmp_path / "m.json"
    save_manifest(path, result)
    again = load_manifest_config(path)
    assert again == cfg
    assert run_sweep(again).to_csv() == result.to_csv()
    data = json.loads(path.read_text())
    assert set(data["fingerprints"]) == {"code", "synd_code", "synd_label"}


def test_on_point_callback_sees_each_point():
    seen = []
    run_sweep(config(epsilons=(0.02, 0.03)), on_point=seen.append)
    assert [p.epsilon for p in seen] == [0.02, 0.03]


def test_explicit_matrix_must_start_with_h(tmp_path, product):
    good = product.H.vstack(product.builtin_redundant)
    synd = synd_code_from_matrix(product, good, "file")
    assert synd.m == 8
    bad = BitMatrix(good.rows[1:] + good.rows[:1], product.n)
    with pytest.raises(ConfigError):
        synd_code_from_matrix(product, bad, "file")
    path = tmp_path / "ho.txt"
    good.dump(path)
    point = run_point(config(synd_matrix=str(path)), 0.02)
    assert point.failures == 20


def test_unknown_code_is_config_error():
    with pytest.raises(ConfigError):
        prepare(config(code="nosuch"))
    with pytest.raises(ConfigError):
        prepare(config(synd="red99"))
