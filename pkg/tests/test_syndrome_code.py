from __future__ import annotations

import numpy as np
import pytest

from singleshot.codes import get_code
from singleshot.gf2 import BitMatrix, BitVector, mat_mul, rank, span_array
from singleshot.syndrome_code import (
    SelectionError,
    assemble,
    build_concatenated_mixed,
    build_from_spec,
    build_repetition,
    build_variant,
    generate_candidates,
    parse_synd_spec,
    select_rows,
    weight_six_combinations,
)

from conftest import load_fixture

CONSTRUCTIONS = [
    ("product16", "red24"), ("product16", "red21"), ("product16", "rep21"),
    ("product16", "con24"), ("product16", "rep28"), ("product16", "con28"),
    ("toric18", "red33"), ("toric18", "rep24"), ("toric18", "red27"),
    ("toric18", "red32"), ("toric18", "rep32"), ("toric18", "con27"),
]


@pytest.fixture(scope="module", params=CONSTRUCTIONS, ids=lambda p: f"{p[0]}-{p[1]}")
def construction(request):
    name, spec = request.param
    return build_from_spec(get_code(name), spec)


def test_product_candidates(product):
    cands = generate_candidates(product)
    assert cands.nrows == 17
    assert cands.row_weights() == [4] + [6] * 16
    assert len(set(cands.rows)) == 17


def test_toric_weight_six_combinations(toric):
    combos = weight_six_combinations(toric)
    assert len(combos) == 24
    # each combination is the sum of a few vertex rows; the smallest such set
    # is an adjacent pair (18 of them) or a full row/column of the torus (6)
    words = span_array(toric.H_full.rows, toric.n)
    sizes = np.array([bin(i).count("1") for i in range(len(words))])
    smallest = []
    for v in combos:
        hits = sizes[words == np.uint64(v)]
        smallest.append(int(hits.min()))
    assert sorted(smallest) == [2] * 18 + [3] * 6


def test_toric_non_adjacent_pairs_have_weight_eight(toric):
    rows = toric.H_full.rows
    weights = [bin(rows[i] ^ rows[j]).count("1") for i in range(9) for j in range(i + 1, 9)]
    assert weights.count(6) == 18
    assert weights.count(8) == 18


def test_product_reference_a_reproduced_exactly(product):
    synd = assemble(product, generate_candidates(product), "red(24,7)")
    assert synd.A == load_fixture("product16_A")
    assert (synd.m, synd.k_s, synd.d_min) == (24, 7, 8)


def test_toric_reference_columns_are_candidates(toric):
    reference = load_fixture("toric18_A")
    assert reference.shape == (8, 25)
    cands = set(generate_candidates(toric).rows)
    P = mat_mul(reference.T, toric.H)
    assert set(P.rows) == cands
    synd = assemble(toric, P, "reference")
    assert (synd.m, synd.k_s, synd.d_min) == (33, 8, 10)
    built = build_from_spec(toric, "red33")
    assert set(built.A.T.rows) == set(reference.T.rows)


def test_encoding_identity(construction):
    code = construction.code
    rng = np.random.default_rng(11)
    for bits in rng.integers(0, 1 << code.n, size=1000):
        e = BitVector(code.n, int(bits))
        assert construction.measure(e) == construction.encode(code.syndrome(e))


def test_measured_rank_equals_syndrome_dimension(construction):
    assert rank(construction.H_o) == construction.code.r
    assert construction.k_s == construction.code.r
    assert construction.G_s.rows[: construction.k_s] == BitMatrix.identity(construction.k_s).hstack(
        construction.A).rows


def test_codewords_table_matches_encoding(construction):
    table = construction.codewords
    rng = np.random.default_rng(5)
    for s in rng.integers(0, 1 << construction.k_s, size=50):
        expect = construction.encode(BitVector(construction.k_s, int(s)))
        assert int(table[s]) == expect.bits


@pytest.mark.parametrize("repeats", [1, 2, 3, 4])
def test_repetition_distance_equals_repeats(product, repeats):
    synd = build_repetition(product, repeats)
    assert synd.m == 7 * repeats
    assert synd.d_min == repeats


def test_no_redundancy_gives_identity_generator(toric):
    synd = assemble(toric, None, "plain")
    assert synd.G_s == BitMatrix.identity(8)
    assert synd.A.shape == (8, 0)
    assert synd.d_min == 1


@pytest.mark.parametrize("name, m", [("product16", 21), ("product16", 19), ("toric18", 27), ("toric18", 24)])
def test_exhaustive_dominates_greedy(name, m):
    code = get_code(name)
    cands = generate_candidates(code)
    best = select_rows(code, cands, m, "exhaustive")
    greedy = select_rows(code, cands, m, "greedy")
    assert (best.d_min, -best.multiplicity) >= (greedy.d_min, -greedy.multiplicity)
    assert best.m == greedy.m == m


def test_exhaustive_matches_brute_force_on_small_target(product):
    # every 3-row subset scored from scratch with min_distance
    import itertools
    cands = generate_candidates(product)
    scores = []
    for subset in itertools.combinations(range(cands.nrows), 3):
        s = assemble(product, cands.take_rows(subset), "x")
        scores.append(((s.d_min, -s.multiplicity), subset))
    top = max(score for score, _ in scores)
    first = next(subset for score, subset in scores if score == top)
    chosen = select_rows(product, cands, 10)
    assert (chosen.d_min, -chosen.multiplicity) == top
    assert chosen.selected == first


def test_red21_row_composition(product):
    synd = build_from_spec(product, "red21")
    assert (synd.d_min, synd.multiplicity) == (6, 4)
    assert synd.weight_profile() == {4: 7, 6: 14}


def test_concatenated_mixed_appends_repeats(product):
    base = build_variant(product, "red", 24)
    mixed = build_concatenated_mixed(product, base, range(4))
    assert mixed.m == 28
    assert mixed.H_o.rows[24:] == base.H_o.rows[:4]
    assert build_concatenated_mixed(product, base, ()) is base
    with pytest.raises(IndexError):
        build_concatenated_mixed(product, base, [24])


@pytest.mark.parametrize("text, expect", [
    ("red21", ("red", 21)), ("red(21,7)", ("red", 21)), ("rep24", ("rep", 24)), ("con(28,7)", ("con", 28)),
])
def test_parse_synd_spec(text, expect):
    assert parse_synd_spec(text) == expect


@pytest.mark.parametrize("name, variant, m", [
    ("product16", "red", 30), ("product16", "rep", 22), ("product16", "red", 5),
    ("toric18", "con", 30), ("product16", "bogus", 21),
])
def test_infeasible_targets_rejected(name, variant, m):
    with pytest.raises(SelectionError):
        build_variant(get_code(name), variant, m)


def test_unparseable_spec_rejected(product):
    with pytest.raises(SelectionError):
        build_from_spec(product, "red-21")


def test_average_delta_reported(product):
    synd = build_from_spec(product, "rep21")
    assert synd.average_delta(0.013) == pytest.approx(0.0500, abs=2e-4)
    assert any("average delta" in line for line in synd.describe(0.013))
