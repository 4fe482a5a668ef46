import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from leptonstore.codec.registry import DEFAULT_REGISTRY
from leptonstore.errors import (ChecksumMismatch, DegenerateProfile, FormatVersionMismatch, IndivisibleDepth,
                                InvariantViolation, TableMismatch)
from leptonstore.store import (AccessHistogram, AllocationTable, BinState, ModelStore, TableSet, bin_probability,
                               bin_update, build_hash, build_table, build_weights, derive_boundaries,
                               load_tables, profile_access, save_tables, space, tag_width)
from leptonstore.store.tables import OPTIMIZED

from oracles import SetAssociativeOracle, boundaries_by_rule, ceil_log2, clip_renormalize, water_fill

R = DEFAULT_REGISTRY


# -- bins ---------------------------------------------------------------------------

def test_bin_examples():
    assert bin_probability(BinState()) == 0.5
    b = bin_update(BinState(), 0)
    assert (b.c0, b.c1) == (1, 0) and bin_probability(b) == pytest.approx(2 / 3)
    for _ in range(299):
        b = bin_update(b, 0)
    assert b.c0 <= 255 and bin_probability(b) > 0.95


def _simulate(bits):
    c0 = c1 = 0
    for bit in bits:
        if bit:
            if c1 + 1 > 255:
                c0, c1 = c0 // 2, c1 // 2
            c1 += 1
        else:
            if c0 + 1 > 255:
                c0, c1 = c0 // 2, c1 // 2
            c0 += 1
    return c0, c1


@given(st.lists(st.integers(0, 1), max_size=1500))
def test_bin_update_matches_simulation(bits):
    b = BinState()
    for bit in bits:
        b = bin_update(b, bit)
        assert 0 < bin_probability(b) < 1 and max(b.c0, b.c1) <= 255
    assert (b.c0, b.c1) == _simulate(bits)


# -- histogram ----------------------------------------------------------------------

def test_presence_semantics():
    h = AccessHistogram()
    profile_access(h, [("sign", 5)] * 50, "img")
    assert h.model_counts("sign")[5] == 1 and h.images_total == 1


def test_probability_three_of_four():
    h = AccessHistogram()
    for i in range(4):
        h.add_image({"sign": np.array([7] if i < 3 else [8])})
    assert h.probabilities("sign")[7] == 0.75


def test_histogram_csv_round_trip():
    h = AccessHistogram()
    h.add_image({"sign": np.array([1, 2]), "exp_7x7_0": np.array([10779])})
    h.add_image({"res_dc_3": np.array([0])})
    text = h.to_csv()
    assert text.splitlines()[0] == "model,flat_index,count,images_total"
    assert AccessHistogram.from_csv(text) == h
    empty = AccessHistogram()
    empty.images_total = 3
    assert AccessHistogram.from_csv(empty.to_csv()) == empty


def test_merge_equals_union(profiles):
    stat, test = profiles
    joint = stat.merge(test).histogram()
    assert stat.histogram().merge(test.histogram()) == joint
    assert np.all(joint.counts <= joint.images_total)


# -- weights -------------------------------------------------------------------------

def test_weights_no_clipping():
    W = build_weights([0.5, 0.3, 0.2, 0.0], 2)
    assert np.allclose(W, [0.5, 0.3, 0.2, 0.0], atol=1e-12)


def test_weights_fixed_point():
    W = build_weights([0.9, 0.05, 0.05, 0.0], 2)
    assert np.allclose(W, [0.5, 0.25, 0.25, 0.0], atol=1e-6)
    assert np.allclose(clip_renormalize([0.9, 0.05, 0.05, 0.0], 2), [0.5, 0.25, 0.25, 0.0], atol=1e-6)


def test_weights_uniform():
    W = build_weights(np.ones(10), 4)
    assert np.allclose(W, 0.1)


def test_weights_degenerate():
    with pytest.raises(DegenerateProfile):
        build_weights(np.zeros(5), 2)


profiles_st = st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 1.0)), min_size=2, max_size=60)


@settings(max_examples=300, deadline=None)
@given(profiles_st, st.integers(1, 64))
def test_weight_properties(P, depth):
    P = np.array(P)
    k = np.count_nonzero(P)
    assume(k >= 1)
    W = build_weights(P, depth)
    assert abs(W.sum() - 1) <= 1e-9
    assert np.array_equal(W == 0, P == 0)
    if k >= depth:
        assert W.max() <= (1 + 1e-9) / depth
        assert np.allclose(W, water_fill(P, depth), atol=1e-9)
    else:
        assert np.allclose(W[P > 0], 1 / k)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 32), st.data())
def test_low_probability_indexes_amplified(depth, data):
    n = data.draw(st.integers(depth + 1, depth + 60))
    P = np.array(data.draw(st.lists(st.floats(1e-6, 1.0), min_size=n, max_size=n)))
    P[0] = P.sum()              # one hot index forces clipping
    p = P / P.sum()
    assert p.max() > 1 / depth
    W = build_weights(P, depth)
    uncapped = (p > 0) & (W < 1 / depth * (1 - 1e-9))
    assert np.all(W[uncapped] / p[uncapped] >= 1 - 1e-12)


# -- hash and boundaries -----------------------------------------------------------

def test_hash_examples():
    H = build_hash([0.5, 0.25, 0.25, 0.0], 2)
    assert np.allclose(H, [1.0, 1.5, 2.0, 2.0])
    assert np.allclose(build_hash([1, 0, 0], 7), [7, 7, 7])
    W = build_weights(np.random.default_rng(0).random(50), 16)
    assert space(build_hash(W, 16)).sum() == pytest.approx(16)
    assert np.allclose(space(build_hash(W, 16)), W * 16)


def test_boundary_examples():
    b = derive_boundaries([1.0, 1.5, 2.0, 2.0], 1, 2)
    assert b.tolist() == [1]
    t = AllocationTable("x", 4, 2, 1, b)
    assert [t.set_of(i) for i in range(4)] == [0, 1, 1, 1]
    assert derive_boundaries([1.0, 1.5, 2.0, 2.0], 2, 2).size == 0    # M=1: fully associative
    with pytest.raises(IndivisibleDepth):
        derive_boundaries([1.0, 3.0], 2, 3)


def test_one_active_index_per_unit_gets_private_sets():
    P = np.array([0, 0.3, 0, 0, 0.9, 0.1, 0, 0.5])
    k = np.count_nonzero(P)
    t = build_table("x", P, k, 1)
    sets = [t.set_of(i) for i in np.flatnonzero(P)]
    assert sorted(sets) == list(range(k))


@settings(max_examples=200, deadline=None)
@given(profiles_st, st.integers(1, 8), st.integers(1, 8))
def test_boundaries_follow_rule(P, m, n):
    P = np.array(P)
    assume(np.count_nonzero(P) >= 1)
    depth = m * n
    H = build_hash(build_weights(P, depth), depth)
    got = derive_boundaries(H, n, depth)
    assert got.tolist() == boundaries_by_rule(H.tolist(), n)
    assert np.all(np.diff(got) >= 0)
    assert np.all(np.diff(H) >= -1e-12) and abs(H[-1] - depth) < 1e-6


@pytest.mark.parametrize("width,bits", [(2156, 12), (1, 0), (256, 8), (257, 9), (2, 1)])
def test_tag_width(width, bits):
    assert tag_width(width) == bits == ceil_log2(width)


# -- bounded store -------------------------------------------------------------------

def _table(model, P, depth, ways):
    return build_table(model, np.asarray(P, float), depth, ways)


def test_first_access_allocates_way_zero():
    P = np.ones(R["exp_dc_0"].bins)
    store = ModelStore(TableSet({"exp_dc_0": _table("exp_dc_0", P, 12, 4)}))
    m = R.id("exp_dc_0")
    slot = store.lookup(m, 100)
    s = store.set_of(m, 100)
    assert slot == store.slot_base[m] + s * 4
    assert store.allocated(m)[s][1] == [100 - (store.bnd[store.bnd_off[m] + s - 1] if s else 0)]


def test_pigeonhole_single_set():
    m = R.id("res_7x7_0")
    n = 5
    t = AllocationTable("res_7x7_0", R[m].bins, n, n, np.zeros(0, np.int64), None, OPTIMIZED).validate()
    store = ModelStore(TableSet({"res_7x7_0": t}))
    slots = [store.lookup(m, i) for i in range(n)]
    assert None not in slots and len(set(slots)) == n
    assert store.lookup(m, n) is None
    assert store.overflow_records()[0].index == n
    assert [store.lookup(m, i) for i in range(n)] == slots   # hits still work


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.lists(st.integers(0, 195), max_size=200), st.integers(0, 99))
def test_store_matches_set_associative_oracle(m_sets, ways, accesses, seed):
    name = "res_edge_0"
    rng = np.random.default_rng(seed)
    P = rng.random(196) * (rng.random(196) < 0.5)
    assume(P.any())
    t = _table(name, P, m_sets * ways, ways)
    store = ModelStore(TableSet({name: t}))
    oracle = SetAssociativeOracle(t.boundaries.tolist(), ways)
    mid = R.id(name)
    base = store.slot_base[mid]
    for idx in accesses:
        kind, s, way = oracle.access(idx)
        slot = store.lookup(mid, idx)
        if kind == "overflow":
            assert slot is None
        else:
            assert slot == base + s * ways + way
    # within a set, resident tags are distinct and never exceed N
    for _, tags in store.allocated(mid):
        assert len(tags) <= ways and len(set(tags)) == len(tags)


def test_reset_clears_allocation_and_log():
    m = R.id("res_7x7_0")
    t = AllocationTable("res_7x7_0", R[m].bins, 2, 2, np.zeros(0, np.int64), None, OPTIMIZED)
    store = ModelStore(TableSet({"res_7x7_0": t}))
    for i in range(3):
        store.lookup(m, i)
    assert store.overflowed
    store.reset()
    store.reset()
    assert not store.overflowed
    assert store.lookup(m, 7) == store.slot_base[m]


def test_unknown_or_mismatched_tables_rejected():
    with pytest.raises(TableMismatch):
        ModelStore(TableSet({"nope": AllocationTable.identity("nope", 3)}))
    with pytest.raises(TableMismatch):
        ModelStore(TableSet({"sign": AllocationTable.identity("sign", 65)}))


# -- table files ---------------------------------------------------------------------

def _some_tables():
    rng = np.random.default_rng(7)
    ts = TableSet()
    ts["exp_7x7_0"] = _table("exp_7x7_0", rng.random(10780) ** 8, 320, 32)
    ts["res_dc_0"] = AllocationTable.identity("res_dc_0", 12)
    ts["sign"] = _table("sign", rng.random(66), 8, 2)
    return ts


def test_save_load_save_fixed_point():
    ts = _some_tables()
    data = save_tables(ts)
    back = load_tables(data)
    assert save_tables(back) == data
    assert back.content_hash() == ts.content_hash()
    assert all(back[k] == ts[k] for k in ts)


def test_corrupted_boundaries_rejected():
    ts = _some_tables()
    t = ts["exp_7x7_0"]
    t.boundaries = t.boundaries[::-1].copy()
    with pytest.raises(InvariantViolation):
        t.validate()
    with pytest.raises(InvariantViolation):
        save_tables(ts)


def test_table_file_integrity():
    data = bytearray(save_tables(_some_tables()))
    bad = bytearray(data)
    bad[30] ^= 1
    with pytest.raises(ChecksumMismatch):
        load_tables(bytes(bad))
    bad = bytearray(data)
    bad[4] = 9
    with pytest.raises(FormatVersionMismatch):
        load_tables(bytes(bad))


def test_table_invariants():
    t = _some_tables()["exp_7x7_0"]
    assert t.mem_depth == t.sets * t.ways
    assert t.interval_widths.sum() == t.index_range
    assert t.tag_widths == [ceil_log2(w) for w in t.interval_widths]
    H = t.hash_values
    assert np.all(np.diff(H) >= -1e-12) and abs(H[-1] - t.mem_depth) < 1e-6
