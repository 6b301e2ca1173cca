import math
from fractions import Fraction as F

import numpy as np
import pytest

from carpenter.errors import ConstructionError, OutOfRangeError
from carpenter.seqcore import INF, DiagonalSpec, TailRule, diag_of
from carpenter.tetris import (
    MinSTable,
    block_sort,
    coupling,
    dyadic_class,
    interleave_split_fin,
    interleave_split_inf,
    min_s,
    nonsummable_construct,
    positions,
    sort_desc_window,
    tetris_vectors,
)


def spec(*values, tail=None):
    return DiagonalSpec.of(*values, tail=tail or TailRule.zero())


def gram_of(vectors, m):
    v = np.vstack([w.dense(m) for w in vectors])
    return v @ v.T


# ---------------------------------------------------------------------------
# boundary index minS


def test_min_s_constant_tail():
    s = spec(tail=TailRule.constant("2/5"))
    # partial sums 2/5, 4/5, 6/5, ... reach n at ceil(5n/2)
    assert [min_s(s, n) for n in (1, 2, 3, 4)] == [3, 5, 8, 10]


def test_min_s_prefix_then_tail():
    s = spec("3/4", "3/4", tail=TailRule.constant("1/4"))
    assert min_s(s, 1) == 2
    assert min_s(s, 2) == 4
    assert min_s(s, 3) == 8


def test_min_s_exact_hit():
    s = spec("1/2", "1/2", "1/2", "1/2")
    assert min_s(s, 1) == 2
    assert min_s(s, 2) == 4


def test_min_s_geometric_unreachable():
    s = spec(tail=TailRule.geometric("1/2", "1/2"))  # partial sums approach 1
    with pytest.raises(ConstructionError):
        min_s(s, 1)
    t = spec("1/2", tail=TailRule.geometric("1/2", "1/2"))  # reaches 1 at index 2
    assert min_s(t, 1) == 2
    with pytest.raises(ConstructionError):
        min_s(t, 2)


def test_min_s_zero_tail_unreachable():
    s = spec("1/2", "1/2")
    assert min_s(s, 1) == 2
    with pytest.raises(ConstructionError):
        min_s(s, 2)


def test_min_s_table_caches():
    t = MinSTable(spec(tail=TailRule.constant("2/5")))
    assert t.get(2) == 5
    assert t.get(1) == 3
    assert t.known() == {1: 3, 2: 5}


# ---------------------------------------------------------------------------
# the two-coordinate coupling


def test_coupling_worked_value():
    assert coupling(F(2, 5), F(2, 5), F(3, 5)) == F(3, 10)


def test_coupling_identity_exact():
    rng = np.random.default_rng(3)
    for _ in range(300):
        d1 = F(int(rng.integers(0, 64)), 64)
        d2 = F(int(rng.integers(0, 64)), 64)
        lo, hi = max(d1, d2), min(F(1), d1 + d2)
        if hi <= lo:
            continue
        sigma = lo + (hi - lo) * F(int(rng.integers(1, 8)), 8)
        if 2 * sigma <= d1 + d2:
            continue
        a = coupling(d1, d2, sigma)
        assert a * (d1 - a) == (sigma - a) * (d2 - sigma + a)
        for q in (a, sigma - a, d1 - a, d2 - sigma + a):
            assert 0 <= q <= 1


def test_coupling_rejects_out_of_domain():
    with pytest.raises(ConstructionError):
        coupling(F(1, 4), F(1, 4), F(3, 4))  # sigma > d1 + d2
    with pytest.raises(ConstructionError):
        coupling(F(3, 4), F(1, 4), F(1, 2))  # sigma < max
    with pytest.raises(ConstructionError):
        coupling(F(1, 2), F(1, 2), F(1, 2))  # 2 sigma = d1 + d2


# ---------------------------------------------------------------------------
# streaming fill


def test_fill_five_identical_entries():
    s = spec(*["2/5"] * 5)
    out = tetris_vectors(s, 2)
    assert out.complete and out.settled_prefix is None
    assert out.sigma == (F(3, 5),)
    assert out.a_coef == (F(3, 10),)
    v1, v2 = out.vectors
    expect1 = [math.sqrt(2 / 5), math.sqrt(3 / 10), -math.sqrt(3 / 10), 0, 0]
    expect2 = [0, math.sqrt(1 / 10), math.sqrt(1 / 10), math.sqrt(2 / 5), math.sqrt(2 / 5)]
    assert np.allclose(v1.dense(5), expect1, atol=1e-15)
    assert np.allclose(v2.dense(5), expect2, atol=1e-15)
    assert np.allclose(gram_of(out.vectors, 5), np.eye(2), atol=1e-15)
    for i in range(1, 6):
        assert sum(v.exact_square_at(i) for v in out.vectors) == F(2, 5)


def test_fill_constant_two_fifths_stream():
    s = spec(tail=TailRule.constant("2/5"))
    out = tetris_vectors(s, 4)
    assert not out.complete
    assert out.min_s == {1: 3, 2: 5, 3: 8, 4: 10}
    assert out.settled_prefix == 8
    assert np.allclose(gram_of(out.vectors, 12), np.eye(4), atol=1e-14)
    for i in range(1, out.settled_prefix + 1):
        assert sum(v.exact_square_at(i) for v in out.vectors) == F(2, 5)


def test_fill_halves_pairs_up():
    out = tetris_vectors(spec(tail=TailRule.constant("1/2")), 3)
    sups = [tuple(i for i, _ in v.support) for v in out.vectors]
    assert sups == [(1, 2), (3, 4), (5, 6)]
    assert out.settled_prefix == 4
    assert np.allclose(gram_of(out.vectors, 8), np.eye(3), atol=1e-15)


def test_fill_all_ones_gives_basis():
    out = tetris_vectors(spec("1", "1", "1"), 3)
    for n, v in enumerate(out.vectors, start=1):
        assert v.support == ((n, 1.0),)


def test_fill_ordering_violation_raises():
    s = spec("2/5", "1/5", "2/5", tail=TailRule.constant("2/5"))
    with pytest.raises(ConstructionError, match="ordering"):
        tetris_vectors(s, 2)


def test_fill_adjacent_collision_rejected():
    s = spec("3/4", "3/4", tail=TailRule.constant("3/4"))
    with pytest.raises(ConstructionError, match="collision"):
        tetris_vectors(s, 3)


def test_fill_ultimate_vector_with_tail():
    s = spec("1/2", "1/2", tail=TailRule.geometric("1/2", "1/2"))
    out = tetris_vectors(s, 2)
    assert out.complete
    v2 = out.vectors[1]
    assert v2.sqrt_tail is not None
    assert v2.exact_norm_sq() == 1
    assert np.allclose(gram_of(out.vectors, 60), np.eye(2), atol=1e-12)
    for i in range(1, 9):
        got = sum(F(v.exact_square_at(i)) for v in out.vectors)
        assert got == s.entry(i)


def test_fill_count_limits():
    s = spec(*["2/5"] * 5)  # total mass 2
    with pytest.raises(ConstructionError):
        tetris_vectors(s, 3)
    with pytest.raises(ConstructionError):
        tetris_vectors(spec("1/5", "2/5"), 1)  # fractional total
    with pytest.raises(OutOfRangeError):
        tetris_vectors(s, -1)


def test_fill_zero_vectors_requested():
    out = tetris_vectors(spec(tail=TailRule.constant("2/5")), 0)
    assert out.vectors == ()
    assert out.settled_prefix == 0


# ---------------------------------------------------------------------------
# blockwise sorting


def test_sort_desc_window_orders_and_tracks():
    vals, perm = sort_desc_window((F(1, 5), F(2, 5), F(3, 10)))
    assert vals == (F(2, 5), F(3, 10), F(1, 5))
    assert perm.window == (2, 3, 1)
    # ties keep original order
    vals2, perm2 = sort_desc_window((F(2, 5), F(2, 5)))
    assert vals2 == (F(2, 5), F(2, 5))
    assert perm2.window == (1, 2)


def test_block_sort_sorted_input_is_fixed():
    s = spec(tail=TailRule.constant("2/5"))
    g, rho = block_sort(s)
    assert rho.trimmed().size == 0
    for i in range(1, 8):
        assert g.entry(i) == s.entry(i)


def test_block_sort_reorders_within_blocks():
    s = spec("1/5", "2/5", "2/5", tail=TailRule.constant("2/5"))
    g, rho = block_sort(s)
    # first block is indices 1..3, sorted to 2/5, 2/5, 1/5
    assert [g.entry(i) for i in (1, 2, 3)] == [F(2, 5), F(2, 5), F(1, 5)]
    for j in range(1, 12):
        assert g.entry(j) == s.entry(rho.apply(j))
    # the sorted spec streams cleanly
    out = tetris_vectors(g, 3)
    assert np.allclose(gram_of(out.vectors, 10), np.eye(3), atol=1e-14)


def test_block_sort_first_entry_may_be_large():
    s = spec("9/10", "1/5", "2/5", tail=TailRule.constant("2/5"))
    g, rho = block_sort(s)
    assert g.entry(1) == F(9, 10)
    for j in range(1, 10):
        assert g.entry(j) == s.entry(rho.apply(j))


def test_block_sort_rejects_large_interior_entries():
    with pytest.raises(ConstructionError):
        block_sort(spec("1/5", "3/5", tail=TailRule.constant("2/5")))


def test_block_sort_rejects_fractional_total():
    with pytest.raises(ConstructionError):
        block_sort(spec("1/5", "1/5"))


# ---------------------------------------------------------------------------
# interleaved subsequence splits


def test_positions_maps():
    p = positions(spec("3/4", "2/5", "2/3", tail=TailRule.constant("1/5")))
    assert p.count_large() == 2
    assert p.count_small() == INF
    assert [p.Pos(n) for n in (1, 2)] == [1, 3]
    assert [p.pos(n) for n in (1, 2, 3)] == [2, 4, 5]
    assert p.large_value(2) == F(2, 3)
    assert p.small_value(1) == F(2, 5)


def test_interleave_split_front_larges():
    s = spec("4/5", "9/10", "1/10", "1/10", tail=TailRule.constant("1/10"))
    parts, beta = interleave_split_fin(s, 2)
    assert len(parts) == 2
    assert [parts[0].entry(i) for i in (1, 2, 3)] == [F(4, 5), F(1, 10), F(1, 10)]
    assert [parts[1].entry(i) for i in (1, 2, 3)] == [F(9, 10), F(1, 10), F(1, 10)]
    # larges already occupy the first two slots, so the relabelling is trivial
    assert beta.trimmed().size == 0


def test_interleave_split_scattered_larges():
    s = spec("1/10", "4/5", "1/10", "9/10", tail=TailRule.constant("1/10"))
    parts, beta = interleave_split_fin(s, 2)
    assert [parts[0].entry(i) for i in (1, 2)] == [F(4, 5), F(1, 10)]
    assert [parts[1].entry(i) for i in (1, 2)] == [F(9, 10), F(1, 10)]
    # original -> slot: f2 leads part 1, f4 leads part 2, smalls interleave
    assert [beta.apply(i) for i in (1, 2, 3, 4, 5, 6)] == [3, 1, 4, 2, 5, 6]


def test_interleave_split_covers_value_multiset():
    s = spec("1/10", "4/5", "1/10", "9/10", tail=TailRule.constant("1/10"))
    parts, beta = interleave_split_fin(s, 2)
    k = len(parts)
    for orig in range(1, 30):
        slot = beta.apply(orig)
        m = (slot - 1) % k + 1
        i = (slot - 1) // k + 1
        assert parts[m - 1].entry(i) == s.entry(orig)


def test_dyadic_class_values():
    assert [dyadic_class(t) for t in (1, 2, 3, 4, 5, 6, 8, 12)] == [
        (1, 1),
        (1, 2),
        (3, 1),
        (1, 3),
        (5, 1),
        (3, 2),
        (1, 4),
        (3, 3),
    ]


def test_interleave_split_inf_window_structure():
    # six large entries up front feed the odd subsequence leads; the constant
    # small tail (positions 7, 8, ...) fills the remaining dyadic slots
    s = spec(*["3/4"] * 6, tail=TailRule.constant("2/5"))
    split = interleave_split_inf(s, 12)
    assert sorted(split.slot_map) == list(range(1, 13))
    assert split.slot_map == {
        1: 1, 3: 2, 5: 3, 7: 4, 9: 5, 11: 6,  # slot m <- large #(m+1)/2
        2: 7, 4: 8, 8: 9,  # subsequence 1 walks small block 1
        6: 12, 12: 13,  # subsequence 3 walks small block 3
        10: 17,  # subsequence 5 walks small block 5
    }
    sources = list(split.slot_map.values())
    assert len(set(sources)) == len(sources)
    assert set(split.subseq_values) == {1, 3, 5, 7, 9, 11}
    assert split.subseq_values[1] == [F(3, 4), F(2, 5), F(2, 5), F(2, 5)]
    # intervals are blocks of the small subsequence between boundary indices
    assert split.intervals[1] == (0, 3)
    assert split.intervals[3] == (5, 8)
    perm = split.permutation
    seen = {perm.apply(i) for i in range(1, perm.size + 1)}
    assert seen == set(range(1, perm.size + 1))


# ---------------------------------------------------------------------------
# end-to-end assembly for non-summable diagonals


def verify_diag(rep, s, upto, atol):
    d = np.array([diag_of(rep, i) for i in range(1, upto + 1)])
    want = np.array([float(s.entry(i)) for i in range(1, upto + 1)])
    assert np.allclose(d, want, atol=atol)


def test_nonsummable_direct_path():
    s = spec(tail=TailRule.constant("2/5"))
    trace = {}
    rep = nonsummable_construct(s, 4, trace=trace)
    assert trace["settled_prefix"] == 8
    verify_diag(rep, s, 8, 1e-12)
    g = gram_of(rep.vectors, 16)
    assert np.allclose(g, np.eye(len(rep.vectors)), atol=1e-12)


def test_nonsummable_residue_split_path():
    s = spec("3/4", "2/3", tail=TailRule.constant("2/5"))
    trace = {}
    rep = nonsummable_construct(s, 3, trace=trace)
    assert trace["branch"][-1] == "residue-split(k=2)"
    assert len(trace["parts"]) == 2
    settled = trace["settled_prefix"]
    assert settled is not None and settled >= 4
    verify_diag(rep, s, settled, 1e-12)
    g = gram_of(rep.vectors, 80)
    assert np.allclose(g, np.eye(len(rep.vectors)), atol=1e-12)


def test_nonsummable_complement_path():
    s = spec(tail=TailRule.constant("3/5"))
    trace = {}
    rep = nonsummable_construct(s, 4, trace=trace)
    assert trace["branch"][:3] == ["NonsummableB", "S_finite", "complement"]
    assert rep.form == "coframe"
    settled = trace["settled_prefix"]
    verify_diag(rep, s, settled, 1e-12)


def test_nonsummable_rejects_summable_input():
    with pytest.raises(ConstructionError):
        nonsummable_construct(spec(*["2/5"] * 5), 2)
