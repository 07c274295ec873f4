import numpy as np
import pytest

from trlbfgs import EmptyHistoryError, PairBuffer

from oracles import C3, fill_buffer, random_pairs


def test_accept_collinear_pair():
    buf = PairBuffer(2, 3)
    assert buf.try_push([1.0, 0.0], [2.0, 0.0], 1e-8)
    assert buf.count == 1
    assert buf.pairs[0].sy == 2.0


def test_reject_orthogonal_pair():
    buf = PairBuffer(2, 3)
    assert not buf.try_push([1.0, 0.0], [0.0, 1.0], 1e-8)
    assert buf.count == 0
    assert buf.rejected == 1
    assert buf.gram_SY.shape == (0, 0)


def test_reject_zero_vectors():
    buf = PairBuffer(2, 3)
    assert not buf.try_push([0.0, 0.0], [1.0, 1.0], 1e-8)
    assert not buf.try_push([1.0, 1.0], [0.0, 0.0], 1e-8)
    assert buf.count == 0


def test_eviction_keeps_count_at_capacity():
    rng = np.random.default_rng(7)
    m = 5
    buf = PairBuffer(10, m)
    pairs = random_pairs(rng, 10, m + 1)
    for s, y in pairs[:m]:
        assert buf.try_push(s, y, C3)
    first_sy = buf.pairs[0].sy
    assert buf.try_push(*pairs[m], C3)
    assert buf.count == m
    # oldest evicted, newest at the end
    assert buf.pairs[0].sy != first_sy
    assert buf.pairs[-1].sy == pairs[m][0] @ pairs[m][1]


def test_dimension_mismatch_raises():
    buf = PairBuffer(4, 2)
    with pytest.raises(ValueError):
        buf.try_push(np.ones(3), np.ones(4), 1e-8)
    with pytest.raises(ValueError):
        buf.try_push(np.ones(4), np.ones(5), 1e-8)


@pytest.mark.parametrize("n,pushes", [(20, 4), (100, 12)])
def test_incremental_grams_match_recompute(n, pushes):
    rng = np.random.default_rng(n)
    buf = PairBuffer(n, 5)
    for s, y in random_pairs(rng, n, pushes):
        buf.try_push(s, y, C3)
    for block, ref in [
        (buf.gram_SS, buf.S.T @ buf.S),
        (buf.gram_SY, buf.S.T @ buf.Y),
        (buf.gram_YY, buf.Y.T @ buf.Y),
    ]:
        assert np.abs(block - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())


def test_debug_recompute_path_agrees():
    rng = np.random.default_rng(3)
    inc = PairBuffer(30, 4)
    dbg = PairBuffer(30, 4, recompute_grams=True)
    for s, y in random_pairs(rng, 30, 9):
        inc.try_push(s, y, C3)
        dbg.try_push(s, y, C3)
    for a, b in [(inc.gram_SS, dbg.gram_SS), (inc.gram_SY, dbg.gram_SY), (inc.gram_YY, dbg.gram_YY)]:
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(b).max())


def test_grams_track_survivors_after_eviction():
    rng = np.random.default_rng(11)
    buf = PairBuffer(15, 3)
    for s, y in random_pairs(rng, 15, 8):
        buf.try_push(s, y, C3)
    assert buf.count == 3
    assert np.allclose(buf.gram_SS, buf.S.T @ buf.S, rtol=1e-13, atol=0)
    assert np.allclose(buf.gram_SY, buf.S.T @ buf.Y, rtol=1e-13, atol=0)
    assert np.allclose(buf.gram_YY, buf.Y.T @ buf.Y, rtol=1e-13, atol=0)


def test_stored_pairs_satisfy_acceptance_strictly():
    rng = np.random.default_rng(13)
    buf = fill_buffer(rng, 25, 5)
    assert buf.violations(C3) == 0
    for p in buf.pairs:
        assert p.sy > C3 * np.sqrt(p.ss) * np.sqrt(p.yy)
        assert p.ss > 0 and p.yy > 0


def test_triangular_views_single_pair():
    buf = PairBuffer(2, 2)
    buf.try_push([1.0, 0.0], [2.0, 0.0], 1e-8)
    L, D, T = buf.triangular_views()
    assert np.array_equal(L, [[0.0]])
    assert np.array_equal(D, [[2.0]])
    assert np.array_equal(T, [[2.0]])


def test_triangular_views_two_pairs():
    # engineered so S^T Y = [[2, 5], [3, 7]]
    buf = PairBuffer(2, 2)
    assert buf.try_push([1.0, 0.0], [2.0, 3.0], 1e-8)
    assert buf.try_push([0.0, 1.0], [5.0, 7.0], 1e-8)
    assert np.allclose(buf.gram_SY, [[2.0, 5.0], [3.0, 7.0]])
    L, D, T = buf.triangular_views()
    assert np.array_equal(L, [[0.0, 0.0], [3.0, 0.0]])
    assert np.array_equal(D, np.diag([2.0, 7.0]))
    assert np.array_equal(T, [[2.0, 5.0], [0.0, 7.0]])


def test_triangular_views_reassemble_exactly():
    rng = np.random.default_rng(17)
    buf = fill_buffer(rng, 12, 5)
    L, D, T = buf.triangular_views()
    assert np.array_equal(L + D + (T - D), buf.gram_SY)
    assert np.all(np.diag(T) > 0)


def test_triangular_views_empty_buffer_raises():
    with pytest.raises(EmptyHistoryError):
        PairBuffer(3, 2).triangular_views()
