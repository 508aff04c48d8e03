import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.signal import convolve2d

from graphinpaint.audio_io import AudioBuffer, GapSpec
from graphinpaint.config import AlgoConfig
from graphinpaint.errors import InvalidKernelLength, NotEnoughFrames, NoValidQueries
from graphinpaint.features import assemble
from graphinpaint.pipeline import analyze
from graphinpaint.simgraph import (GraphParams, SparseWeights, auto_sigma, build_w0,
                                   convolve_weights, diagonal_kernel, dilate, full_graph,
                                   knn, query_frames, reduced_graph, reduced_stage,
                                   sparsify)
from graphinpaint.synth import FIXTURES


# ---------------------------------------------------------------- oracles

def brute_knn(X, k, valid=None, exclude_radius=0):
    """All-pairs scan; ties go to the smaller index."""
    n = len(X)
    valid = np.ones(n, bool) if valid is None else valid
    out_idx, out_d = [], []
    for q in np.flatnonzero(valid):
        cands = [c for c in range(n) if valid[c] and c != q and abs(c - q) > exclude_radius]
        d = [float(np.sum((X[q] - X[c]) ** 2)) for c in cands]
        order = sorted(range(len(cands)), key=lambda i: (d[i], cands[i]))[:k]
        out_idx.append([cands[i] for i in order])
        out_d.append([d[i] for i in order])
    return np.array(out_idx), np.array(out_d)


def dense_convolution(W0, kernel_length):
    return convolve2d(W0, diagonal_kernel(kernel_length), mode="same")


def scan_local_max(W, threshold, neighbourhood):
    """Per-entry check against an explicit list of neighbours."""
    n = len(W)
    offsets = {"direct": [(-1, 0), (1, 0), (0, -1), (0, 1)],
               "diagonal": [(-1, -1), (-1, 1), (1, -1), (1, 1)]}[neighbourhood]
    keep = set()
    for l in range(n):
        for k in range(n):
            w = W[l, k]
            if w == 0 or w < threshold:
                continue
            nbrs = [W[l + a, k + b] if 0 <= l + a < n and 0 <= k + b < n else 0.0
                    for a, b in offsets]
            if all(w >= v for v in nbrs):
                keep.add((l, k))
    return keep


def sparse_from_dense(W, stage="W"):
    r, c = np.nonzero(W)
    return SparseWeights(stage, len(W), r, c, W[r, c])


def random_sparse(rng, n, density):
    W = np.where(rng.random((n, n)) < density, rng.uniform(0.05, 1.0, (n, n)), 0.0)
    return W, sparse_from_dense(W, "W0")


# ---------------------------------------------------------------- knn

def test_knn_identical_vectors():
    res = knn(np.ones((3, 4)), 2)
    assert res.neighbors.tolist() == [[1, 2], [0, 2], [0, 1]]
    assert not np.any(res.distances)


def test_knn_one_dimensional_geometry():
    X = np.zeros((10, 3))
    X[:, 0] = np.arange(10)
    res = knn(X, 2, queries=[5])
    assert sorted(res.neighbors[0].tolist()) == [4, 6]
    assert res.distances[0].tolist() == [1.0, 1.0]
    assert res.neighbors[0].tolist() == [4, 6]  # tie goes to the smaller index


@pytest.mark.parametrize("seed", range(5))
def test_knn_matches_brute_force_random(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((50, 8))
    if seed % 2:
        X[10] = X[3]  # exact tie
    res = knn(X, 5)
    idx, d = brute_knn(X, 5)
    np.testing.assert_array_equal(res.neighbors, idx)
    np.testing.assert_allclose(res.distances, d, rtol=1e-12)


def test_knn_matches_brute_force_on_features():
    buf = AudioBuffer(FIXTURES["tone_mixture"](2.2, seed=7), 44100)
    fm = analyze(buf).features
    assert fm.n_frames <= 200
    valid = np.ones(fm.n_frames, bool)
    valid[60:75] = False
    X = fm.full_vectors()
    res = knn(fm.with_valid(valid), 10, exclude_radius=4)
    idx, d = brute_knn(X, 10, valid, exclude_radius=4)
    np.testing.assert_array_equal(res.neighbors, idx)
    np.testing.assert_allclose(res.distances, d, rtol=1e-10, atol=1e-12)


def test_knn_approx_mode_is_close(rng):
    X = rng.standard_normal((150, 16))
    exact = knn(X, 5)
    approx = knn(X, 5, mode="approx")
    overlap = np.mean([len(set(a) & set(b)) / 5 for a, b in
                       zip(exact.neighbors, approx.neighbors)])
    assert overlap > 0.95


def test_knn_not_enough_frames():
    with pytest.raises(NotEnoughFrames):
        knn(np.zeros((5, 2)), 3, exclude_radius=2)


# ---------------------------------------------------------------- sigma and W0

def test_auto_sigma_examples(rng):
    res = knn(np.ones((3, 2)), 2)
    assert auto_sigma(res) == 0.0
    X = np.array([[0.0], [1.0], [np.sqrt(3.0)]])
    one = knn(X, 2, queries=[0])
    assert one.distances[0].tolist() == pytest.approx([1.0, 3.0])
    assert auto_sigma(one) == pytest.approx(2.0)
    res = knn(rng.standard_normal((40, 5)), 4)
    assert auto_sigma(res) == pytest.approx(sum(map(sum, res.distances.tolist())) / (40 * 4))


def test_w0_weights():
    X = np.array([[0.0], [0.0], [2.0]])
    res = knn(X, 1)
    w0 = build_w0(res, 4.0, 3)
    dense = w0.to_dense()
    assert dense[0, 1] == 1.0 and dense[1, 0] == 1.0
    assert dense[2, 0] == pytest.approx(math.exp(-1.0))
    assert np.all((w0.weights > 0) & (w0.weights <= 1))
    assert len(w0) == 3  # three frames, one neighbour each
    degenerate = build_w0(knn(np.ones((3, 1)), 2), 0.0, 3)
    assert np.all(degenerate.weights == 1.0)


def test_w0_asymmetric_four_points():
    # on a line at 0, 1, 3 and 10 with K = 1 the nearest neighbours are
    # 0->1, 1->0, 3->1 and 10->3, enumerated by hand
    X = np.array([[0.0], [1.0], [3.0], [10.0]])
    w0 = build_w0(knn(X, 1), 1.0, 4).to_dense()
    expected = {(0, 1), (1, 0), (2, 1), (3, 2)}
    assert {tuple(map(int, e)) for e in zip(*np.nonzero(w0))} == expected
    assert w0[2, 1] > 0 and w0[1, 2] == 0
    assert w0[3, 2] > 0 and w0[2, 3] == 0


# ---------------------------------------------------------------- kernel and convolution

def test_diagonal_kernel_examples():
    np.testing.assert_array_equal(np.diag(diagonal_kernel(4)), [0, 0.5, 1, 0.5, 0])
    D = diagonal_kernel(40)
    assert D.shape == (41, 41) and np.count_nonzero(D - np.diag(np.diag(D))) == 0
    for l in range(41):
        assert D[l, l] == pytest.approx(1 - abs(40 - 2 * l) / 40, abs=1e-15)
    for L in (2, 6, 18, 40):
        assert diagonal_kernel(L)[L // 2, L // 2] == 1.0
    for bad in (0, 3, -2):
        with pytest.raises(InvalidKernelLength):
            diagonal_kernel(bad)


def test_convolution_impulse_response():
    W0 = np.zeros((12, 12))
    W0[6, 3] = 1.0
    W = convolve_weights(sparse_from_dense(W0, "W0"), 4)
    assert sorted(zip(W.rows.tolist(), W.cols.tolist(), W.weights.tolist())) == [
        (5, 2, 0.5), (6, 3, 1.0), (7, 4, 0.5)]


def test_convolution_accumulates_along_diagonal():
    W0 = np.zeros((20, 20))
    for i in range(3):  # L_K/2 + 1 consecutive ones for L_K = 4
        W0[8 + i, 2 + i] = 1.0
    W = convolve_weights(sparse_from_dense(W0, "W0"), 4).to_dense()
    np.testing.assert_allclose(W, dense_convolution(W0, 4), atol=1e-15)
    assert W[9, 3] > 1.0


@pytest.mark.parametrize("n,L,density,seed", [(30, 4, 0.1, 0), (30, 6, 0.3, 1),
                                              (40, 10, 0.05, 2), (40, 40, 0.2, 3),
                                              (25, 2, 0.5, 4)])
def test_convolution_matches_dense(n, L, density, seed):
    W0, sparse = random_sparse(np.random.default_rng(seed), n, density)
    W = convolve_weights(sparse, L)
    assert np.max(np.abs(W.to_dense() - dense_convolution(W0, L))) < 1e-12
    assert np.all(W.weights > 0)


def test_convolution_row_subset_is_bit_identical(rng):
    _, sparse = random_sparse(rng, 40, 0.15)
    full = convolve_weights(sparse, 8)
    rows = [3, 4, 5, 20, 39]
    part = convolve_weights(sparse, 8, rows=rows)
    sel = full.select_rows(rows)
    np.testing.assert_array_equal(part.rows, sel.rows)
    np.testing.assert_array_equal(part.cols, sel.cols)
    np.testing.assert_array_equal(part.weights, sel.weights)


def test_convolution_mass_of_interior_impulse():
    W0 = np.zeros((100, 100))
    W0[50, 40] = 1.0
    W = convolve_weights(sparse_from_dense(W0, "W0"), 40)
    assert W.weights.sum() == pytest.approx(20.0, abs=1e-12)
    assert np.diag(diagonal_kernel(40)).sum() == 20.0


# ---------------------------------------------------------------- sparsify

def test_sparsify_isolated_entries():
    W = np.zeros((5, 5))
    W[1, 3] = 2.5
    W[3, 1] = 1.9
    ws = sparsify(sparse_from_dense(W), 2.0)
    assert list(zip(ws.rows.tolist(), ws.cols.tolist())) == [(1, 3)]
    assert ws.stage == "Ws"


@pytest.mark.parametrize("neighbourhood", ["direct", "diagonal"])
@pytest.mark.parametrize("seed", range(4))
def test_sparsify_matches_exhaustive_scan(neighbourhood, seed):
    rng = np.random.default_rng(seed)
    W = np.where(rng.random((15, 15)) < 0.6, rng.uniform(0, 4, (15, 15)), 0.0)
    W[4, 4] = W[4, 5] = W[5, 5] = 3.0  # ties are kept
    ws = sparsify(sparse_from_dense(W), 2.0, neighbourhood)
    assert set(zip(ws.rows.tolist(), ws.cols.tolist())) == scan_local_max(W, 2.0, neighbourhood)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), t1=st.floats(0.1, 3.0), dt=st.floats(0.0, 2.0))
def test_sparsify_monotone_in_threshold(seed, t1, dt):
    rng = np.random.default_rng(seed)
    W = np.where(rng.random((12, 12)) < 0.5, rng.uniform(0, 4, (12, 12)), 0.0)
    w = sparse_from_dense(W)
    low = set(zip(*(a.tolist() for a in (sparsify(w, t1).rows, sparsify(w, t1).cols))))
    high_ws = sparsify(w, t1 + dt)
    high = set(zip(high_ws.rows.tolist(), high_ws.cols.tolist()))
    assert high <= low <= set(zip(w.rows.tolist(), w.cols.tolist()))
    assert np.all(high_ws.weights >= t1 + dt)


# ---------------------------------------------------------------- sparse storage

def test_sparse_weights_sorting_lookup_and_csv(tmp_path):
    w = SparseWeights("W", 4, [2, 0, 1], [1, 3, 1], [0.5, 1.0, 0.25])
    assert w.rows.tolist() == [0, 1, 2] and w.cols.tolist() == [3, 1, 1]
    assert w.lookup([0, 2, 3, -1], [3, 1, 3, 0]).tolist() == [1.0, 0.5, 0.0, 0.0]
    text = w.to_csv(tmp_path / "w.csv")
    assert text.splitlines() == ["# stage=W n=4", "l,k,weight", "0,3,1.0", "1,1,0.25", "2,1,0.5"]
    assert (tmp_path / "w.csv").read_bytes() == text.encode()
    empty = SparseWeights("Ws", 4, [], [], [])
    assert empty.to_csv().splitlines() == ["# stage=Ws n=4", "l,k,weight"]
    with pytest.raises(ValueError):
        SparseWeights("X", 4, [], [], [])


def test_graph_params_validation():
    for bad in (dict(kernel_length=5), dict(n_neighbors=0), dict(weight_threshold=0),
                dict(local_max="ring"), dict(knn_mode="fast")):
        with pytest.raises(ValueError):
            GraphParams(**bad)


# ---------------------------------------------------------------- small toy graphs

def test_three_frame_toy_w0_has_three_edges():
    # one neighbour per frame and no temporal exclusion: one edge per frame
    fm = assemble(np.array([[0.0, 1.0, 3.0]]), np.zeros((1, 3)), 1.5, channels=1)
    w0 = build_w0(knn(fm, 1), 1.0, fm.n_frames)
    assert list(zip(w0.rows.tolist(), w0.cols.tolist())) == [(0, 1), (1, 0), (2, 1)]
    # the default exclusion of |k - l| <= L_K leaves no candidates at all
    with pytest.raises(NotEnoughFrames):
        full_graph(fm, GraphParams(n_neighbors=1, kernel_length=2), "W0")


def test_query_frames_and_dilation():
    gap = GapSpec(5120, 10240, 512)  # frames 10 .. 20
    before, after = query_frames(gap, 100, 0, 0)
    assert before.tolist() == [10] and after.tolist() == [20]
    before, after = query_frames(gap, 25, 3, 10)
    assert before.tolist() == [7, 8, 9, 10] and after.tolist() == [20, 21, 22, 23, 24]
    assert dilate([3, 10], 2, 12).tolist() == [1, 2, 3, 4, 5, 8, 9, 10, 11]


# ---------------------------------------------------------------- graphs of real signals

@pytest.fixture(scope="module")
def repeated_graph(repeated_drums):
    buf, half = repeated_drums
    analysis = analyze(buf)
    gap = analysis.gap(half + 3 * 44100, half + 5 * 44100)
    fm = analysis.masked([gap])
    params = AlgoConfig().graph_params(analysis.frame_rate)
    return analysis, gap, fm, params, reduced_graph(fm, gap, params), half // 512


def test_reduced_graph_invariants(repeated_graph):
    _, gap, fm, params, rg, _ = repeated_graph
    ws = rg.ws
    assert np.all(np.isin(ws.rows, rg.queries))
    assert np.all(fm.valid[ws.rows]) and np.all(fm.valid[ws.cols])
    assert np.all(ws.weights >= params.weight_threshold)
    assert np.all(np.abs(ws.rows - ws.cols) > params.kernel_length)
    assert ws.restriction.tolist() == rg.queries.tolist()


def test_reduced_graph_equals_full_graph_rows(repeated_graph):
    _, _, fm, params, rg, _ = repeated_graph
    fixed = GraphParams(params.n_neighbors, params.kernel_length, params.weight_threshold,
                        rg.sigma, params.eps_before, params.eps_after)
    full = full_graph(fm, fixed, "Ws").select_rows(rg.queries)
    assert len(full) == len(rg.ws) > 0
    np.testing.assert_array_equal(full.rows, rg.ws.rows)
    np.testing.assert_array_equal(full.cols, rg.ws.cols)
    np.testing.assert_array_equal(full.weights, rg.ws.weights)


def test_reduced_stages_are_row_slices(repeated_graph):
    analysis, gap, fm, params, rg, _ = repeated_graph
    fixed = GraphParams(params.n_neighbors, params.kernel_length, params.weight_threshold,
                        rg.sigma, params.eps_before, params.eps_after)
    for stage in ("W0", "W"):
        reduced = reduced_stage(fm, gap, params, stage)
        full = full_graph(fm, fixed, stage).select_rows(rg.queries)
        np.testing.assert_array_equal(reduced.keys, full.keys)
        np.testing.assert_array_equal(reduced.weights, full.weights)


def test_repetition_ridge(repeated_graph):
    _, _, _, params, rg, period = repeated_graph
    ws = rg.ws
    ridge = []
    for l in rg.queries:
        mine = ws.rows == l
        on = np.abs(np.abs(l - ws.cols[mine]) - period) <= 1
        assert on.any(), f"row {l} has no edge to the other copy"
        ridge.append(ws.weights[mine][on].max())
    assert np.median(ridge) >= 0.95 * params.kernel_length / 2


def test_white_noise_graph_is_weak(noise_buffer):
    analysis = analyze(noise_buffer)
    start = noise_buffer.length // 2 - 44100
    gap = analysis.gap(start, start + 2 * 44100)
    rg = reduced_graph(analysis.masked([gap]), gap,
                       AlgoConfig().graph_params(analysis.frame_rate))
    assert len(rg.ws) == 0 or rg.ws.weights.max() < 2.5


def test_no_valid_queries():
    buf = AudioBuffer(FIXTURES["tone_mixture"](3.0, seed=1), 44100)
    analysis = analyze(buf)
    gap = analysis.gap(0, buf.length)
    with pytest.raises(NoValidQueries):
        reduced_graph(analysis.masked([gap]), gap, AlgoConfig().graph_params(analysis.frame_rate))


def test_feature_scale_invariance(rng):
    F1 = rng.uniform(0, 1, (20, 120))
    F2 = rng.uniform(-1, 1, (20, 120))
    F1[:, 60:90] = F1[:, 10:40]
    F2[:, 60:90] = F2[:, 10:40]
    params = GraphParams(5, 6, 1.0)
    a, b = (full_graph(assemble(s * F1, s * F2, 1.5), params, stage)
            for s in (1.0, 7.5) for stage in ("W0",))
    np.testing.assert_array_equal(a.keys, b.keys)
    assert np.max(np.abs(a.weights - b.weights)) < 1e-12
    wa, wb = (full_graph(assemble(s * F1, s * F2, 1.5), params, "Ws") for s in (1.0, 7.5))
    np.testing.assert_array_equal(wa.keys, wb.keys)
    assert np.max(np.abs(wa.weights - wb.weights)) < 1e-12
