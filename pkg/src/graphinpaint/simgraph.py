"""Similarity graph over feature frames.

The graph is built in three stages: Gaussian weights on the K nearest
neighbours (``W0``), accumulation along the main-diagonal direction with a
triangular kernel (``W``), and threshold plus local-maximum selection
(``Ws``). The reduced variant runs the same steps for a slice of query rows
around a gap.
"""

from dataclasses import dataclass, field
import io

import numpy as np

from .errors import InvalidKernelLength, NoValidQueries, NotEnoughFrames

STAGES = ("W0", "W", "Ws")

_QUERY_BLOCK = 256
_EXTRA_CANDIDATES = 8


NEIGHBOURHOODS = {
    "direct": ((-1, 0), (1, 0), (0, -1), (0, 1)),
    "diagonal": ((-1, -1), (-1, 1), (1, -1), (1, 1)),
}


@dataclass(frozen=True)
class GraphParams:
    n_neighbors: int = 40
    kernel_length: int = 40
    weight_threshold: float = 2.0
    sigma: "float | None" = None
    eps_before: int = 431
    eps_after: int = 431
    knn_mode: str = "exact"
    local_max: str = "direct"

    def __post_init__(self):
        if self.local_max not in NEIGHBOURHOODS:
            raise ValueError(f"unknown local-maximum neighbourhood {self.local_max!r}")
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        _check_kernel_length(self.kernel_length)
        if self.weight_threshold <= 0:
            raise ValueError("weight_threshold must be positive")
        if self.eps_before < 0 or self.eps_after < 0:
            raise ValueError("transition ranges must be non-negative")
        if self.knn_mode not in ("exact", "approx"):
            raise ValueError(f"unknown knn mode {self.knn_mode!r}")

    @property
    def exclude_radius(self):
        """Neighbours closer than this many frames in time are ignored."""
        return self.kernel_length


@dataclass(frozen=True, eq=False)
class SparseWeights:
    """Coordinate-list weight matrix sorted by ``(row, col)``."""

    stage: str
    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    restriction: "np.ndarray | None" = field(default=None)

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        keys = rows * self.n + cols
        if len(keys) > 1 and not np.all(keys[1:] > keys[:-1]):
            order = np.argsort(keys, kind="stable")
            rows, cols, weights = rows[order], cols[order], weights[order]
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.weights)

    @property
    def keys(self):
        return self.rows * self.n + self.cols

    def to_dense(self):
        out = np.zeros((self.n, self.n))
        out[self.rows, self.cols] = self.weights
        return out

    def lookup(self, rows, cols):
        """Weights at ``(rows, cols)``; 0 where absent or out of range."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        out = np.zeros(np.broadcast(rows, cols).shape)
        keys = self.keys
        if len(keys) == 0:
            return out
        inside = (rows >= 0) & (rows < self.n) & (cols >= 0) & (cols < self.n)
        q = rows * self.n + cols
        pos = np.minimum(np.searchsorted(keys, q), len(keys) - 1)
        hit = inside & (keys[pos] == q)
        out[hit] = self.weights[pos[hit]]
        return out

    def select_rows(self, rows):
        keep = np.isin(self.rows, rows)
        return SparseWeights(self.stage, self.n, self.rows[keep], self.cols[keep],
                             self.weights[keep], np.asarray(rows, dtype=np.int64))

    def to_csv(self, path_or_buffer=None):
        """Edge list ``l,k,weight`` with a ``#`` header line."""
        out = io.StringIO()
        out.write(f"# stage={self.stage} n={self.n}\n")
        out.write("l,k,weight\n")
        for r, c, w in zip(self.rows, self.cols, self.weights):
            out.write(f"{int(r)},{int(c)},{float(w)!r}\n")
        text = out.getvalue()
        if path_or_buffer is None:
            return text
        if hasattr(path_or_buffer, "write"):
            path_or_buffer.write(text)
        else:
            with open(path_or_buffer, "w", newline="\n") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True, eq=False)
class KnnResult:
    queries: np.ndarray
    neighbors: np.ndarray
    distances: np.ndarray

    def __len__(self):
        return len(self.queries)


def _check_kernel_length(kernel_length):
    if kernel_length < 2 or kernel_length % 2:
        raise InvalidKernelLength(
            f"kernel length must be even and >= 2, got {kernel_length}")


def _exact_distances(Xc, X, idx, q, chunk=4):
    """Squared distances ``|X[q[i]] - Xc[idx[i, j]]|^2`` in double precision."""
    d = np.empty(idx.shape)
    for s0 in range(0, len(q), chunk):
        diff = Xc[idx[s0:s0 + chunk]] - X[q[s0:s0 + chunk]][:, np.newaxis, :]
        d[s0:s0 + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return d


def knn(features, n_neighbors, queries=None, valid=None, exclude_radius=0,
        mode="exact"):
    """K nearest neighbours by squared Euclidean distance.

    Parameters
    ----------
    features : FeatureMatrix or ndarray
        Either a feature matrix (its ``vectors`` and ``valid`` mask are used)
        or an ``(n_frames, dim)`` array.
    n_neighbors : int
    queries : array_like of int, optional
        Query frames (default: all valid frames).
    valid : array_like of bool, optional
        Frames eligible as neighbours.
    exclude_radius : int
        Candidates with ``|k - l| <= exclude_radius`` are skipped; the query
        itself is always skipped.
    mode : {"exact", "approx"}
        ``"exact"`` ranks in double precision, recomputes the shortlisted
        distances from coordinate differences and widens the shortlist
        whenever rounding could reorder the K-th place. ``"approx"``
        returns a single-precision ranking.

    Returns
    -------
    KnnResult
        Neighbours sorted by distance, ties by smaller index.
    """
    if hasattr(features, "vectors"):
        if valid is None:
            valid = features.valid
        X = features.vectors
    else:
        X = np.asarray(features, dtype=np.float64)
    n = X.shape[0]
    valid = np.ones(n, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    cand = np.flatnonzero(valid)
    queries = cand if queries is None else np.asarray(queries, dtype=np.int64)
    if n_neighbors < 1:
        raise NotEnoughFrames("n_neighbors must be >= 1")

    Xc = X[cand]
    dtype = np.float32 if mode == "approx" else np.float64
    Xr = Xc.astype(dtype, copy=False)
    norms = np.einsum("ij,ij->i", Xr, Xr)
    pre = min(len(cand), n_neighbors + _EXTRA_CANDIDATES)
    # rounding bound of |q|^2 + |x|^2 - 2 q.x in double precision
    err_scale = 4.0 * X.shape[1] * float(np.finfo(np.float64).eps)

    nbrs = np.empty((len(queries), n_neighbors), dtype=np.int64)
    dists = np.empty((len(queries), n_neighbors))
    for b in range(0, len(queries), _QUERY_BLOCK):
        q = queries[b:b + _QUERY_BLOCK]
        Q = X[q].astype(dtype, copy=False)
        qn = np.einsum("ij,ij->i", Q, Q)
        d = norms[np.newaxis, :] - 2.0 * (Q @ Xr.T)
        d += qn[:, np.newaxis]
        banned = np.abs(cand[np.newaxis, :] - q[:, np.newaxis]) <= exclude_radius
        banned |= cand[np.newaxis, :] == q[:, np.newaxis]
        d[banned] = np.inf
        n_ok = (~banned).sum(axis=1)
        if np.any(n_ok < n_neighbors):
            bad = q[np.argmin(n_ok)]
            raise NotEnoughFrames(
                f"frame {bad} has only {n_ok.min()} eligible neighbours, "
                f"{n_neighbors} requested")
        if pre < len(cand):
            part = np.argpartition(d, (n_neighbors - 1, pre), axis=1)
            idx = part[:, :pre]
            kth = np.take_along_axis(d, part[:, n_neighbors - 1:n_neighbors], axis=1)[:, 0]
            outside = np.take_along_axis(d, part[:, pre:pre + 1], axis=1)[:, 0]
        else:
            # every candidate is shortlisted, so no tie can be missed
            idx = np.broadcast_to(np.arange(len(cand)), d.shape)
            kth, outside = np.full(len(q), -np.inf), np.full(len(q), np.inf)
        if mode == "approx":
            dd = np.take_along_axis(d, idx, axis=1).astype(np.float64)
            for i in range(len(q)):
                order = np.lexsort((cand[idx[i]], dd[i]))[:n_neighbors]
                nbrs[b + i], dists[b + i] = cand[idx[i, order]], dd[i, order]
            continue
        margin = err_scale * (qn + norms.max())
        dd = _exact_distances(Xc, X, idx, q)
        dd[np.take_along_axis(banned, idx, axis=1)] = np.inf
        for i in range(len(q)):
            sel = idx[i]
            di = dd[i]
            if not outside[i] > kth[i] + 2 * margin[i]:
                # candidates beyond the preselection could tie with the K-th
                sel = np.flatnonzero((d[i] <= kth[i] + 2 * margin[i]) & ~banned[i])
                di = _exact_distances(Xc, X, sel[np.newaxis], q[i:i + 1])[0]
            order = np.lexsort((cand[sel], di))[:n_neighbors]
            nbrs[b + i], dists[b + i] = cand[sel[order]], di[order]
    return KnnResult(np.asarray(queries), nbrs, dists)


def auto_sigma(result):
    """Mean squared neighbour distance."""
    return float(np.mean(result.distances))


def build_w0(result, sigma, n):
    """Gaussian weights ``exp(-d / sigma)`` on the kNN edges.

    ``sigma == 0`` (all neighbours coincide) gives unit weights. Edges whose
    weight underflows to zero are dropped.
    """
    rows = np.repeat(result.queries, result.neighbors.shape[1])
    cols = result.neighbors.ravel()
    if sigma > 0:
        w = np.exp(-result.distances.ravel() / sigma)
    else:
        w = np.ones(len(cols))
    keep = w > 0
    return SparseWeights("W0", n, rows[keep], cols[keep], w[keep])


def diagonal_kernel(kernel_length):
    """``(L+1, L+1)`` diagonal matrix with the triangular profile."""
    _check_kernel_length(kernel_length)
    l = np.arange(kernel_length + 1)
    return np.diag(1.0 - np.abs(kernel_length - 2 * l) / kernel_length)


def _kernel_taps(kernel_length):
    half = kernel_length // 2
    offsets = np.arange(-half + 1, half)
    return offsets, 1.0 - np.abs(2 * offsets) / kernel_length


def _diagonal_sum(w0, kernel_length, rows=None):
    """Diagonal convolution in lag-major order.

    Returns ``(keys, rows, cols, weights, stride)`` sorted by ``keys``, where
    ``key = (col - row + n) * stride + row + kernel_length // 2``. Entries
    of one lag form runs of consecutive keys, so the accumulation is a 1-D
    convolution over densely packed runs; every output value is the same
    fixed-order tap sum whatever its neighbourhood, which keeps row subsets
    bit-identical to the complete computation.
    """
    _check_kernel_length(kernel_length)
    _, taps = _kernel_taps(kernel_length)
    half = kernel_length // 2
    pad = half - 1
    n = w0.n
    stride = n + 2 * half
    empty = np.zeros(0, dtype=np.int64)
    if len(w0) == 0:
        return empty, empty, empty, np.zeros(0), stride
    key = (w0.cols - w0.rows + n) * stride + w0.rows + half
    order = np.argsort(key, kind="stable")
    key, val = key[order], w0.weights[order]

    # runs of keys whose contribution intervals touch or overlap
    new_run = np.concatenate([[True], np.diff(key) > 2 * pad])
    run = np.cumsum(new_run) - 1
    first = key[new_run] - pad
    length = np.append(key[np.flatnonzero(new_run)[1:] - 1], key[-1]) + pad - first + 1
    offset = np.concatenate([[0], np.cumsum(length)[:-1]])
    dense = np.zeros(int(length.sum()))
    dense[offset[run] + key - first[run]] = val
    summed = np.convolve(dense, taps, mode="same")
    keys = np.repeat(first - offset, length) + np.arange(len(dense))

    r = keys % stride - half
    c = r + keys // stride - n
    ok = (r >= 0) & (r < n) & (c >= 0) & (c < n)
    if rows is not None:
        wanted = np.zeros(n, dtype=bool)
        wanted[np.asarray(rows, dtype=np.int64)] = True
        ok &= wanted[np.clip(r, 0, n - 1)]
    return keys[ok], r[ok], c[ok], summed[ok], stride


def convolve_weights(w0, kernel_length, rows=None):
    """Accumulate ``W0`` along diagonals with the triangular kernel.

    ``W(l, k) = sum_o (1 - |2o/L|) * W0(l + o, k + o)`` with ``W0`` zero
    outside the matrix and ``|o| < L/2`` (the outer taps are zero). If
    ``rows`` is given only those output rows are formed.
    """
    _, r, c, v, _ = _diagonal_sum(w0, kernel_length, rows)
    return SparseWeights("W", w0.n, r, c, v)


def _local_max(keys, rows, cols, weights, n, threshold, neighbourhood, key_step):
    """Mask of entries that reach ``threshold`` and are not below any
    neighbour; ``key_step(dr, dc)`` is the key difference of a neighbour."""
    keep = weights >= threshold
    if not len(keys):
        return keep
    for dr, dc in NEIGHBOURHOODS[neighbourhood]:
        r, c = rows + dr, cols + dc
        inside = (r >= 0) & (r < n) & (c >= 0) & (c < n)
        q = keys + key_step(dr, dc)
        pos = np.minimum(np.searchsorted(keys, q), len(keys) - 1)
        hit = inside & (keys[pos] == q)
        keep[hit] &= weights[hit] >= weights[pos[hit]]
    return keep


def sparsify(w, threshold=2.0, neighbourhood="direct"):
    """Keep entries that reach ``threshold`` and are local maxima.

    Parameters
    ----------
    w : SparseWeights
    threshold : float
    neighbourhood : {"direct", "diagonal"}
        ``"direct"`` compares ``(l, k)`` with ``(l +- 1, k)`` and
        ``(l, k +- 1)``, i.e. across neighbouring lags, so each ridge of the
        convolved matrix survives whole while its weaker parallel copies are
        dropped. ``"diagonal"`` compares with ``(l +- 1, k +- 1)``. Missing
        neighbours count as 0 and ties are kept.
    """
    keep = _local_max(w.keys, w.rows, w.cols, w.weights, w.n, threshold,
                      neighbourhood, lambda dr, dc: dr * w.n + dc)
    return SparseWeights("Ws", w.n, w.rows[keep], w.cols[keep], w.weights[keep],
                         w.restriction)


def _drop_invalid(ws, valid):
    """Remove ``Ws`` edges touching an invalid frame (after the local-maximum
    test, so neighbours on invalid frames still count)."""
    keep = valid[ws.rows] & valid[ws.cols]
    return SparseWeights(ws.stage, ws.n, ws.rows[keep], ws.cols[keep],
                         ws.weights[keep], ws.restriction)


def full_graph(fm, params, stage="Ws"):
    """Graph over every valid frame (quadratic-size, for analysis only)."""
    res = knn(fm, params.n_neighbors, exclude_radius=params.exclude_radius,
              mode=params.knn_mode)
    sigma = auto_sigma(res) if params.sigma is None else params.sigma
    w = build_w0(res, sigma, fm.n_frames)
    if stage == "W0":
        return w
    w = convolve_weights(w, params.kernel_length)
    if stage == "W":
        return w
    return _drop_invalid(sparsify(w, params.weight_threshold, params.local_max), fm.valid)


def query_frames(gap, n_frames, eps_before, eps_after):
    """Frames ``[d_s - eps_before, d_s]`` and ``[d_e, d_e + eps_after]``
    clipped to the signal, as ``(before, after)`` index arrays."""
    ds, de = gap.start_frame, gap.end_frame
    before = np.arange(max(ds - eps_before, 0), min(ds, n_frames - 1) + 1)
    after = np.arange(max(de, 0), min(de + eps_after, n_frames - 1) + 1)
    return before, after


def dilate(frames, radius, n_frames):
    """Sorted frames within ``radius`` of any of ``frames``."""
    f = np.asarray(frames, dtype=np.int64)
    edges = np.zeros(n_frames + 1, dtype=np.int64)
    np.add.at(edges, np.clip(f - radius, 0, n_frames), 1)
    np.add.at(edges, np.clip(f + radius + 1, 0, n_frames), -1)
    return np.flatnonzero(np.cumsum(edges[:-1]) > 0)


@dataclass(frozen=True, eq=False)
class ReducedGraph:
    """The restricted ``Ws`` plus the intermediate quantities."""

    ws: SparseWeights
    sigma: float
    queries: np.ndarray
    computed_rows: np.ndarray
    knn: KnnResult


def _reduced_knn(fm, gap, params):
    before, after = query_frames(gap, fm.n_frames, params.eps_before, params.eps_after)
    queries = np.union1d(before, after)
    queries = queries[fm.valid[queries]]
    if len(queries) == 0:
        raise NoValidQueries(
            f"no valid frames within the transition ranges around gap "
            f"[{gap.start_sample}, {gap.end_sample})")
    rows = dilate(queries, params.kernel_length // 2 + 1, fm.n_frames)
    rows = rows[fm.valid[rows]]
    res = knn(fm, params.n_neighbors, rows, exclude_radius=params.exclude_radius,
              mode=params.knn_mode)
    sigma = auto_sigma(res) if params.sigma is None else params.sigma
    return queries, rows, res, sigma


def reduced_graph(fm, gap, params):
    """Sparse graph rows for the frames just before and after ``gap``.

    The kNN search runs only for query frames dilated by half the kernel
    length plus one, which makes the returned rows identical to the same
    rows of the full graph built with the same ``sigma``.
    """
    queries, rows, res, sigma = _reduced_knn(fm, gap, params)
    # W is exact on the query rows and their direct neighbours
    near = dilate(queries, 1, fm.n_frames)
    keys, r, c, v, stride = _diagonal_sum(build_w0(res, sigma, fm.n_frames),
                                          params.kernel_length, rows=near)
    keep = _local_max(keys, r, c, v, fm.n_frames, params.weight_threshold,
                      params.local_max, lambda dr, dc: (dc - dr) * stride + dr)
    keep &= np.isin(r, queries) & fm.valid[c]
    ws = SparseWeights("Ws", fm.n_frames, r[keep], c[keep], v[keep],
                       np.asarray(queries, dtype=np.int64))
    return ReducedGraph(ws, sigma, queries, rows, res)


def reduced_stage(fm, gap, params, stage="Ws"):
    """One stage of the reduced graph, restricted to the query rows."""
    if stage == "Ws":
        return reduced_graph(fm, gap, params).ws
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    queries, _, res, sigma = _reduced_knn(fm, gap, params)
    w0 = build_w0(res, sigma, fm.n_frames)
    if stage == "W0":
        return w0.select_rows(queries)
    w = convolve_weights(w0, params.kernel_length, rows=queries)
    return SparseWeights("W", w.n, w.rows, w.cols, w.weights,
                         np.asarray(queries, dtype=np.int64))
