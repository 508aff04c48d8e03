"""Choice of the jump-out and jump-back edges around a gap."""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import NoTransitionFound, TooManyCandidates

MAX_CANDIDATES = 10 ** 6


@dataclass(frozen=True)
class ObjectiveParams:
    gamma_len: float = 1.0
    gamma_w: float = 100.0

    def __post_init__(self):
        if self.gamma_len < 0 or self.gamma_w < 0:
            raise ValueError("objective weights must be non-negative")


@dataclass(frozen=True)
class TransitionPair:
    """Jump out at ``l0 -> k0`` before the gap, back at ``l1 -> k1`` after.

    Frames ``k0 .. l1 - 1`` replace frames ``l0 .. k1 - 1``.
    """

    l0: int
    k0: int
    l1: int
    k1: int
    w0: float
    w1: float
    objective: float = float("nan")
    mismatch: int = 0
    border: int = 0
    n_candidates: int = 0

    def report(self, gap, params):
        out = asdict(self)
        out["terms"] = objective_terms(self, gap, params)
        return out


@dataclass(frozen=True, eq=False)
class Candidates:
    """Column arrays of acceptable edge pairs."""

    l0: np.ndarray
    k0: np.ndarray
    w0: np.ndarray
    l1: np.ndarray
    k1: np.ndarray
    w1: np.ndarray

    def __len__(self):
        return len(self.l0)

    def pair(self, i):
        return (int(self.l0[i]), int(self.k0[i])), (int(self.l1[i]), int(self.k1[i]))


def objective_terms(pair, gap, params=ObjectiveParams()):
    mismatch = abs((pair.k1 - pair.l0) - (pair.l1 - pair.k0))
    border = (gap.start_frame - pair.l0) + (pair.k1 - gap.end_frame)
    weight = 1.0 / pair.w0 + 1.0 / pair.w1
    return {"mismatch": float(mismatch),
            "border": params.gamma_len * border,
            "weight": params.gamma_w * weight}


def objective(pair, gap, params=ObjectiveParams()):
    """``|(k1-l0) - (l1-k0)| + gamma_len*(border distances)
    + gamma_w*(1/w0 + 1/w1)``."""
    t = objective_terms(pair, gap, params)
    return t["mismatch"] + t["border"] + t["weight"]


def _objective_arrays(l0, k0, w0, l1, k1, w1, ds, de, params):
    mismatch = np.abs((k1 - l0) - (l1 - k0))
    border = (ds - l0) + (k1 - de)
    value = mismatch + params.gamma_len * border + params.gamma_w * (1.0 / w0 + 1.0 / w1)
    return value, mismatch


def edge_sets(ws, gap, eps_before, eps_after):
    """Entry edges ``(l0, k0, w0)`` and exit edges ``(l1, k1, w1)``.

    Exit edges come from the rows of the frames after the gap: the entry
    ``(k1, l1)`` of the slice is used as the edge ``(l1, k1)``.
    """
    ds, de = gap.start_frame, gap.end_frame
    first = (ws.rows >= ds - eps_before) & (ws.rows <= ds)
    last = (ws.rows >= de) & (ws.rows <= de + eps_after)
    entry = (ws.rows[first], ws.cols[first], ws.weights[first])
    exit_ = (ws.cols[last], ws.rows[last], ws.weights[last])
    return entry, exit_


def _edges(ws, gap, eps_before, eps_after, threshold):
    (l0, k0, w0), (l1, k1, w1) = edge_sets(ws, gap, eps_before, eps_after)
    ok0, ok1 = w0 >= threshold, w1 >= threshold
    return (l0[ok0], k0[ok0], w0[ok0]), (l1[ok1], k1[ok1], w1[ok1])


def _bad_prefix(valid):
    """``out[i]`` = number of invalid frames in ``[0, i)``, or None."""
    if valid is None:
        return None
    return np.concatenate([[0], np.cumsum(~np.asarray(valid, dtype=bool))])


def _pair_chunks(entry, exit_, bad_before, min_length):
    (l0, k0, w0), (l1, k1, w1) = entry, exit_
    step = max(1, 2 ** 20 // max(len(l1), 1))
    for s in range(0, len(l0), step):
        a = slice(s, s + step)
        L0, K0, W0 = (x[a, np.newaxis] for x in (l0, k0, w0))
        ok = (L1 := l1[np.newaxis, :]) - K0 >= max(min_length, 1)
        if bad_before is not None:
            ok &= bad_before[np.minimum(L1 + 1, len(bad_before) - 1)] == bad_before[K0]
        i, j = np.nonzero(ok)
        yield Candidates(L0[i, 0], K0[i, 0], W0[i, 0], l1[j], k1[j], w1[j])


def _count_pairs(entry, exit_, bad_before, min_length):
    """Number of acceptable pairs, without enumerating them."""
    k0 = entry[1]
    l1 = np.sort(exit_[0])
    lo = k0 + max(min_length, 1)
    if bad_before is None:
        hi = np.full(len(k0), np.iinfo(np.int64).max)
    else:
        # last frame before the first invalid frame at or after k0
        n = len(bad_before) - 1
        hi = np.searchsorted(bad_before, bad_before[k0], side="right") - 2
        hi = np.minimum(hi, n - 1)
    counts = (np.searchsorted(l1, hi, side="right")
              - np.searchsorted(l1, lo, side="left"))
    return int(np.maximum(counts, 0).sum())


def acceptable_pairs(ws, gap, eps_before, eps_after, valid=None, min_length=1,
                     threshold=0.0):
    """All edge pairs satisfying the transition constraints.

    A pair is acceptable when ``l0`` lies in ``[d_s - eps_before, d_s]``,
    ``k1`` in ``[d_e, d_e + eps_after]``, both weights reach ``threshold``,
    and the replacement ``k0 .. l1`` has at least ``min_length`` frames and
    contains no invalid frame.
    """
    entry, exit_ = _edges(ws, gap, eps_before, eps_after, threshold)
    parts = list(_pair_chunks(entry, exit_, _bad_prefix(valid), min_length))
    if not parts:
        e = np.zeros(0, dtype=np.int64)
        return Candidates(e, e, np.zeros(0), e, e, np.zeros(0))
    return Candidates(*(np.concatenate([getattr(p, f) for p in parts])
                        for f in ("l0", "k0", "w0", "l1", "k1", "w1")))


def _best(chunks, ds, de, params):
    best, evaluated = None, 0
    for c in chunks:
        evaluated += len(c)
        if not len(c):
            continue
        value, mismatch = _objective_arrays(c.l0, c.k0, c.w0, c.l1, c.k1, c.w1,
                                            ds, de, params)
        i = np.lexsort((c.l1, c.k0, c.k1, c.l0, mismatch, value))[0]
        key = (value[i], mismatch[i], c.l0[i], c.k1[i], c.k0[i], c.l1[i])
        if best is None or key < best[0]:
            best = (key, c, i)
    return best, evaluated


_SEED_SIZE = 256


def _lag_envelope(at, lags, costs):
    """``min_j costs[j] + |lags[j] - at[i]|`` for every ``at[i]``."""
    order = np.argsort(lags, kind="stable")
    v, c = lags[order].astype(np.float64), costs[order]
    below = np.minimum.accumulate(c - v)
    above = np.minimum.accumulate((c + v)[::-1])[::-1]
    at = at.astype(np.float64)
    out = np.full(len(at), np.inf)
    i = np.searchsorted(v, at, side="right")
    has = i > 0
    out[has] = below[i[has] - 1] + at[has]
    j = np.searchsorted(v, at, side="left")
    has = j < len(v)
    out[has] = np.minimum(out[has], above[j[has]] - at[has])
    return out


def select(ws, gap, eps_before, eps_after, params=ObjectiveParams(), valid=None,
           min_length=1, threshold=0.0, max_candidates=MAX_CANDIDATES):
    """Minimise the objective over all acceptable pairs.

    Ties are resolved by smaller duration mismatch, then smaller ``l0``,
    smaller ``k1``, smaller ``k0`` and smaller ``l1``.

    The objective splits into an entry term, an exit term and the
    mismatch, which only depends on the lags ``l0 - k0`` and ``k1 - l1``.
    For every edge the best value reachable with any edge of the other
    side, ignoring the replacement constraints, is a lower bound. A first
    pass over the edges with the smallest such bounds gives an upper bound
    on the optimum, and edges whose lower bound exceeds it cannot be part
    of an optimal pair; they are dropped before the exhaustive pass.
    ``max_candidates`` bounds the number of pairs that pass evaluates.
    """
    ds, de = gap.start_frame, gap.end_frame
    bad_before = _bad_prefix(valid)
    entry, exit_ = _edges(ws, gap, eps_before, eps_after, threshold)
    total = _count_pairs(entry, exit_, bad_before, min_length) if len(entry[0]) else 0
    if total == 0:
        raise NoTransitionFound(
            f"no acceptable transition pair around gap "
            f"[{gap.start_sample}, {gap.end_sample}); {NoTransitionFound.hint}")

    a = params.gamma_len * (ds - entry[0]) + params.gamma_w / entry[2]
    b = params.gamma_len * (exit_[1] - de) + params.gamma_w / exit_[2]
    # the mismatch equals |(k1 - l1) - (l0 - k0)|, so the best value an
    # edge can reach with any partner follows from a lower envelope over lags
    u, v = entry[0] - entry[1], exit_[1] - exit_[0]
    reach_a = a + _lag_envelope(u, v, b)
    reach_b = b + _lag_envelope(v, u, a)
    ia = np.argsort(reach_a, kind="stable")[:_SEED_SIZE]
    ib = np.argsort(reach_b, kind="stable")[:_SEED_SIZE]
    seed, _ = _best(_pair_chunks(tuple(x[ia] for x in entry),
                                 tuple(x[ib] for x in exit_), bad_before, min_length),
                    ds, de, params)
    if seed is not None:
        bound = seed[0][0]
        bound += 1e-9 * (1.0 + abs(bound))  # keep ties despite rounding
        entry = tuple(x[reach_a <= bound] for x in entry)
        exit_ = tuple(x[reach_b <= bound] for x in exit_)

    kept = _count_pairs(entry, exit_, bad_before, min_length)
    if kept > max_candidates:
        raise TooManyCandidates(
            f"{kept} candidate transitions exceed the limit of {max_candidates}; "
            "raise the weight threshold or narrow the search range")
    best, _ = _best(_pair_chunks(entry, exit_, bad_before, min_length), ds, de, params)
    (value, mismatch, *_), c, i = best
    l0, k0, l1, k1 = (int(x[i]) for x in (c.l0, c.k0, c.l1, c.k1))
    return TransitionPair(l0, k0, l1, k1, float(c.w0[i]), float(c.w1[i]),
                          float(value), int(mismatch),
                          int((ds - l0) + (k1 - de)), total)
