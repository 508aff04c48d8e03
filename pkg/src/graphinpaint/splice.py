"""Sample-accurate splicing of the replacement segment.

The two cut positions are refined within half a hop by maximising the
correlation with the material they join to, then each junction is rendered by synthesising short-time spectra whose columns
switch from one signal to the other. With the Itersine window the squared
window translates sum to a constant, so away from the junctions this is an
exact copy.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import OutOfBounds
from .stft import itersine_window


@dataclass(frozen=True)
class SplicePlan:
    """Cut positions in undecimated samples.

    The output is ``s[:cut_start] + s[src_start:src_end] + s[cut_end:]``
    with cross-faded junctions of ``2 * half_window`` samples centred on
    the first two joins.
    """

    hop: int
    half_window: int
    cut_start: int
    cut_end: int
    src_start: int
    src_end: int

    @property
    def n_columns(self):
        """Columns per side of each junction."""
        return 2 * math.ceil(self.half_window / self.hop)

    @property
    def junctions(self):
        """Output positions of the two joins."""
        return self.cut_start, self.cut_start + self.src_end - self.src_start

    def output_length(self, length):
        return self.cut_start + (self.src_end - self.src_start) + (length - self.cut_end)

    def regions(self):
        """Output sample ranges ``[a, b)`` of both cross-fades."""
        return [(j - self.half_window, j + self.half_window) for j in self.junctions]

    def report(self, sample_rate):
        out = {"cut_start": self.cut_start, "cut_end": self.cut_end,
               "src_start": self.src_start, "src_end": self.src_end,
               "effective_hop": self.hop, "half_window": self.half_window,
               "crossfade_regions": [list(r) for r in self.regions()]}
        out["cut_start_s"] = self.cut_start / sample_rate
        out["cut_end_s"] = self.cut_end / sample_rate
        out["crossfade_regions_s"] = [[a / sample_rate, b / sample_rate]
                                      for a, b in self.regions()]
        return out


def effective_hop(hop, decimation):
    return hop * decimation


def half_window(window_length, decimation):
    return math.ceil(window_length / 2) * decimation


def _segment(x, start, length, gap=None):
    """``x[start:start+length]`` zero padded, with gap samples zeroed."""
    out = np.zeros(length)
    a, b = max(start, 0), min(start + length, len(x))
    if a < b:
        out[a - start:b - start] = x[a:b]
    if gap is not None:
        g0, g1 = max(gap.start_sample, start), min(gap.end_sample, start + length)
        if g0 < g1:
            out[g0 - start:g1 - start] = 0.0
    return out


CORRELATIONS = ("normalized", "raw")


def offset_scores(s, centre, reference_centre, hop, half, gap=None,
                  correlation="normalized"):
    """Scores of the candidate positions ``centre - hop//2 + i``,
    ``i = 0 .. hop - 1``.

    Each candidate is the ``2*half`` samples around it with gap samples set
    to zero, compared with the ``2*half`` samples around
    ``reference_centre``. ``"raw"`` scores are plain inner products;
    ``"normalized"`` ones are divided by the candidate's norm (0 for an
    all-zero candidate), which ranks by the cosine to the reference.
    """
    if correlation not in CORRELATIONS:
        raise ValueError(f"unknown correlation {correlation!r}")
    first = centre - hop // 2
    ref = _segment(s, reference_centre - half, 2 * half)
    ext = _segment(s, first - half, 2 * half + hop - 1, gap)
    scores = np.correlate(ext, ref, mode="valid")
    if correlation == "normalized":
        energy = np.correlate(ext * ext, np.ones(2 * half), mode="valid")
        norm = np.sqrt(np.maximum(energy, 0.0))
        scores = np.divide(scores, norm, out=np.zeros_like(scores), where=norm > 0)
    return scores


def best_offset(s, centre, reference_centre, hop, half, gap=None,
                correlation="normalized"):
    """Best position in ``[centre - hop//2, centre - hop//2 + hop)`` by
    :func:`offset_scores`; ties go to the smallest position."""
    scores = offset_scores(s, centre, reference_centre, hop, half, gap, correlation)
    return centre - hop // 2 + int(np.argmax(scores))


def refine_offsets(s, pair, gap, hop, half, correlation="normalized"):
    """Refined cut positions ``(cut_start, cut_end)`` for ``pair``."""
    s = np.asarray(s, dtype=np.float64)
    start = best_offset(s, hop * pair.l0, hop * pair.k0, hop, half, gap, correlation)
    end = best_offset(s, hop * pair.k1, hop * pair.l1, hop, half, gap, correlation)
    return start, end


def plan_splice(s, pair, gap, hop, half, refine=True, correlation="normalized"):
    if refine:
        cut_start, cut_end = refine_offsets(s, pair, gap, hop, half, correlation)
    else:
        cut_start, cut_end = hop * pair.l0, hop * pair.k1
    return SplicePlan(hop, half, cut_start, cut_end, hop * pair.k0, hop * pair.l1)


def _window(plan):
    return itersine_window(2 * plan.half_window)


def _columns(x, centres, window):
    n = len(window)
    segs = np.stack([_segment(x, c - n // 2, n) for c in centres]) * window
    return np.fft.rfft(segs, axis=1)


def _synthesise(cols, centres, window, start, length):
    """Overlap-add ``irfft(cols) * window`` at ``centres`` over output
    samples ``[start, start + length)``, divided by the summed squared
    window (the tight-frame constant wherever coverage is complete)."""
    n = len(window)
    segs = np.fft.irfft(cols, n=n, axis=1) * window
    out = np.zeros(length)
    energy = np.zeros(length)
    for seg, c in zip(segs, centres):
        a = c - n // 2 - start
        lo, hi = max(a, 0), min(a + n, length)
        if lo < hi:
            out[lo:hi] += seg[lo - a:hi - a]
            energy[lo:hi] += window[lo - a:hi - a] ** 2
    return out / energy


def _check(plan, length):
    h = plan.half_window
    (a0, b0), (a1, b1) = plan.regions()
    if plan.cut_start - h < 0 or plan.cut_end + h > length:
        raise OutOfBounds("transition too close to the signal edge")
    if plan.src_start - h < 0 or plan.src_end + h > length:
        raise OutOfBounds("replacement segment too close to the signal edge")
    if b0 > a1:
        raise OutOfBounds("replacement shorter than the two cross-fades")


def _junction(a, b, at_a, at_b, plan, window):
    """Cross-fade from signal ``a`` (joined at ``at_a``) to ``b`` (at
    ``at_b``); returns the ``2*half_window`` samples centred on the join."""
    r, hop, h = plan.n_columns, plan.hop, plan.half_window
    steps = np.arange(-r, r)
    cols = np.concatenate([
        _columns(a, at_a + steps[:r] * hop, window),
        _columns(b, at_b + steps[r:] * hop, window)])
    return _synthesise(cols, steps * hop, window, -h, 2 * h)


def crossfade_splice(buf, plan, source=None):
    """Apply ``plan`` to every channel of ``buf``.

    ``source`` provides the replacement samples (default: ``buf`` itself).
    Only the ``2 * n_columns`` spectra around each join are computed;
    everything else is copied.
    """
    source = buf if source is None else source
    _check(plan, buf.length)
    window = _window(plan)
    h = plan.half_window
    out = []
    for x, src in zip(buf.data, source.data):
        x1 = _junction(x, src, plan.cut_start, plan.src_start, plan, window)
        x2 = _junction(src, x, plan.src_end, plan.cut_end, plan, window)
        out.append(np.concatenate([
            x[:plan.cut_start - h], x1, src[plan.src_start + h:plan.src_end - h],
            x2, x[plan.cut_end + h:]]))
    return buf.with_data(np.stack(out))


def crossfade_splice_full(buf, plan, source=None):
    """Reference rendering from the complete concatenated coefficient
    matrix (every column of the output grid)."""
    source = buf if source is None else source
    _check(plan, buf.length)
    window = _window(plan)
    hop, h = plan.hop, plan.half_window
    n_out = plan.output_length(buf.length)
    j0, j1 = plan.junctions
    # output grid c = j0 + t*hop, covering [-h, n_out + h)
    t = np.arange(-((j0 + h) // hop) - 1, (n_out + h - j0) // hop + 2)
    centres = j0 + t * hop
    part1 = t < 0
    part3 = centres >= j1
    part2 = ~part1 & ~part3
    k = t[part3] - (j1 - j0) // hop
    out = []
    for x, src in zip(buf.data, source.data):
        cols = np.empty((len(t), len(window) // 2 + 1), dtype=np.complex128)
        cols[part1] = _columns(x, plan.cut_start + t[part1] * hop, window)
        cols[part2] = _columns(src, plan.src_start + t[part2] * hop, window)
        cols[part3] = _columns(x, plan.cut_end + k * hop, window)
        out.append(_synthesise(cols, centres, window, 0, n_out))
    return buf.with_data(np.stack(out))
