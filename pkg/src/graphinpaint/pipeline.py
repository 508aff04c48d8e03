"""End-to-end gap concealment."""

from dataclasses import dataclass, field
import time

import numpy as np

from .audio_io import GapSpec, decimation_factor, downmix_mono
from .config import AlgoConfig
from .errors import InvalidGap, OutOfBounds, SignalTooShort
from .features import extract_features, invalidate_gap
from .simgraph import reduced_graph
from .splice import crossfade_splice, effective_hop, half_window, plan_splice
from .transition import select

STAGES = ("feature_extraction", "graph_construction", "transition_selection",
          "signal_reconstruction")

REPORT_SCHEMA_VERSION = 1


class _Timer:
    def __init__(self, timings, stage):
        self.timings, self.stage = timings, stage

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, *exc):
        self.timings[self.stage] = (self.timings.get(self.stage, 0.0)
                                    + time.perf_counter() - self.t0)


@dataclass(eq=False)
class Analysis:
    """Features of one signal, reusable for any number of gaps."""

    buffer: object
    config: AlgoConfig
    features: object

    @property
    def hop(self):
        return effective_hop(self.config.hop, self.features.decimation)

    @property
    def half_window(self):
        return half_window(self.config.window_length, self.features.decimation)

    @property
    def frame_rate(self):
        return self.features.frame_rate

    def gap(self, start, end):
        gap = GapSpec(int(start), int(end), self.hop)
        gap.check_bounds(self.buffer.length)
        return gap

    def masked(self, gaps):
        fm = self.features
        for g in gaps:
            fm = invalidate_gap(fm, g, self.buffer.length)
        return fm


def analyze(buf, config=None, timings=None):
    config = config or AlgoConfig()
    timings = {} if timings is None else timings
    with _Timer(timings, "feature_extraction"):
        fm = extract_features(downmix_mono(buf), config.stft_params(), config.max_rate,
                              config.db_range, config.phase_weight, config.smooth_length)
    return Analysis(buf, config, fm)


@dataclass(eq=False)
class InpaintResult:
    buffer: object
    gaps: list
    pairs: list
    plans: list
    reports: list
    timings: dict = field(default_factory=dict)
    graphs: list = field(default_factory=list)

    def report(self, seed=None, include_timings=False):
        out = {"schema_version": REPORT_SCHEMA_VERSION,
               "seed": seed,
               "sample_rate": int(self.buffer.sample_rate),
               "output_length": self.buffer.length,
               "gaps": self.reports}
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


def _as_gaps(analysis, gaps):
    out = []
    for g in gaps:
        start, end = (g.start_sample, g.end_sample) if isinstance(g, GapSpec) else g
        out.append(analysis.gap(start, end))
    out.sort(key=lambda g: g.start_sample)
    for a, b in zip(out, out[1:]):
        if b.start_sample < a.end_sample:
            raise InvalidGap("gaps overlap")
    return out


def find_transition(analysis, gap, features=None, timings=None):
    """Reduced graph and optimal transition pair for one gap."""
    cfg = analysis.config
    timings = {} if timings is None else timings
    fm = features if features is not None else analysis.masked([gap])
    params = cfg.graph_params(analysis.frame_rate)
    with _Timer(timings, "graph_construction"):
        graph = reduced_graph(fm, gap, params)
    min_len = max(cfg.kernel_length,
                  2 * -(-analysis.half_window // analysis.hop))
    with _Timer(timings, "transition_selection"):
        pair = select(graph.ws, gap, params.eps_before, params.eps_after,
                      cfg.objective_params(), valid=fm.valid, min_length=min_len,
                      threshold=params.weight_threshold)
    return graph, pair


def inpaint(buf, gaps, config=None, analysis=None, timings=None):
    """Conceal every ``[start, end)`` sample interval in ``gaps``.

    Parameters
    ----------
    buf : AudioBuffer
        Signal containing the gaps (their content is ignored).
    gaps : list of (int, int) or GapSpec
    config : AlgoConfig, optional
    analysis : Analysis, optional
        Precomputed features of ``buf``; computed when omitted.
    timings : dict, optional
        Accumulates seconds per processing stage.

    Returns
    -------
    InpaintResult
    """
    timings = {} if timings is None else timings
    if analysis is None:
        analysis = analyze(buf, config, timings)
    cfg = analysis.config
    gaps = _as_gaps(analysis, gaps)
    fm = analysis.masked(gaps)
    mono = downmix_mono(buf).mono
    hop, half = analysis.hop, analysis.half_window

    pairs, plans, reports, graphs = [], [], [], []
    for gap in gaps:
        graph, pair = find_transition(analysis, gap, fm, timings)
        with _Timer(timings, "signal_reconstruction"):
            plan = plan_splice(mono, pair, gap, hop, half,
                                   correlation=cfg.correlation)
        pairs.append(pair)
        plans.append(plan)
        graphs.append(graph)
        reports.append({
            "gap": {"start_sample": gap.start_sample, "end_sample": gap.end_sample,
                    "start_frame": gap.start_frame, "end_frame": gap.end_frame},
            "sigma": graph.sigma,
            "query_frames": int(len(graph.queries)),
            "graph_edges": int(len(graph.ws)),
            "transition": pair.report(gap, cfg.objective_params()),
            "splice": plan.report(float(buf.sample_rate)),
        })
    for a, b in zip(plans, plans[1:]):
        if a.cut_end + a.half_window > b.cut_start - b.half_window:
            raise OutOfBounds("cross-fade regions of neighbouring gaps overlap")

    out = buf
    with _Timer(timings, "signal_reconstruction"):
        for plan in reversed(plans):
            out = crossfade_splice(out, plan, source=buf)
    return InpaintResult(out, gaps, pairs, plans, reports, timings, graphs)


def relative_error(restored, reference):
    """Relative l2 error; ``inf`` when the lengths differ."""
    a, b = np.asarray(restored.data), np.asarray(reference.data)
    if a.shape != b.shape:
        return float("inf")
    ref = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / ref) if ref else float(np.linalg.norm(a))


def redundant_gap_positions(half_length, gap_length, trials, seed, margin=0.05):
    """Seeded gap starts for a signal doubled from ``half_length`` samples.

    Gaps avoid the outer ``margin`` fraction of the doubled signal and stay
    at least as far from the junction between the two copies.
    """
    rng = np.random.default_rng(seed)
    total = 2 * half_length
    pad = int(np.ceil(margin * total))
    ranges = [(pad, half_length - pad - gap_length),
              (half_length + pad, total - pad - gap_length)]
    ranges = [(a, b) for a, b in ranges if b >= a]
    if not ranges:
        raise SignalTooShort(
            f"{half_length} samples are too short for gaps of {gap_length} samples")
    sizes = np.array([b - a + 1 for a, b in ranges], dtype=float)
    starts = []
    for _ in range(trials):
        a, b = ranges[rng.choice(len(ranges), p=sizes / sizes.sum())]
        starts.append(int(rng.integers(a, b + 1)))
    return starts


@dataclass
class VerifyTrial:
    gap_start: int
    gap_end: int
    error: float
    mismatch: "int | None" = None

    @property
    def passed(self):
        return self.error < VERIFY_TOLERANCE


VERIFY_TOLERANCE = 1e-6


def frame_aligned(buf, config=None):
    """Trim ``buf`` to a whole number of effective hops.

    Once the signal is repeated, the repetition period then lies on the
    frame grid. Otherwise the lags on both sides of the period carry
    similarity ridges, and a transition pair mixing them places the true
    cut outside the half-hop reach of the refinement.
    """
    config = config or AlgoConfig()
    hop = effective_hop(config.hop, decimation_factor(buf.sample_rate, config.max_rate))
    return buf.with_data(buf.data[:, :buf.length - buf.length % hop])


def verify_redundant(buf, gap_seconds, trials=5, seed=0, config=None, align=True):
    """Double ``buf``, cut seeded gaps, conceal them, and measure the
    relative l2 error against the uncorrupted double.

    With ``align`` the input is first trimmed by :func:`frame_aligned`.
    """
    if align:
        buf = frame_aligned(buf, config)
    reference = buf.with_data(np.concatenate([buf.data, buf.data], axis=1))
    gap_length = int(round(gap_seconds * float(buf.sample_rate)))
    if gap_length == 0:
        return [VerifyTrial(0, 0, 0.0) for _ in range(trials)]
    if buf.length < 2 * gap_length:
        raise SignalTooShort("input must be at least twice the gap length")
    out = []
    for start in redundant_gap_positions(buf.length, gap_length, trials, seed):
        data = reference.data.copy()
        data[:, start:start + gap_length] = 0.0
        res = inpaint(reference.with_data(data), [(start, start + gap_length)], config)
        out.append(VerifyTrial(start, start + gap_length,
                               relative_error(res.buffer, reference),
                               res.pairs[0].mismatch))
    return out
