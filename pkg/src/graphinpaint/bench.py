"""Per-stage timing of the complete pipeline."""

from dataclasses import dataclass, field
import time

import numpy as np
from scipy import stats

from .errors import InvalidArgument
from .pipeline import STAGES, inpaint


@dataclass
class BenchInput:
    """Timings of one input over all repetitions (seconds)."""

    name: str
    minutes: float
    stages: dict = field(default_factory=lambda: {s: [] for s in STAGES})
    totals: list = field(default_factory=list)

    def per_minute(self, values):
        return np.asarray(values) / self.minutes


@dataclass
class BenchReport:
    inputs: list

    def stage_table(self):
        """``{stage: (mean, std)}`` of seconds per minute of audio, pooled
        over inputs and repetitions; the ``"total"`` row sums the stages."""
        out = {}
        for stage in STAGES + ("total",):
            v = np.concatenate([
                b.per_minute(b.totals if stage == "total" else b.stages[stage])
                for b in self.inputs])
            out[stage] = (float(v.mean()), float(v.std()))
        return out

    def feature_share(self):
        """Fraction of the summed run time spent extracting features."""
        feat = sum(sum(b.stages["feature_extraction"]) for b in self.inputs)
        return feat / sum(sum(b.totals) for b in self.inputs)

    def linear_fit(self):
        """``(slope [s/min], intercept [s], r_squared)`` of the mean total
        time against duration, or None with fewer than two durations."""
        minutes = np.array([b.minutes for b in self.inputs])
        if len(np.unique(minutes)) < 2:
            return None
        totals = np.array([np.mean(b.totals) for b in self.inputs])
        fit = stats.linregress(minutes, totals)
        return float(fit.slope), float(fit.intercept), float(fit.rvalue ** 2)

    def to_dict(self):
        fit = self.linear_fit()
        return {
            "inputs": [{"name": b.name, "minutes": b.minutes,
                        "total_seconds": b.totals,
                        "stage_seconds": b.stages} for b in self.inputs],
            "per_minute": {k: {"mean": m, "std": s}
                           for k, (m, s) in self.stage_table().items()},
            "feature_share": self.feature_share(),
            "linear_fit": None if fit is None else dict(
                zip(("slope_s_per_min", "intercept_s", "r_squared"), fit)),
        }


def middle_gap(buf, gap_seconds=2.0):
    """``[start, end)`` of a gap of ``gap_seconds`` centred in ``buf``."""
    n = int(round(gap_seconds * float(buf.sample_rate)))
    start = (buf.length - n) // 2
    return start, start + n


def run_bench(buffers, reps=3, config=None, gap_seconds=2.0, names=None):
    """Inpaint a centred gap in every buffer ``reps`` times.

    Parameters
    ----------
    buffers : list of AudioBuffer
    reps : int
    config : AlgoConfig, optional
    gap_seconds : float
    names : list of str, optional

    Returns
    -------
    BenchReport
    """
    if reps < 1:
        raise InvalidArgument("reps must be >= 1")
    if not buffers:
        raise InvalidArgument("at least one input is required")
    names = names or [f"input{i}" for i in range(len(buffers))]
    out = []
    for name, buf in zip(names, buffers):
        entry = BenchInput(name, buf.duration / 60.0)
        gap = middle_gap(buf, gap_seconds)
        for _ in range(reps):
            timings = {}
            t0 = time.perf_counter()
            inpaint(buf, [gap], config, timings=timings)
            entry.totals.append(time.perf_counter() - t0)
            for stage in STAGES:
                entry.stages[stage].append(timings.get(stage, 0.0))
        out.append(entry)
    return BenchReport(out)
