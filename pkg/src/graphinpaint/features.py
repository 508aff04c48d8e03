"""Per-frame similarity features: clipped dB spectrogram plus smoothed
relative instantaneous frequency."""

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy import ndimage

from . import stft as _stft
from .audio_io import decimate, downmix_mono
from .errors import DimensionMismatch, GapOutOfBounds, InvalidRange

LOG_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Feature columns ``f_n = (F1[:, n], phase_weight * F2[:, n])``.

    Only the ``M // 2 + 1`` non-negative frequency rows are stored. The rows
    ``m`` and ``M - m`` of the full matrices agree in ``F1`` and differ in
    sign in ``F2``, so :attr:`vectors` weights the mirrored rows by
    ``sqrt(2)``; Euclidean distances between :attr:`vectors` then equal the
    distances between the full ``2M``-dimensional features.
    """

    F1: np.ndarray
    F2: np.ndarray
    phase_weight: float
    valid: np.ndarray
    channels: int
    hop: int = 128
    decimation: int = 1
    window_length: int = 1024
    sample_rate: float = 44100.0

    def __post_init__(self):
        if self.F1.shape != self.F2.shape:
            raise DimensionMismatch(f"F1 {self.F1.shape} vs F2 {self.F2.shape}")
        if self.valid.shape != (self.F1.shape[1],):
            raise DimensionMismatch("validity mask does not match frame count")

    @property
    def n_frames(self):
        return self.F1.shape[1]

    @property
    def effective_hop(self):
        """Undecimated samples per frame."""
        return self.hop * self.decimation

    @property
    def frame_rate(self):
        return self.sample_rate / self.effective_hop

    def frame_time(self, n):
        return np.asarray(n) * self.effective_hop / self.sample_rate

    @cached_property
    def row_weights(self):
        M = self.channels
        w = np.ones(self.F1.shape[0])
        w[1:M - M // 2] = np.sqrt(2.0)
        return w

    @cached_property
    def vectors(self):
        """``(n_frames, 2 * rows)`` distance-preserving embedding."""
        w = self.row_weights[:, np.newaxis]
        out = np.empty((self.n_frames, 2 * self.F1.shape[0]))
        out[:, :self.F1.shape[0]] = (self.F1 * w).T
        out[:, self.F1.shape[0]:] = (self.F2 * (self.phase_weight * w)).T
        return out

    def full_vectors(self):
        """The literal ``2M``-dimensional features (testing aid)."""
        M = self.channels
        F1 = np.concatenate([self.F1, self.F1[1:M - M // 2][::-1]])
        F2 = np.concatenate([self.F2, -self.F2[1:M - M // 2][::-1]])
        return np.concatenate([F1, self.phase_weight * F2]).T

    def with_valid(self, valid):
        return replace(self, valid=np.asarray(valid, dtype=bool))


def _db(magnitude):
    return 20.0 * np.log10(np.maximum(magnitude, LOG_FLOOR))


def _clip_db(S, peak, db_range):
    return np.maximum(S - peak + db_range, 0.0) / db_range


def db_feature(C, db_range=50.0):
    """Peak-normalised dB spectrogram limited to ``db_range`` dB."""
    if db_range <= 0:
        raise InvalidRange(f"dB range must be positive, got {db_range}")
    mag = np.abs(getattr(C, "coeffs", C))
    if not np.any(mag):
        return np.zeros(mag.shape)
    S = _db(mag)
    return _clip_db(S, S.max(), db_range)


def _raw_relative_if(C, Ctd):
    out = np.zeros(C.shape)
    nz = C != 0
    out[nz] = np.imag(Ctd[nz] / C[nz])
    return out


def smoothing_kernel(length):
    """Symmetric Hann kernel of ``length`` points scaled to unit sum."""
    if length < 1:
        raise InvalidRange("smoothing length must be >= 1")
    if length <= 2:
        v = np.ones(length)
    else:
        v = np.hanning(length)
    return v / v.sum()


def _smoothed_if(r, F1, smooth_length):
    mask = F1 > 0
    r = np.where(mask, r, 0.0)
    tp = np.abs(r).max() if r.size else 0.0
    if tp == 0:
        return np.zeros(r.shape)
    smoothed = ndimage.convolve1d(r, smoothing_kernel(smooth_length), axis=1,
                                  mode="constant", cval=0.0)
    return np.where(mask, -smoothed / tp, 0.0)


def relative_if_feature(C, Ctd, F1, smooth_length=8):
    """Smoothed relative instantaneous frequency, normalised to [-1, 1].

    The raw value ``Im(Ctd / C)`` is zeroed wherever ``F1`` is zero, its
    largest magnitude ``t_p`` is taken before smoothing, and the result is
    masked again after the channel-wise Hann smoothing.
    """
    C = getattr(C, "coeffs", C)
    Ctd = getattr(Ctd, "coeffs", Ctd)
    if C.shape != Ctd.shape or C.shape != np.shape(F1):
        raise DimensionMismatch(
            f"shapes differ: C {C.shape}, Ctd {Ctd.shape}, F1 {np.shape(F1)}")
    return _smoothed_if(_raw_relative_if(C, Ctd), F1, smooth_length)


def assemble(F1, F2, phase_weight=1.5, params=None, **meta):
    """Stack both feature parts into a :class:`FeatureMatrix`."""
    F1 = np.asarray(F1, dtype=np.float64)
    F2 = np.asarray(F2, dtype=np.float64)
    if F1.shape != F2.shape:
        raise DimensionMismatch(f"F1 {F1.shape} vs F2 {F2.shape}")
    if params is not None:
        meta.setdefault("channels", params.channels)
        meta.setdefault("hop", params.hop)
        meta.setdefault("window_length", params.window_length)
    meta.setdefault("channels", 2 * (F1.shape[0] - 1))
    return FeatureMatrix(F1, F2, float(phase_weight),
                         np.ones(F1.shape[1], dtype=bool), **meta)


def gap_frames(n_frames, gap, effective_hop, half_support):
    """Boolean mask of frames whose window support meets the gap.

    Frame ``n`` covers undecimated samples
    ``[n*hop - half_support, n*hop + half_support]``.
    """
    centres = np.arange(n_frames) * effective_hop
    return ((centres - half_support <= gap.end_sample - 1)
            & (centres + half_support >= gap.start_sample))


def invalidate_gap(fm, gap, signal_length=None):
    """Mark every frame overlapping ``gap`` invalid."""
    if signal_length is not None:
        gap.check_bounds(signal_length)
    elif gap.end_sample > fm.n_frames * fm.effective_hop:
        raise GapOutOfBounds("gap lies beyond the analysed frames")
    half = fm.window_length * fm.decimation // 2
    hit = gap_frames(fm.n_frames, gap, fm.effective_hop, half)
    return fm.with_valid(fm.valid & ~hit)


def extract_features(buf, params=None, max_rate=12000, db_range=50.0,
                     phase_weight=1.5, smooth_length=8):
    """Decimate ``buf`` and compute its :class:`FeatureMatrix`.

    Multichannel input is analysed through its mono downmix.
    """
    if db_range <= 0:
        raise InvalidRange(f"dB range must be positive, got {db_range}")
    params = params or _stft.StftParams()
    sd, factor = decimate(downmix_mono(buf), max_rate)
    x = sd.mono
    g = _stft.window_for(params)
    gd = _stft.derivative_window(g)

    n_frames = params.n_frames(len(x))
    S = np.empty((params.n_rows, n_frames))
    r = np.empty((params.n_rows, n_frames))
    step = 8192
    for b in range(0, n_frames, step):
        fr = np.arange(b, min(b + step, n_frames))
        C = _stft.stft(x, params, g, frames=fr).coeffs
        Ctd = _stft.stft(x, params, gd, kind="derivative", frames=fr).coeffs
        S[:, fr] = np.abs(C)
        r[:, fr] = _raw_relative_if(C, Ctd)

    if np.any(S):
        S = _db(S)
        F1 = _clip_db(S, S.max(), db_range)
    else:
        F1 = np.zeros(S.shape)
    del S
    F2 = _smoothed_if(r, F1, smooth_length)
    fm = assemble(F1, F2, phase_weight, params, decimation=factor,
                  sample_rate=float(buf.sample_rate))
    # frames whose window lies wholly in the zero padding describe no input
    centres = np.arange(n_frames) * fm.effective_hop
    return fm.with_valid(centres - params.window_length * factor // 2 < buf.length)
