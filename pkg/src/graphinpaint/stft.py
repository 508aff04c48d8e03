"""Painless short-time Fourier analysis and synthesis.

Conventions
-----------
Frame ``n`` is centred at sample ``n * hop``: the window sample ``g[j]``
multiplies signal sample ``n * hop - L_w // 2 + j`` (indices taken modulo the
padded signal length). Phases are referenced to absolute time,

    C[m, n] = sum_l x[l] g[l - n*hop] exp(-2j*pi*m*l/M),

and real input is stored as the ``M // 2 + 1`` non-negative frequency rows.
Signals are zero padded to a multiple of ``lcm(hop, M)`` so the circular
convention is well defined.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidLength, NotInvertible, ParamMismatch

_BLOCK_FRAMES = 2048


@dataclass(frozen=True)
class StftParams:
    window_length: int = 1024
    hop: int = 128
    channels: int = 1024
    window_kind: str = "itersine"

    def __post_init__(self):
        if self.window_length < 1 or self.hop < 1 or self.channels < 1:
            raise ParamMismatch("window length, hop and channels must be positive")
        if self.channels < self.window_length:
            raise ParamMismatch(
                f"channels ({self.channels}) must be >= window length "
                f"({self.window_length})")

    @property
    def redundancy(self):
        return self.channels / self.hop

    @property
    def n_rows(self):
        return self.channels // 2 + 1

    def padded_length(self, length):
        """Smallest admissible signal length >= ``length``."""
        step = math.lcm(self.hop, self.channels)
        return max(step, -(-length // step) * step)

    def n_frames(self, length):
        return self.padded_length(length) // self.hop


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """STFT coefficients of a real signal (non-negative frequencies only)."""

    coeffs: np.ndarray
    params: StftParams
    signal_length: int
    kind: str = "plain"

    @property
    def shape(self):
        return self.coeffs.shape

    @property
    def n_frames(self):
        return self.coeffs.shape[1]

    def full(self):
        """Expand to all ``M`` rows using conjugate symmetry."""
        M = self.params.channels
        mirror = np.conj(self.coeffs[1:M - M // 2][::-1])
        return np.concatenate([self.coeffs, mirror], axis=0)


def itersine_window(length):
    """Itersine window ``sin(pi/2 * cos(pi*(l - L/2)/L)**2)``."""
    if length <= 0 or length % 2:
        raise InvalidLength(f"itersine window needs a positive even length, got {length}")
    l = np.arange(length)
    return np.sin(0.5 * np.pi * np.cos(np.pi * (l - length / 2) / length) ** 2)


def derivative_window(g):
    """Spectral derivative (per sample) of the periodised window ``g``."""
    g = np.asarray(g, dtype=np.float64)
    n = len(g)
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.real(np.fft.ifft(2j * np.pi * k / n * np.fft.fft(g)))


def window_for(params):
    if params.window_kind != "itersine":
        raise ParamMismatch(f"unknown window kind {params.window_kind!r}")
    return itersine_window(params.window_length)


def frame_norm(params, window):
    """``sum_n g[l - n*hop]**2`` over one hop period (length ``hop``)."""
    window = np.asarray(window, dtype=np.float64)
    out = np.zeros(params.hop)
    idx = (np.arange(len(window)) - len(window) // 2) % params.hop
    np.add.at(out, idx, window ** 2)
    return out


def _frame_indices(frames, params, length):
    Lw = params.window_length
    start = frames * params.hop - Lw // 2
    return (start[:, np.newaxis] + np.arange(Lw)) % length


def _phase(frames, params):
    # absolute-time phase reference: exp(-2j*pi*m*(n*hop - Lw/2)/M)
    M = params.channels
    m = np.arange(params.n_rows)
    shift = (frames * params.hop - params.window_length // 2) % M
    return np.exp(-2j * np.pi * np.outer(shift, m) / M)


def stft(x, params, window=None, kind="plain", frames=None):
    """Analyse a real signal.

    Parameters
    ----------
    x : array_like
        Real signal; zero padded to ``params.padded_length(len(x))``.
    params : StftParams
    window : array_like, optional
        Analysis window of length ``params.window_length`` (Itersine if
        omitted).
    kind : str
        Label stored with the result, ``"plain"`` or ``"derivative"``.
    frames : array_like of int, optional
        Compute only these frame columns.

    Returns
    -------
    CoefficientMatrix
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ParamMismatch("stft expects a 1-D signal")
    if window is None:
        window = window_for(params)
    window = np.asarray(window, dtype=np.float64)
    if len(window) != params.window_length:
        raise ParamMismatch(
            f"window has {len(window)} samples, expected {params.window_length}")
    length = params.padded_length(len(x))
    if length != len(x):
        x = np.concatenate([x, np.zeros(length - len(x))])
    if frames is None:
        frames = np.arange(length // params.hop)
    frames = np.asarray(frames, dtype=np.int64)

    out = np.empty((params.n_rows, len(frames)), dtype=np.complex128)
    for b in range(0, len(frames), _BLOCK_FRAMES):
        fr = frames[b:b + _BLOCK_FRAMES]
        segs = x[_frame_indices(fr, params, length)] * window
        spec = np.fft.rfft(segs, n=params.channels, axis=1)
        out[:, b:b + len(fr)] = (spec * _phase(fr, params)).T
    return CoefficientMatrix(out, params, length, kind)


def istft(C, params=None, window=None):
    """Invert a painless STFT with the canonical dual window.

    For the Itersine window this is plain tight-frame synthesis with ``g``
    divided by the constant ``L_w / (2 * hop)``.
    """
    params = params or C.params
    if C.params != params:
        raise ParamMismatch("coefficients were computed with different parameters")
    if window is None:
        window = window_for(params)
    window = np.asarray(window, dtype=np.float64)
    norm = frame_norm(params, window)
    if params.channels < params.window_length or np.any(norm <= 0):
        raise NotInvertible("window translates do not cover every sample")
    length = C.signal_length
    if C.n_frames * params.hop != length:
        raise ParamMismatch("coefficient matrix does not match signal length")

    out = np.zeros(length)
    Lw = params.window_length
    for b in range(0, C.n_frames, _BLOCK_FRAMES):
        fr = np.arange(b, min(b + _BLOCK_FRAMES, C.n_frames))
        spec = C.coeffs[:, fr].T / _phase(fr, params)
        segs = np.fft.irfft(spec, n=params.channels, axis=1)[:, :Lw] * window
        idx = _frame_indices(fr, params, length)
        out += np.bincount(idx.ravel(), weights=segs.ravel(), minlength=length)
    return out / np.tile(norm, length // params.hop)
