"""WAV input/output, mono downmix and integer decimation."""

from dataclasses import dataclass, field
from fractions import Fraction
import math
import wave

import numpy as np
from scipy import signal
from scipy.io import wavfile

from .errors import (AudioIoError, EmptySignal, GapOutOfBounds, InvalidGap,
                     InvalidRate, UnsupportedFormat)

SUBTYPES = ("PCM_16", "PCM_24", "FLOAT")

# 60 dB Kaiser design, transition width relative to the input rate
_STOPBAND_DB = 60.0
_WIDTH_FACTOR = 20


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """Multichannel audio, stored as a ``(channels, length)`` float array.

    ``sample_rate`` is an ``int`` for file-backed buffers and may be a
    :class:`fractions.Fraction` for decimated ones.
    """

    data: np.ndarray
    sample_rate: "int | Fraction"
    subtype: str = "FLOAT"

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError("audio data must be 1-D or (channels, length)")
        if not np.all(np.isfinite(data)):
            raise ValueError("audio samples must be finite")
        if self.sample_rate <= 0:
            raise InvalidRate(f"sample rate must be positive, got {self.sample_rate}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n_channels(self):
        return self.data.shape[0]

    @property
    def length(self):
        return self.data.shape[1]

    @property
    def duration(self):
        return float(self.length / self.sample_rate)

    @property
    def mono(self):
        """Samples of a single-channel buffer as a 1-D array."""
        if self.n_channels != 1:
            raise ValueError("buffer is not mono")
        return self.data[0]

    def with_data(self, data):
        return AudioBuffer(data, self.sample_rate, self.subtype)


@dataclass(frozen=True)
class GapSpec:
    """A known-corrupt interval ``[start_sample, end_sample)`` of the input.

    Frame bounds are derived from the effective hop ``hop`` (undecimated
    samples per analysis frame).
    """

    start_sample: int
    end_sample: int
    hop: int = field(default=512)

    def __post_init__(self):
        if not (0 <= self.start_sample < self.end_sample):
            raise InvalidGap(
                f"gap [{self.start_sample}, {self.end_sample}) is empty or negative")
        if self.hop < 1:
            raise InvalidGap("hop must be positive")

    @property
    def start_frame(self):
        return self.start_sample // self.hop

    @property
    def end_frame(self):
        return -(-self.end_sample // self.hop)

    @property
    def length(self):
        return self.end_sample - self.start_sample

    def check_bounds(self, length):
        if self.end_sample > length:
            raise GapOutOfBounds(
                f"gap end {self.end_sample} exceeds signal length {length}")

    @classmethod
    def from_seconds(cls, start, end, sample_rate, hop=512):
        return cls(int(round(start * sample_rate)), int(round(end * sample_rate)), hop)


def read_audio(path):
    """Read a 16/24-bit PCM or 32-bit float WAV file into [-1, 1] floats.

    Integer samples are scaled by ``2**(bits-1)``, so ``+32767`` becomes
    ``32767/32768``.
    """
    try:
        rate, raw = wavfile.read(path)
    except FileNotFoundError as exc:
        raise AudioIoError(str(exc)) from exc
    except ValueError as exc:
        raise UnsupportedFormat(f"{path}: {exc}") from exc
    except OSError as exc:
        raise AudioIoError(str(exc)) from exc

    if raw.dtype == np.int16:
        data = raw.astype(np.float64) / 32768.0
        subtype = "PCM_16"
    elif raw.dtype == np.int32:
        bits = _pcm_bits(path)
        if bits != 24:
            raise UnsupportedFormat(f"{path}: {bits}-bit integer PCM is not supported")
        # scipy left-justifies 24-bit samples in int32
        data = raw.astype(np.float64) / 2147483648.0
        subtype = "PCM_24"
    elif raw.dtype == np.float32:
        data = raw.astype(np.float64)
        subtype = "FLOAT"
    else:
        raise UnsupportedFormat(f"{path}: sample type {raw.dtype} is not supported")

    data = data.T if data.ndim == 2 else data[np.newaxis, :]
    if data.shape[0] > 2:
        raise UnsupportedFormat(f"{path}: {data.shape[0]} channels, at most 2 supported")
    if data.shape[1] == 0:
        raise EmptySignal(f"{path}: no samples")
    return AudioBuffer(data, int(rate), subtype)


def _pcm_bits(path):
    with wave.open(str(path), "rb") as fh:
        return 8 * fh.getsampwidth()


def write_audio(path, buf, subtype=None):
    """Write ``buf`` as WAV. ``subtype`` defaults to the buffer's own."""
    subtype = subtype or buf.subtype
    if subtype not in SUBTYPES:
        raise UnsupportedFormat(f"unknown subtype {subtype!r}")
    if isinstance(buf.sample_rate, Fraction) and buf.sample_rate.denominator != 1:
        raise UnsupportedFormat("WAV requires an integer sample rate")
    rate = int(buf.sample_rate)
    frames = buf.data.T
    try:
        if subtype == "FLOAT":
            wavfile.write(path, rate, np.ascontiguousarray(frames, dtype=np.float32))
        elif subtype == "PCM_16":
            wavfile.write(path, rate, _quantize(frames, 16).astype(np.int16))
        else:
            q = _quantize(frames, 24).astype("<i4")
            packed = q.view(np.uint8).reshape(q.shape + (4,))[..., :3]
            with wave.open(str(path), "wb") as fh:
                fh.setnchannels(buf.n_channels)
                fh.setsampwidth(3)
                fh.setframerate(rate)
                fh.writeframes(packed.tobytes())
    except OSError as exc:
        raise AudioIoError(str(exc)) from exc


def _quantize(x, bits):
    scale = float(2 ** (bits - 1))
    return np.clip(np.round(x * scale), -scale, scale - 1)


def downmix_mono(buf):
    """Average all channels. A mono buffer is returned as is."""
    if buf.n_channels == 1:
        return buf
    return buf.with_data(buf.data.mean(axis=0))


def decimation_factor(sample_rate, max_rate):
    if max_rate <= 0:
        raise InvalidRate(f"maximum rate must be positive, got {max_rate}")
    return max(1, math.ceil(Fraction(sample_rate) / Fraction(max_rate)))


def antialias_filter(factor, sample_rate=1.0):
    """Linear-phase Kaiser FIR for decimation by ``factor`` (odd length)."""
    nyq = 0.5 * sample_rate
    width = sample_rate / (_WIDTH_FACTOR * factor)
    numtaps, beta = signal.kaiserord(_STOPBAND_DB, width / nyq)
    numtaps |= 1
    return signal.firwin(numtaps, nyq / factor, window=("kaiser", beta), fs=sample_rate)


def decimate(buf, max_rate):
    """Low-pass and downsample a mono buffer to at most ``max_rate`` Hz.

    Returns ``(decimated_buffer, factor)``. The filter delay is compensated,
    so decimated sample ``j`` sits at input sample ``j * factor``.
    """
    factor = decimation_factor(buf.sample_rate, max_rate)
    if factor == 1:
        return buf, 1
    x = buf.mono
    h = antialias_filter(factor)
    delay = (len(h) - 1) // 2
    y = signal.oaconvolve(x, h)[delay:delay + len(x):factor]
    rate = Fraction(buf.sample_rate) / factor
    if rate.denominator == 1:
        rate = int(rate)
    return AudioBuffer(y, rate, buf.subtype), factor
