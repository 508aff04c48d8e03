"""Synthetic test signals.

All generators take a duration in seconds, a sample rate and a seed, and
return a 1-D float array peaking below 1.
"""

import numpy as np
from scipy import signal


def _normalise(x, peak=0.5):
    return x * (peak / np.max(np.abs(x)))


def _floor(rng, n, level):
    return level * rng.standard_normal(n)


def tone_mixture(duration, sample_rate=44100, seed=0):
    """Sequence of overlapping harmonic notes with decaying envelopes."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    t = 0.0
    scale = 220.0 * 2 ** (np.array([0, 2, 3, 5, 7, 8, 10, 12, 14, 15]) / 12)
    while t < duration:
        length = rng.uniform(0.12, 0.45)
        f0 = rng.choice(scale) * rng.choice([0.5, 1, 2])
        m = int(round(min(length * 2.5, duration - t) * sample_rate))
        tt = np.arange(m) / sample_rate
        env = np.exp(-tt / (0.4 * length)) * (1 - np.exp(-tt / 0.005))
        note = sum(rng.uniform(0.2, 1.0) / h * np.sin(2 * np.pi * h * f0 * tt + rng.uniform(0, 2 * np.pi))
                   for h in range(1, 5))
        i = int(round(t * sample_rate))
        out[i:i + m] += rng.uniform(0.4, 1.0) * env * note
        t += length
    return _normalise(out) + _floor(rng, n, 1e-4)


def drum_loop(duration, sample_rate=44100, seed=0, bpm=117.0):
    """Kick, snare and hi-hat pattern, re-drawn with variations every bar."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    step = 60.0 / bpm / 4
    b, a = signal.butter(2, [800, 5000], btype="band", fs=sample_rate)
    bh, ah = signal.butter(2, 6000, btype="high", fs=sample_rate)

    def hit(kind, m):
        tt = np.arange(m) / sample_rate
        if kind == "kick":
            f = 50 + 120 * np.exp(-tt / 0.03)
            return np.sin(2 * np.pi * np.cumsum(f) / sample_rate) * np.exp(-tt / 0.15)
        if kind == "snare":
            noise = signal.lfilter(b, a, rng.standard_normal(m))
            return 3 * noise * np.exp(-tt / 0.08) + 0.4 * np.sin(2 * np.pi * 190 * tt) * np.exp(-tt / 0.05)
        noise = signal.lfilter(bh, ah, rng.standard_normal(m))
        return 2 * noise * np.exp(-tt / 0.02)

    k = 0
    while k * step < duration:
        if k % 16 == 0:
            pattern = {"kick": rng.random(16) < [0.95, 0, 0.2, 0, 0.1, 0, 0.3, 0.2] * 2,
                       "snare": rng.random(16) < [0, 0, 0, 0, 0.95, 0, 0, 0.15] * 2,
                       "hat": rng.random(16) < 0.7}
        for kind in ("kick", "snare", "hat"):
            if pattern[kind][k % 16]:
                i = int(round(k * step * sample_rate)) + int(rng.integers(0, 200))
                m = min(int(0.4 * sample_rate), n - i)
                if m > 0:
                    out[i:i + m] += rng.uniform(0.5, 1.0) * hit(kind, m)
        k += 1
    return _normalise(out) + _floor(rng, n, 1e-4)


def chirp_bed(duration, sample_rate=44100, seed=0, bed_db=-40.0):
    """Random up/down chirps over a steady broadband noise bed."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    t = 0.0
    while t < duration:
        length = rng.uniform(0.2, 0.8)
        m = int(round(min(length, duration - t) * sample_rate))
        tt = np.arange(m) / sample_rate
        f0, f1 = rng.uniform(200, 3000, size=2)
        x = signal.chirp(tt, f0, max(tt[-1], 1e-3), f1, method="logarithmic")
        env = np.sin(np.pi * np.arange(m) / m) ** 2
        i = int(round(t * sample_rate))
        out[i:i + m] += rng.uniform(0.3, 1.0) * env * x
        t += rng.uniform(0.1, 0.6)
    out = _normalise(out)
    bed = signal.lfilter([1.0], [1.0, -0.9], rng.standard_normal(n))
    return out + 0.5 * 10 ** (bed_db / 20) * bed / np.std(bed)


def speech_like(duration, sample_rate=44100, seed=0):
    """Noise through random formant filters, gated by a syllabic envelope."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    out = np.zeros(n)
    t = 0.0
    while t < duration:
        length = rng.uniform(0.12, 0.35)
        m = int(round(min(length, duration - t) * sample_rate))
        src = rng.standard_normal(m)
        if rng.random() < 0.6:
            f0 = rng.uniform(100, 220)
            src = src * 0.3 + signal.sawtooth(2 * np.pi * f0 * np.arange(m) / sample_rate)
        y = np.zeros(m)
        for f in rng.uniform([300, 900, 2200], [900, 2200, 3500]):
            b, a = signal.iirpeak(f, 8.0, fs=sample_rate)
            y += signal.lfilter(b, a, src)
        env = np.sin(np.pi * np.arange(m) / m) ** 1.5
        i = int(round(t * sample_rate))
        out[i:i + m] += rng.uniform(0.3, 1.0) * env * y
        t += length + rng.uniform(0.0, 0.15)
    return _normalise(out) + _floor(rng, n, 1e-4)


def white_noise(duration, sample_rate=44100, seed=0):
    rng = np.random.default_rng(seed)
    return 0.25 * rng.standard_normal(int(round(duration * sample_rate)))


FIXTURES = {
    "tone_mixture": tone_mixture,
    "drum_loop": drum_loop,
    "chirp_bed": chirp_bed,
    "speech_like": speech_like,
}
