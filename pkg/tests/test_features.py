import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from graphinpaint.audio_io import AudioBuffer, GapSpec, decimate
from graphinpaint.errors import DimensionMismatch, GapOutOfBounds, InvalidRange
from graphinpaint.features import (assemble, db_feature, extract_features, gap_frames,
                                   invalidate_gap, relative_if_feature, smoothing_kernel)
from graphinpaint.stft import StftParams, derivative_window, itersine_window, stft
from graphinpaint.synth import tone_mixture

P = StftParams()


def _spectra(x, params=P):
    g = itersine_window(params.window_length)
    return stft(x, params, g).coeffs, stft(x, params, derivative_window(g)).coeffs


def test_db_single_peak():
    C = np.zeros((4, 3), dtype=complex)
    C[2, 1] = 1.0
    F1 = db_feature(C, 50.0)
    assert F1[2, 1] == 1.0 and np.count_nonzero(F1) == 1


def test_db_clip_boundary_is_exactly_zero():
    F1 = db_feature(np.array([[1.0, 10 ** -2.5, 10 ** -3]]), 50.0)
    assert F1[0, 1] == 0.0 and F1[0, 2] == 0.0


def test_db_direct_evaluation():
    F1 = db_feature(np.array([[1.0, 10 ** -1.25]]), 50.0)
    assert F1[0, 1] == pytest.approx(0.5, abs=1e-15)


def test_db_zero_input_and_bad_range():
    assert not np.any(db_feature(np.zeros((3, 3))))
    with pytest.raises(InvalidRange):
        db_feature(np.ones((2, 2)), 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 31), factor=st.floats(1.0, 1e3))
def test_db_is_monotone_in_each_entry(seed, factor):
    r = np.random.default_rng(seed)
    mag = r.uniform(0, 1, size=(6, 5)) * 10.0 ** r.uniform(-4, 0, size=(6, 5))
    i, j = r.integers(0, 6), r.integers(0, 5)
    bigger = mag.copy()
    bigger[i, j] *= factor
    assert db_feature(bigger)[i, j] >= db_feature(mag)[i, j]


def test_smoothing_kernel():
    k = smoothing_kernel(8)
    assert len(k) == 8 and k.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(k, np.hanning(8) / np.hanning(8).sum())
    assert smoothing_kernel(1).tolist() == [1.0]
    with pytest.raises(InvalidRange):
        smoothing_kernel(0)


def test_relative_if_vanishes_for_channel_centred_tone():
    m0 = 100
    x = np.cos(2 * np.pi * m0 * np.arange(16384) / P.channels)
    C, Ctd = _spectra(x)
    F1 = db_feature(C)
    F2 = relative_if_feature(C, Ctd, F1)
    interior = slice(8, C.shape[1] - 8)
    assert np.max(np.abs(np.imag(Ctd[m0, interior] / C[m0, interior]))) < 1e-6
    assert np.max(np.abs(F2[m0, interior])) < 1e-6


@pytest.mark.parametrize("offset", [0.2, -0.2])
def test_relative_if_sign_follows_offset(offset):
    m0 = 100
    x = np.cos(2 * np.pi * (m0 + offset) * np.arange(16384) / P.channels)
    C, Ctd = _spectra(x)
    F2 = relative_if_feature(C, Ctd, db_feature(C))
    assert np.all(np.sign(F2[m0, 8:-8]) == np.sign(offset))


def test_relative_if_changes_sign_along_chirp():
    # a linear chirp crossing the centre of channel 100 half-way through
    n, M, m0 = 65536, P.channels, 100
    t = np.arange(n)
    f = (m0 - 1.0) / M + (2.0 / M) * t / n
    x = np.cos(2 * np.pi * np.cumsum(f))
    C, Ctd = _spectra(x)
    F2 = relative_if_feature(C, Ctd, db_feature(C))
    row = F2[m0]
    centre = C.shape[1] // 2
    assert np.all(row[centre - 60:centre - 12] < 0)
    assert np.all(row[centre + 12:centre + 60] > 0)


def test_relative_if_masked_where_f1_is_zero(rng):
    C, Ctd = _spectra(rng.standard_normal(8192))
    F1 = db_feature(C)
    F1[:, :10] = 0.0
    F2 = relative_if_feature(C, Ctd, F1)
    assert not np.any(F2[:, :10])
    assert np.all(F2[F1 == 0] == 0)
    assert np.max(np.abs(F2)) <= 1.0
    with pytest.raises(DimensionMismatch):
        relative_if_feature(C, Ctd[:, :3], F1)


def test_assemble_scaling_and_distances(rng):
    F1 = rng.uniform(0, 1, size=(513, 4))
    F2 = rng.uniform(-1, 1, size=(513, 4))
    F2[0, 0] = 0.4
    fm = assemble(F1, F2, 1.5)
    assert fm.full_vectors()[0, 1024] == pytest.approx(0.6)
    assert fm.vectors[0, 513] == pytest.approx(0.6)
    full, half = fm.full_vectors(), fm.vectors
    for a in range(4):
        for b in range(4):
            assert np.sum((half[a] - half[b]) ** 2) == pytest.approx(
                np.sum((full[a] - full[b]) ** 2), rel=1e-12)
    flat = assemble(F1, F2, 0.0)
    d = np.sum((flat.full_vectors()[0] - flat.full_vectors()[1]) ** 2)
    F1full = flat.full_vectors()[:, :1024]
    assert d == pytest.approx(np.sum((F1full[0] - F1full[1]) ** 2))
    twin = assemble(np.repeat(F1[:, :1], 2, axis=1), np.repeat(F2[:, :1], 2, axis=1))
    assert np.array_equal(twin.vectors[0], twin.vectors[1])
    with pytest.raises(DimensionMismatch):
        assemble(F1, F2[:, :2])


def test_gap_frame_count_by_enumeration():
    rate, hop, half = 44100, 512, 2048
    n_frames = 3000
    counts = set()
    for phase in range(0, hop, 7):
        start = 441000 + phase
        gap = GapSpec(start, start + 2 * rate, hop)
        enumerated = [n for n in range(n_frames)
                      if max(n * hop - half, start) <= min(n * hop + half, gap.end_sample - 1)]
        mask = gap_frames(n_frames, gap, hop, half)
        assert np.flatnonzero(mask).tolist() == enumerated
        counts.add(len(enumerated))
    # the closed form is the count for the least favourable gap phase
    expected = math.ceil(2 * rate / hop) + 2 * math.ceil((1024 / 2) / 128)
    assert expected == 181
    assert counts == {expected - 1, expected}


def test_invalidate_gap_on_features():
    buf = AudioBuffer(tone_mixture(6.0, seed=2), 44100)
    fm = extract_features(buf)
    assert fm.decimation == 4 and fm.effective_hop == 512
    assert fm.frame_rate == pytest.approx(44100 / 512)
    at_start = invalidate_gap(fm, GapSpec(0, 1, 512), buf.length)
    assert np.flatnonzero(~at_start.valid).tolist() == [0, 1, 2, 3, 4]
    whole = invalidate_gap(fm, GapSpec(0, buf.length, 512), buf.length)
    assert not np.any(whole.valid)
    with pytest.raises(GapOutOfBounds):
        invalidate_gap(fm, GapSpec(0, buf.length + 1, 512), buf.length)


def test_feature_ranges_and_peak():
    fm = extract_features(AudioBuffer(tone_mixture(6.0, seed=4), 44100))
    assert fm.F1.min() >= 0 and fm.F1.max() == 1.0
    assert np.max(np.abs(fm.F2)) <= 1.0
    vec = fm.full_vectors()
    assert vec.shape == (fm.n_frames, 2 * 1024)
    assert np.max(np.abs(vec[:, 1024:])) <= 1.5


def test_silence_gives_zero_features():
    fm = extract_features(AudioBuffer(np.zeros(44100), 44100))
    assert not np.any(fm.F1) and not np.any(fm.F2)


def test_amplitude_scaling_invariance():
    x = tone_mixture(6.0, seed=5)
    a = extract_features(AudioBuffer(x, 44100))
    b = extract_features(AudioBuffer(0.37 * x, 44100))
    assert np.max(np.abs(a.F1 - b.F1)) < 1e-12
    assert np.max(np.abs(a.F2 - b.F2)) < 1e-12


def test_spectral_columns_depend_only_on_window_support(rng):
    x = rng.standard_normal(44100)
    sd, d = decimate(AudioBuffer(x, 44100), 12000)
    n = 40
    lo, hi = n * 128 - 512, n * 128 + 512
    y = sd.mono.copy()
    y[:lo - 1] += rng.standard_normal(lo - 1)
    y[hi + 1:] += rng.standard_normal(len(y) - hi - 1)
    for g in (itersine_window(1024), derivative_window(itersine_window(1024))):
        a = stft(sd.mono, P, g, frames=[n]).coeffs
        b = stft(y, P, g, frames=[n]).coeffs
        np.testing.assert_array_equal(a, b)


def test_frames_in_padding_only_are_invalid():
    buf = AudioBuffer(tone_mixture(3.0, seed=6), 44100)
    fm = extract_features(buf)
    hop, half = fm.effective_hop, 1024 * fm.decimation // 2
    # enumerate frames whose window reaches at least one input sample
    touching = [n for n in range(fm.n_frames) if n * hop - half < buf.length]
    assert np.flatnonzero(fm.valid).tolist() == touching
    assert len(touching) < fm.n_frames
