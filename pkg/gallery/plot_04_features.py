"""
What the frame features see
===========================

Each frame is described by a clipped dB spectrum and by a phase-derived
term telling how far the energy in each channel sits from the channel
centre. The second part separates sounds whose magnitude spectra look
alike but whose pitch differs slightly.
"""

# %%
import numpy as np
import matplotlib.pyplot as plt

from graphinpaint import AudioBuffer, NoTransitionFound, extract_features, inpaint
from graphinpaint.synth import white_noise

from _common import save

# %%
# A slow chirp at the decimated rate of 11025 Hz passes through several
# channels. Within each channel the phase term runs from negative to
# positive as the frequency crosses the centre.
rate = 44100
t = np.arange(4 * rate) / rate
f = 1000 + 50 * t
x = 0.5 * np.cos(2 * np.pi * np.cumsum(f) / rate)
fm = extract_features(AudioBuffer(x, rate))
print(f"{fm.n_frames} frames at {fm.frame_rate:.1f} frames/s, "
      f"{fm.F1.shape[0]} channels per frame")

fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
extent = [0, fm.n_frames / fm.frame_rate, 0, fm.sample_rate / fm.decimation / 2]
axes[0].imshow(fm.F1, origin="lower", aspect="auto", extent=extent, cmap="magma")
axes[0].set_title("clipped dB spectrum")
axes[1].imshow(fm.F2, origin="lower", aspect="auto", extent=extent, cmap="coolwarm",
               vmin=-1, vmax=1)
axes[1].set_title("relative frequency offset")
for ax in axes:
    ax.set_ylim(800, 1400)
    ax.set_xlabel("time [s]")
axes[0].set_ylabel("frequency [Hz]")
save(fig, "features.png")

# %%
# White noise has no structure that repeats, so no frame pair is similar
# for long enough and the pipeline refuses to guess.
noise = AudioBuffer(white_noise(30.0, rate, seed=3), rate)
try:
    inpaint(noise, [(14 * rate, 16 * rate)])
except NoTransitionFound as exc:
    print(f"white noise: {exc}")
