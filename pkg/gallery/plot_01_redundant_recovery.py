"""
Restoring a gap in a signal that repeats itself
===============================================

When the material around a gap occurs a second time elsewhere in the
recording, the concealment should copy it back sample for sample. This
script builds such a signal by playing a synthetic drum loop twice, blanks
two seconds of the second copy and conceals them.
"""

# %%
# Build the test signal. The loop is trimmed to a whole number of
# effective hops, so the repetition lies exactly on the frame grid.
import numpy as np
import matplotlib.pyplot as plt

from graphinpaint import AudioBuffer, inpaint, relative_error
from graphinpaint.pipeline import frame_aligned
from graphinpaint.synth import drum_loop

from _common import save

rate = 44100
loop = frame_aligned(AudioBuffer(drum_loop(8.0, rate, seed=1), rate))
reference = loop.with_data(np.concatenate([loop.data, loop.data], axis=1))
start = loop.length + 3 * rate
gap = (start, start + 2 * rate)

corrupted = reference.data.copy()
corrupted[:, gap[0]:gap[1]] = 0.0
corrupted = reference.with_data(corrupted)

# %%
# Conceal the gap. The result carries the chosen transition pair: frames
# ``l0 -> k0`` leave the signal before the gap, frames ``l1 -> k1`` return
# after it.
result = inpaint(corrupted, [gap])
pair = result.pairs[0]
print(f"entry {pair.l0} -> {pair.k0}, exit {pair.l1} -> {pair.k1}")
print(f"jump length {pair.l0 - pair.k0} frames, loop length {loop.length // 512} frames")
print(f"duration mismatch {pair.mismatch}, edge weights {pair.w0:.2f} and {pair.w1:.2f}")

# %%
# Because the replacement comes from the first copy of the loop, the
# restored signal equals the uncorrupted one up to rounding.
print(f"relative error: {relative_error(result.buffer, reference):.2e}")

# %%
# The plot shows the corrupted region and the cross-fade regions around
# the two joins.
t = np.arange(reference.length) / rate
fig, axes = plt.subplots(2, 1, figsize=(9, 5), sharex=True)
axes[0].plot(t, corrupted.mono, lw=0.4)
axes[0].axvspan(gap[0] / rate, gap[1] / rate, color="tab:red", alpha=0.2)
axes[0].set_title("corrupted")
axes[1].plot(t, result.buffer.mono, lw=0.4)
for a, b in result.plans[0].regions():
    axes[1].axvspan(a / rate, b / rate, color="tab:green", alpha=0.3)
axes[1].set_title("restored, with the cross-fade regions")
axes[1].set_xlabel("time [s]")
axes[1].set_xlim(gap[0] / rate - 2.5, gap[1] / rate + 2.5)
save(fig, "redundant_recovery.png")
