"""
The three stages of the similarity graph
=========================================

The graph starts from nearest neighbours in feature space, accumulates
their weights along diagonals so that whole similar passages stand out,
and finally keeps only local maxima above a threshold. On a repeated
signal the surviving edges trace the repetition.
"""

# %%
import numpy as np
import matplotlib.pyplot as plt

from graphinpaint import AlgoConfig, AudioBuffer, analyze, full_graph
from graphinpaint.pipeline import frame_aligned
from graphinpaint.synth import tone_mixture

from _common import save

rate = 44100
half = frame_aligned(AudioBuffer(tone_mixture(6.0, rate, seed=4), rate))
buf = half.with_data(np.concatenate([half.data, half.data], axis=1))
cfg = AlgoConfig()
analysis = analyze(buf, cfg)
params = cfg.graph_params(analysis.frame_rate)
period = half.length // analysis.hop
print(f"{analysis.features.n_frames} frames, repetition every {period} frames")

# %%
# Each stage is computed over the whole signal here. The pipeline itself
# only evaluates the rows it needs around a gap.
stages = {name: full_graph(analysis.features, params, name) for name in ("W0", "W", "Ws")}
for name, g in stages.items():
    lag = np.abs(g.rows - g.cols)
    on_ridge = np.mean(np.abs(lag - period) <= 1)
    print(f"{name:>2}: {len(g):6d} edges, {100 * on_ridge:5.1f}% at the repetition lag")

# %%
# The nearest neighbour stage is noisy. The diagonal accumulation rewards
# runs of neighbours, and sparsification leaves thin lines.
fig, axes = plt.subplots(1, 3, figsize=(12, 4), sharey=True)
for ax, (name, g) in zip(axes, stages.items()):
    ax.scatter(g.cols, g.rows, c=g.weights, s=0.5, cmap="viridis")
    ax.set_title(f"{name} ({len(g)} edges)")
    ax.set_xlabel("frame k")
    ax.set_aspect("equal")
axes[0].set_ylabel("frame l")
axes[0].invert_yaxis()
save(fig, "similarity_graph.png")
