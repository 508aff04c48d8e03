"""
How the transition pair is chosen
=================================

Around a gap the reduced graph offers entry edges, which leave the signal
before the gap, and exit edges, which return after it. Every compatible
combination is scored by how far the replacement's duration is from the
gap's, how far the jumps sit from the gap borders and how strong the two
edges are. This script looks at that trade-off on a recording without
exact repetition.
"""

# %%
import numpy as np
import matplotlib.pyplot as plt

from graphinpaint import AudioBuffer, ObjectiveParams, analyze, find_transition, select
from graphinpaint.synth import speech_like
from graphinpaint.transition import acceptable_pairs, objective_terms

from _common import save

rate = 44100
buf = AudioBuffer(speech_like(30.0, rate, seed=9), rate)
analysis = analyze(buf)
cfg = analysis.config
gap = analysis.gap(15 * rate, 17 * rate)
graph, pair = find_transition(analysis, gap)
terms = objective_terms(pair, gap, cfg.objective_params())
print(f"{pair.n_candidates} acceptable pairs, chosen objective {pair.objective:.2f}")
print("terms of the chosen pair:", {k: round(v, 2) for k, v in terms.items()})

# %%
# The same constraints as in the pipeline: frames inside the gap may not
# be copied, and the replacement must be long enough for two cross-fades.
params = cfg.graph_params(analysis.frame_rate)
valid = analysis.masked([gap]).valid
min_length = max(cfg.kernel_length, 2 * -(-analysis.half_window // analysis.hop))
constraints = dict(valid=valid, min_length=min_length, threshold=cfg.weight_threshold)
cands = acceptable_pairs(graph.ws, gap, params.eps_before, params.eps_after, **constraints)
mismatch = np.abs((cands.k1 - cands.l0) - (cands.l1 - cands.k0))
strength = 1 / cands.w0 + 1 / cands.w1

# %%
# A small weight factor lets duration decide; a large one favours strong
# edges at the price of a longer or shorter replacement.
for gamma_w in (1.0, 100.0, 10000.0):
    alt = select(graph.ws, gap, params.eps_before, params.eps_after,
                 ObjectiveParams(cfg.gamma_len, gamma_w), **constraints)
    print(f"gamma_w {gamma_w:>7}: mismatch {alt.mismatch:3d}, "
          f"weights {alt.w0:.2f} / {alt.w1:.2f}")

fig, ax = plt.subplots(figsize=(6, 4))
ax.scatter(mismatch, strength, s=2, alpha=0.4, label="acceptable pairs")
ax.scatter([pair.mismatch], [1 / pair.w0 + 1 / pair.w1], color="tab:red", label="chosen")
ax.set_xlabel("duration mismatch [frames]")
ax.set_ylabel("1/w0 + 1/w1")
ax.legend(loc="upper right")
save(fig, "transition_choice.png")
