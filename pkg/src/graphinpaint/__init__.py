"""Concealment of long audio gaps through a spectral self-similarity graph.

The pipeline computes per-frame features from a redundant short-time
Fourier transform, links frames that start similar stretches of audio,
picks a jump out of and back into the signal around the gap, and splices
the chosen material in with short time-frequency cross-fades.
"""

__version__ = "0.1.0"

from .audio_io import AudioBuffer, GapSpec, decimate, read_audio, write_audio
from .config import AlgoConfig
from .errors import (InpaintError, InvalidArgument, InvalidGap, NoTransitionFound,
                     OutOfBounds, UnsupportedFormat)
from .features import FeatureMatrix, extract_features, invalidate_gap
from .pipeline import (Analysis, InpaintResult, analyze, find_transition, inpaint,
                       relative_error, verify_redundant)
from .simgraph import (GraphParams, SparseWeights, full_graph, knn, reduced_graph,
                       sparsify, convolve_weights)
from .splice import SplicePlan, crossfade_splice, plan_splice, refine_offsets
from .stft import CoefficientMatrix, StftParams, istft, itersine_window, stft
from .transition import ObjectiveParams, TransitionPair, select

__all__ = [
    "AlgoConfig", "Analysis", "AudioBuffer", "CoefficientMatrix", "FeatureMatrix",
    "GapSpec", "GraphParams", "InpaintError", "InpaintResult", "InvalidArgument",
    "InvalidGap", "NoTransitionFound", "ObjectiveParams", "OutOfBounds",
    "SparseWeights", "SplicePlan", "StftParams", "TransitionPair",
    "UnsupportedFormat", "analyze", "convolve_weights", "crossfade_splice",
    "decimate", "extract_features", "find_transition", "full_graph", "inpaint",
    "invalidate_gap", "istft", "itersine_window", "knn", "plan_splice",
    "read_audio", "reduced_graph", "refine_offsets", "relative_error", "select",
    "sparsify", "stft", "verify_redundant", "write_audio",
]
