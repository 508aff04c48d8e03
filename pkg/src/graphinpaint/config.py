"""Algorithm configuration."""

from dataclasses import asdict, dataclass, fields
import json

from .errors import InvalidArgument
from .simgraph import GraphParams
from .splice import CORRELATIONS
from .stft import StftParams
from .transition import ObjectiveParams


@dataclass(frozen=True)
class AlgoConfig:
    max_rate: float = 12000.0
    hop: int = 128
    channels: int = 1024
    window_length: int = 1024
    window: str = "itersine"
    db_range: float = 50.0
    phase_weight: float = 1.5
    n_neighbors: int = 40
    kernel_length: int = 40
    weight_threshold: float = 2.0
    gamma_len: float = 1.0
    gamma_w: float = 100.0
    eps_seconds: float = 5.0
    smooth_length: int = 8
    knn_mode: str = "exact"
    local_max: str = "direct"
    correlation: str = "normalized"

    def __post_init__(self):
        try:
            self.stft_params()
            self.graph_params(1.0)
            self.objective_params()
        except ValueError as exc:
            raise InvalidArgument(str(exc)) from exc
        if self.max_rate <= 0 or self.db_range <= 0 or self.smooth_length < 1:
            raise InvalidArgument("max_rate, db_range and smooth_length must be positive")
        if self.eps_seconds < 0 or self.phase_weight < 0:
            raise InvalidArgument("eps_seconds and phase_weight must be non-negative")
        if self.correlation not in CORRELATIONS:
            raise InvalidArgument(f"correlation must be one of {CORRELATIONS}")
        if self.window_length % (2 * self.hop):
            raise InvalidArgument("window_length must be a multiple of 2 * hop")

    def stft_params(self):
        return StftParams(self.window_length, self.hop, self.channels, self.window)

    def eps_frames(self, frame_rate):
        return int(round(self.eps_seconds * frame_rate))

    def graph_params(self, frame_rate, sigma=None):
        eps = self.eps_frames(frame_rate)
        return GraphParams(self.n_neighbors, self.kernel_length, self.weight_threshold,
                           sigma, eps, eps, self.knn_mode, self.local_max)

    def objective_params(self):
        return ObjectiveParams(self.gamma_len, self.gamma_w)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise InvalidArgument(f"unknown configuration keys: {sorted(unknown)}")
        return cls(**data)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            try:
                return cls.from_dict(json.load(fh))
            except (json.JSONDecodeError, TypeError) as exc:
                raise InvalidArgument(f"{path}: {exc}") from exc
