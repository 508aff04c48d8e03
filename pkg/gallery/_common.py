"""Shared helpers for the gallery scripts: output folder and plotting setup."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

OUTPUT = Path(__file__).resolve().parent / "_output"
OUTPUT.mkdir(exist_ok=True)


def save(fig, name):
    path = OUTPUT / name
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print(f"figure written to {path}")
    return path
