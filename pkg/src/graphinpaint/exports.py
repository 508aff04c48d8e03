"""CSV exports of feature and coefficient matrices."""

import numpy as np


def write_matrix_csv(path, matrix, **header):
    """Write a 2-D array with one row per frequency channel and one column
    per frame.

    ``header`` items become a leading ``# key=value ...`` comment line.
    Values use ``.`` as decimal separator and round-trip exactly.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    comment = " ".join(f"{k}={v}" for k, v in header.items())
    np.savetxt(path, matrix, fmt="%.17g", delimiter=",", newline="\n",
               header=comment, comments="# ")


def read_matrix_csv(path):
    return np.atleast_2d(np.loadtxt(path, delimiter=",", comments="#", ndmin=2))


def export_features(fm, prefix):
    """Write ``<prefix>_F1.csv`` and ``<prefix>_F2.csv``; returns the paths."""
    paths = []
    for name in ("F1", "F2"):
        path = f"{prefix}_{name}.csv"
        write_matrix_csv(path, getattr(fm, name), feature=name,
                         channels=fm.channels, hop=fm.hop, decimation=fm.decimation)
        paths.append(path)
    return paths


def export_magnitudes(C, path):
    """Write ``|C|`` of a :class:`~graphinpaint.stft.CoefficientMatrix`."""
    p = C.params
    write_matrix_csv(path, np.abs(C.coeffs), kind=C.kind, channels=p.channels,
                     hop=p.hop, window_length=p.window_length)
