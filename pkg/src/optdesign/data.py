"""Synthetic datasets, tail-weight control, and dataset file formats.

The benchmark generator draws from a seeded five-component Gaussian
mixture; a sinh-arcsinh power transform then tunes tail weight without
moving the bulk of the data, and average log kurtosis quantifies the
result.  Datasets travel either as CSV (one point per row) or as a
compact binary format with magic "OPTD1".
"""

from __future__ import annotations

import csv
import struct

import numpy as np

from optdesign.core import DesignMatrix
from optdesign.errors import (
    DegenerateCoordinate,
    DimensionMismatch,
    DomainError,
    ParseError,
)

__all__ = [
    "generate_mixture",
    "sinh_arcsinh_transform",
    "avg_log_kurtosis",
    "load_dataset",
    "save_dataset",
]

_MAGIC = b"OPTD1"
_COMPONENTS = 5


def generate_mixture(n: int, m: int, seed: int) -> DesignMatrix:
    """Sample m points from a seeded five-component Gaussian mixture.

    Component means are uniform on [-5, 5]^n and covariances are
    A A' + 0.1 I with standard normal A, so every run with the same
    (n, m, seed) reproduces the identical matrix bit for bit.
    """
    if n < 2:
        raise DomainError("dimension n must be at least 2")
    if m < n + 1:
        raise DomainError(f"need at least n+1={n + 1} points")
    rng = np.random.default_rng(seed)
    means = rng.uniform(-5.0, 5.0, size=(_COMPONENTS, n))
    chols = np.empty((_COMPONENTS, n, n))
    for c in range(_COMPONENTS):
        A = rng.standard_normal((n, n))
        chols[c] = np.linalg.cholesky(A @ A.T + 0.1 * np.eye(n))
    comp = rng.integers(0, _COMPONENTS, size=m)
    z = rng.standard_normal((n, m))
    pts = np.empty((n, m), order="F")
    for c in range(_COMPONENTS):
        mask = comp == c
        pts[:, mask] = chols[c] @ z[:, mask] + means[c][:, None]
    return DesignMatrix(pts, label=f"mixture-n{n}-m{m}-seed{seed}")


def sinh_arcsinh_transform(X: DesignMatrix, p: float) -> DesignMatrix:
    """Entrywise x -> sinh(arcsinh(x)/p); p > 1 lightens the tails.

    p = 1 returns the data unchanged (bit for bit).
    """
    if p <= 0.0:
        raise DomainError("tail parameter p must be positive")
    if p == 1.0:
        return X
    pts = np.sinh(np.arcsinh(X.data) / p)
    label = f"{X.label}-p{p:g}" if X.label else None
    return DesignMatrix(np.asfortranarray(pts), label=label)


def avg_log_kurtosis(X: DesignMatrix) -> float:
    """Mean over coordinates of log sample kurtosis.

    Kurtosis per coordinate is the fourth central moment over the
    squared second; coordinates with (numerically) zero variance raise
    :class:`DegenerateCoordinate`.
    """
    centered = X.data - X.data.mean(axis=1, keepdims=True)
    m2 = np.mean(centered**2, axis=1)
    if np.any(m2 <= 1e-12):
        bad = int(np.argmax(m2 <= 1e-12))
        raise DegenerateCoordinate(f"coordinate {bad} has no variance")
    m4 = np.mean(centered**4, axis=1)
    return float(np.mean(np.log(m4 / m2**2)))


def save_dataset(X: DesignMatrix, path: str, fmt: str | None = None) -> None:
    """Write a dataset as CSV or binary; format inferred from extension."""
    fmt = fmt or _infer_format(path)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{k}" for k in range(X.n)])
            for j in range(X.m):
                writer.writerow([repr(float(v)) for v in X.data[:, j]])
    elif fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQ", X.n, X.m))
            fh.write(np.asfortranarray(X.data).tobytes(order="F"))
    else:
        raise DomainError(f"unknown dataset format {fmt!r}")


def load_dataset(path: str, fmt: str | None = None) -> DesignMatrix:
    """Read a dataset written by :func:`save_dataset` or by hand.

    CSV files hold one point per row with an optional header row;
    parse failures name the offending row.  Binary files start with
    the magic "OPTD1" followed by little-endian u32 n, u64 m, and
    m*n float64 values, one point at a time.
    """
    fmt = fmt or _infer_format(path)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "binary":
        return _load_binary(path)
    raise DomainError(f"unknown dataset format {fmt!r}")


def _infer_format(path: str) -> str:
    lower = str(path).lower()
    if lower.endswith(".csv") or lower.endswith(".txt"):
        return "csv"
    return "binary"


def _load_csv(path: str) -> DesignMatrix:
    rows: list[list[float]] = []
    ncol = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                vals = [float(c) for c in row]
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header row
                raise ParseError(f"row {lineno}: non-numeric value in {row!r}")
            if ncol is None:
                ncol = len(vals)
            elif len(vals) != ncol:
                raise ParseError(
                    f"row {lineno}: expected {ncol} columns, found {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows found")
    pts = np.asfortranarray(np.asarray(rows, dtype=np.float64).T)
    return DesignMatrix(pts, label=str(path))


def _load_binary(path: str) -> DesignMatrix:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(_MAGIC) + 12 or blob[: len(_MAGIC)] != _MAGIC:
        raise ParseError("missing OPTD1 magic header")
    n, m = struct.unpack_from("<IQ", blob, len(_MAGIC))
    offset = len(_MAGIC) + 12
    expected = n * m * 8
    if len(blob) - offset != expected:
        raise DimensionMismatch(
            f"payload holds {len(blob) - offset} bytes, header implies {expected}"
        )
    flat = np.frombuffer(blob, dtype="<f8", offset=offset)
    pts = flat.reshape((n, m), order="F").copy(order="F")
    return DesignMatrix(pts, label=str(path))
