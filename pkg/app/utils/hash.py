"""Hashing utilities for reproducibility checks."""
from __future__ import annotations

import hashlib

import numpy as np


def array_digest(*arrays: np.ndarray) -> str:
    """Return a SHA-256 hash over the exact bytes, shapes and dtypes of the given arrays."""

    digest = hashlib.sha256()
    for array in arrays:
        contiguous = np.ascontiguousarray(array)
        digest.update(str((contiguous.shape, contiguous.dtype.str)).encode("utf-8"))
        digest.update(contiguous.tobytes())
    return digest.hexdigest()
