"""Deterministic counter-based random streams.

Every stochastic operation in this package draws from a Philox
(counter-based) generator addressed by ``(seed, path, sample index)``,
so any single sample can be regenerated in isolation and a parallel
evaluation of samples agrees bit-for-bit with a serial run.

Addressing scheme: ``substream(seed, *path)`` derives an independent
Philox stream through SeedSequence spawn keys (collision-free for
distinct paths).  Within a stream, sample ``index`` owns Philox counter
block ``index``; one block holds four 64-bit words, so an operation may
consume at most ``BLOCK_WORDS`` values per sample.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

# Philox emits 4 x 64-bit words per counter block; one block per sample.
BLOCK_WORDS = 4

# Keeps ndtri away from the u = 0 singularity (numpy uniforms live in [0, 1)).
_TINY = 2.0**-54


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator for ``(seed, path)``."""
    return np.random.Generator(_bit_generator(seed, path))


def _bit_generator(seed: int, path: tuple[int, ...]) -> np.random.Philox:
    return np.random.Philox(np.random.SeedSequence(seed, spawn_key=tuple(path)))


def _to_unit_interval(raw: np.ndarray) -> np.ndarray:
    # Same 53-bit mapping numpy uses for double-precision uniforms.
    return (raw >> 11) * 2.0**-53


def block_uniforms(seed: int, n: int, width: int, path: tuple[int, ...] = ()) -> np.ndarray:
    """``(n, width)`` uniforms; row ``i`` is the head of counter block ``i``.

    Rows are independently addressable: ``block_uniforms(...)[i]`` equals
    ``sample_uniforms(seed, i, width, path)`` exactly.
    """
    if not 1 <= width <= BLOCK_WORDS:
        raise ValueError(f"width must be in [1, {BLOCK_WORDS}], got {width}")
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n == 0:
        return np.empty((0, width))
    raw = _bit_generator(seed, path).random_raw(BLOCK_WORDS * n).reshape(n, BLOCK_WORDS)
    return _to_unit_interval(raw[:, :width])


def sample_uniforms(seed: int, index: int, width: int, path: tuple[int, ...] = ()) -> np.ndarray:
    """Uniforms owned by one sample, without generating its predecessors."""
    if not 1 <= width <= BLOCK_WORDS:
        raise ValueError(f"width must be in [1, {BLOCK_WORDS}], got {width}")
    if index < 0:
        raise ValueError(f"index must be nonnegative, got {index}")
    bg = _bit_generator(seed, path)
    bg.advance(index)  # Philox advance() steps whole counter blocks
    return _to_unit_interval(bg.random_raw(width))


def uniforms_to_normals(u: np.ndarray) -> np.ndarray:
    """Standard normals via the inverse normal CDF (fixed consumption)."""
    return ndtri(np.maximum(u, _TINY))


def block_normals(seed: int, n: int, width: int, path: tuple[int, ...] = ()) -> np.ndarray:
    return uniforms_to_normals(block_uniforms(seed, n, width, path))


def sample_normals(seed: int, index: int, width: int, path: tuple[int, ...] = ()) -> np.ndarray:
    return uniforms_to_normals(sample_uniforms(seed, index, width, path))
