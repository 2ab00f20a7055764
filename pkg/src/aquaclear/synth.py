"""Synthetic test-image generators, one per degradation category.

Each archetype is built to sit at least twice as far from every classifier
threshold as the threshold itself: dark images have mean V near 0.145
(floor 0.35), bright near 0.75; cast images have a max relative channel
deviation near 0.69 (threshold 0.25), balanced ones near 0; smooth images
keep Laplacian variance under ~2e-4 (floor 0.0015), sharp ones sit orders
of magnitude above it.

Construction notes. The value pattern and the per-channel modulation fields
use disjoint integer Fourier modes, so modulation leaves every channel mean
untouched (distinct modes are orthogonal over the full grid). In cast
archetypes the dominant (blue) channel is never modulated and the green
gain times the peak modulation stays below 1, which pins the HSV V plane
to the value pattern exactly. The red/green modulation runs near unity
amplitude: it gives the image strong per-pixel color variation that
survives white balancing, the way enhancement reveals color in real
underwater scenes instead of collapsing them to gray.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .classify import Category8, DegradationFlags, RANK_ORDER
from .image import ImageF32, save_ppm

__all__ = [
    "DARK_BAND",
    "BRIGHT_BAND",
    "CAST_GAINS",
    "make_archetype",
    "archetype_for_category",
    "write_corpus",
]

DARK_BAND = (0.04, 0.25)
BRIGHT_BAND = (0.55, 0.93)
CAST_GAINS = (0.28, 0.50, 1.00)  # blue-heavy, matching red-light attenuation
_MOD_AMPLITUDE_CAST = 0.98
_MOD_AMPLITUDE_BALANCED = 0.06

# Integer wavevectors for the smooth value pattern and for the modulation
# fields; base and modulation never share a mode (up to sign), keeping them
# orthogonal. Smooth images must stay smooth after modulation, so their
# modulation draws from the low-frequency base set too (the unused pair).
_BASE_MODES = ((1, 0), (0, 1), (1, 1), (1, -1))
_MOD_MODES = ((2, 1), (1, 2), (2, -1), (3, 1))


def _wave(size: int, mode: tuple, phase: float) -> np.ndarray:
    ky, kx = mode
    y = np.arange(size, dtype=np.float64)[:, None]
    x = np.arange(size, dtype=np.float64)[None, :]
    return np.sin(2.0 * math.pi * (ky * y + kx * x) / size + phase)


def _smooth_base(rng: np.random.Generator, size: int):
    """Low-frequency pattern in [0,1] with mean 0.5: two full-period waves.

    Returns the pattern plus the two base modes it did NOT use, which are
    safe (orthogonal and equally low-frequency) for modulation fields.
    """
    i, j = rng.choice(len(_BASE_MODES), size=2, replace=False)
    a = _wave(size, _BASE_MODES[i], rng.uniform(0.0, 2.0 * math.pi))
    b = _wave(size, _BASE_MODES[j], rng.uniform(0.0, 2.0 * math.pi))
    unused = tuple(m for k, m in enumerate(_BASE_MODES) if k not in (i, j))
    return 0.5 + 0.3 * a + 0.2 * b, unused


def _sharp_base(rng: np.random.Generator, size: int) -> np.ndarray:
    """Single-pixel checkerboard plus mild uniform texture, mean 0.5."""
    y = np.arange(size)[:, None]
    x = np.arange(size)[None, :]
    checker = ((y + x + rng.integers(0, 2)) % 2).astype(np.float64)
    noise = rng.uniform(-0.08, 0.08, size=(size, size))
    return checker * 0.84 + 0.08 + noise


def make_archetype(flags: DegradationFlags, seed: int, size: int = 64) -> ImageF32:
    """Deterministic synthetic image exhibiting exactly the given defects."""
    rng = np.random.Generator(
        np.random.PCG64(
            np.random.SeedSequence(
                [0xAC5EED, int(flags.color_cast), int(flags.low_light),
                 int(flags.blurred), seed]
            )
        )
    )
    if flags.blurred:
        base, mod_pool = _smooth_base(rng, size)
    else:
        base, mod_pool = _sharp_base(rng, size), _MOD_MODES
    lo, hi = DARK_BAND if flags.low_light else BRIGHT_BAND
    v = lo + (hi - lo) * base

    gains = CAST_GAINS if flags.color_cast else (1.0, 1.0, 1.0)
    amp = _MOD_AMPLITUDE_CAST if flags.color_cast else _MOD_AMPLITUDE_BALANCED
    i, j = rng.choice(len(mod_pool), size=2, replace=False)
    mod_r = 1.0 + amp * _wave(size, mod_pool[i], rng.uniform(0.0, 2.0 * math.pi))
    mod_g = 1.0 + amp * _wave(size, mod_pool[j], rng.uniform(0.0, 2.0 * math.pi))

    r = v * gains[0] * mod_r
    g = v * gains[1] * mod_g
    b = v * gains[2]
    return ImageF32.from_array(np.stack([r, g, b]))


def archetype_for_category(category: Category8, seed: int, size: int = 64) -> ImageF32:
    return make_archetype(category.flags, seed, size)


def write_corpus(directory, count: int = 20, seed: int = 0, size: int = 32) -> list:
    """Write a mixed-category PPM corpus; returns the file paths in order.

    Categories cycle through rank order so every defect combination appears;
    per-file seeds derive from the corpus seed and the file index.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for idx in range(count):
        category = RANK_ORDER[idx % len(RANK_ORDER)]
        img = archetype_for_category(category, seed * 100003 + idx, size)
        path = directory / f"img_{idx:03d}.ppm"
        save_ppm(img, path)
        paths.append(path)
    return paths
