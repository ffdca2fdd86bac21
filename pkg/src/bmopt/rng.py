"""Counter-based random streams.

Every random number in the package is a pure function of an integer key
tuple, so values never depend on the order in which they are requested.
The mixer is the splitmix64 finalizer applied in a chain; each draw costs
one vectorized mix once the per-stream prefix has been folded.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1

# stream tags
PATH = 0x5041_5448
NOISE = 0x4E4F_4953
LABEL = 0x4C41_4245
RECOMMEND = 0x5245_434F
BASELINE = 0x4241_5345

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_TWO_M53 = 2.0**-53


def _mix(z: np.ndarray) -> np.ndarray:
    z = z + _GOLDEN
    z ^= z >> _S30
    z *= _M1
    z ^= z >> _S27
    z *= _M2
    z ^= z >> _S31
    return z


def _u64(v) -> np.ndarray:
    if isinstance(v, np.ndarray):
        return v.astype(np.uint64, copy=False)
    if isinstance(v, (list, tuple)):
        return np.array([int(x) & MASK64 for x in v], dtype=np.uint64)
    return np.array([int(v) & MASK64], dtype=np.uint64)


def fold(*parts) -> np.ndarray:
    """Chain-hash integer parts (scalars or arrays) into 64-bit keys."""
    key = _mix(_u64(parts[0]).copy())
    for part in parts[1:]:
        key = _mix(key ^ _u64(part))
    return key


def fold_int(*parts) -> int:
    return int(fold(*parts)[0])


def text_tag(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def uniforms(key: np.ndarray, counter) -> np.ndarray:
    """Uniforms on the open interval (0, 1), one per counter value."""
    z = _mix(key ^ _u64(counter))
    return ((z >> _S11).astype(np.float64) + 0.5) * _TWO_M53


def normals(key: np.ndarray, counter) -> np.ndarray:
    return ndtri(uniforms(key, counter))
