"""Deterministic, portable random number generation.

Everything random in the harness flows through three fixed algorithms so
that a run is reproducible from a single 64-bit seed on any platform:

* **SplitMix64** mixes the root seed with FNV-1a hashes of string labels
  to derive independent sub-seeds (``derive_seed``).
* **PCG32 (XSH-RR 64/32)** generates the uniform stream.
* **Box-Muller** maps consecutive uniform pairs to standard normals.

Draw conventions, pinned for reproducibility:

* A uniform is ``(u32 + 0.5) * 2**-32``, always inside (0, 1).
* Normals are produced in pairs from consecutive uniforms ``(u1, u2)``:
  ``r = sqrt(-2 ln u1)``, ``z0 = r cos(2 pi u2)``, ``z1 = r sin(2 pi u2)``.
  An odd-length request discards the final ``z1``.
* Bounded integers use rejection sampling on ``2**32 % n`` so every value
  is equally likely.
"""

from __future__ import annotations

import math

import numpy as np

from . import _kernels as kernels
from .errors import ContractError

_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15

# Fixed PCG32 stream selector; independence between streams comes from
# SplitMix64-derived states, not distinct increments.
DEFAULT_STREAM = 0xDA3E39CB94B95BDB


def fnv1a64_str(text: str) -> int:
    """FNV-1a 64-bit hash of a string's UTF-8 bytes."""
    return kernels.fnv1a64(text.encode("utf-8"))


def splitmix64(x: int) -> int:
    """One SplitMix64 step: advance ``x`` by the golden gamma and mix."""
    z = (x + _SPLITMIX_GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(root: int, *labels: str) -> int:
    """Derive a sub-seed from a root seed and a chain of string labels."""
    s = root & _MASK64
    for label in labels:
        s = splitmix64(s ^ fnv1a64_str(label))
    return s


class Pcg32:
    """PCG32 (XSH-RR 64/32) stream with bulk and scalar draw paths.

    The bulk paths (``uniforms``/``normals``) and the scalar path
    (``next_u32``) consume the same underlying stream, so a sequence of
    calls is reproducible regardless of how draws are batched.
    """

    def __init__(self, seed: int, stream: int = DEFAULT_STREAM):
        self.inc = ((stream << 1) | 1) & _MASK64
        self.state = 0
        self.next_u32()
        self.state = (self.state + (seed & _MASK64)) & _MASK64
        self.next_u32()

    def next_u32(self) -> int:
        old = self.state
        self.state = (old * 6364136223846793005 + self.inc) & _MASK64
        xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
        rot = old >> 59
        return ((xorshifted >> rot) | (xorshifted << ((32 - rot) & 31))) & 0xFFFFFFFF

    def fill_u32(self, n: int) -> np.ndarray:
        out, self.state = kernels.pcg32_fill(n, self.state, self.inc)
        return out

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles uniform on (0, 1)."""
        return (self.fill_u32(n).astype(np.float64) + 0.5) * 2.0 ** -32

    def normals(self, n: int) -> np.ndarray:
        """``n`` standard normals via Box-Muller on uniform pairs."""
        if n == 0:
            return np.empty(0, dtype=np.float64)
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        theta = math.tau * u[1::2]
        z = np.empty(2 * pairs, dtype=np.float64)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return z[:n]

    def bounded(self, n: int) -> int:
        """Uniform integer in [0, n) without modulo bias."""
        if n <= 0:
            raise ContractError(f"bounded() needs n >= 1, got {n}")
        threshold = (1 << 32) % n
        while True:
            r = self.next_u32()
            if r >= threshold:
                return r % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1):
            j = i + self.bounded(len(items) - i)
            items[i], items[j] = items[j], items[i]

    def sample(self, items: list, k: int) -> list:
        """First ``k`` entries of a partial Fisher-Yates shuffle of ``items``.

        ``items`` is copied; selection order is deterministic in the input
        order, so callers sort before sampling.
        """
        if not 0 <= k <= len(items):
            raise ContractError(f"sample() needs 0 <= k <= {len(items)}, got {k}")
        pool = list(items)
        for i in range(k):
            j = i + self.bounded(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
