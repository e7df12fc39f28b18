"""Counter-based random numbers that do not depend on any library's stream.

Each draw is a pure function of ``(seed, stream, counter)`` hashed with
BLAKE2b, so output is identical across platforms and library versions.
"""
from __future__ import annotations

import hashlib
import math
import struct

import numpy as np

_SCALE = 1.0 / 2.0 ** 53


class CounterRNG:
    def __init__(self, seed: int, stream: str = ""):
        self.seed = int(seed)
        self.stream = stream
        self.counter = 0

    def _block(self) -> bytes:
        msg = f"{self.seed}:{self.stream}:{self.counter}".encode()
        self.counter += 1
        return hashlib.blake2b(msg, digest_size=16).digest()

    def uniforms(self, n: int) -> np.ndarray:
        """``n`` doubles in the open interval (0, 1)."""
        out = np.empty(n)
        for i in range(0, n, 2):
            a, b = struct.unpack("<QQ", self._block())
            out[i] = ((a >> 11) + 0.5) * _SCALE
            if i + 1 < n:
                out[i + 1] = ((b >> 11) + 0.5) * _SCALE
        return out

    def normals(self, n: int) -> np.ndarray:
        """Standard normals by Box-Muller."""
        m = n + (n % 2)
        u = self.uniforms(m)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        t = 2.0 * math.pi * u[1::2]
        z = np.empty(m)
        z[0::2] = r * np.cos(t)
        z[1::2] = r * np.sin(t)
        return z[:n]

    def integers(self, low: int, high: int, n: int) -> np.ndarray:
        """Integers in ``[low, high)``."""
        return low + np.floor(self.uniforms(n) * (high - low)).astype(int)

    def choice(self, population: int, k: int) -> np.ndarray:
        """``k`` distinct integers from ``range(population)``, sorted."""
        keys = self.uniforms(population)
        return np.sort(np.argsort(keys, kind="stable")[:k])

    def hermitian(self, dim: int) -> np.ndarray:
        """``A + A^dagger`` with standard normal real and imaginary parts."""
        z = self.normals(2 * dim * dim)
        A = (z[: dim * dim] + 1j * z[dim * dim:]).reshape(dim, dim)
        return A + A.conj().T
