"""Cubic polynomial maps with exact derivative tensors.

``p(x) = c0 + C1 x + C2(x, x) + C3(x, x, x)`` where each ``Cj`` is symmetric in
its ``j`` input slots, so every derivative is an exact tensor contraction:

    D^k p(x)[z1..zk] = sum_{j>=k} j!/(j-k)! Cj(x, ..., x, z1, ..., zk)
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np


def symmetrize(t: np.ndarray) -> np.ndarray:
    """Average a tensor over all permutations of its input axes (axes 1..)."""
    k = t.ndim - 1
    if k < 2:
        return t
    acc = np.zeros_like(t)
    perms = list(itertools.permutations(range(1, k + 1)))
    for p in perms:
        acc += np.transpose(t, (0,) + p)
    return acc / len(perms)


@dataclass(frozen=True, eq=False)
class PolyMap:
    coeffs: tuple  # (c0, C1, C2, C3); trailing terms may be omitted

    def __post_init__(self):
        cs = tuple(np.asarray(c, dtype=float) for c in self.coeffs)
        if not cs or cs[0].ndim != 1:
            raise ValueError("coeffs[0] must be the constant vector")
        m = cs[0].shape[0]
        n = cs[1].shape[1] if len(cs) > 1 else None
        for j, c in enumerate(cs[1:], 1):
            if c.shape != (m,) + (n,) * j:
                raise ValueError(f"coefficient {j} has shape {c.shape}, expected {(m,) + (n,) * j}")
        object.__setattr__(self, "coeffs", cs)

    @property
    def out_dim(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def in_dim(self) -> int:
        return self.coeffs[1].shape[1]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x) -> np.ndarray:
        return self.derivative(x, [])

    def derivative(self, x, dirs) -> np.ndarray:
        """D^k p(x)[z1, ..., zk] for ``dirs = [z1, ..., zk]``."""
        x = np.asarray(x, dtype=float)
        k = len(dirs)
        out = np.zeros(self.out_dim)
        for j in range(k, self.degree + 1):
            t = self.coeffs[j]
            for z in dirs:
                t = t @ np.asarray(z, dtype=float)
            for _ in range(j - k):
                t = t @ x
            out += math.factorial(j) // math.factorial(j - k) * t
        return out

    def derivative_tensor(self, x, k: int) -> np.ndarray:
        """Full tensor of D^k p(x), shape (out_dim,) + (in_dim,) * k."""
        x = np.asarray(x, dtype=float)
        out = np.zeros((self.out_dim,) + (self.in_dim,) * k)
        for j in range(k, self.degree + 1):
            t = self.coeffs[j]
            for _ in range(j - k):
                t = t @ x
            out += math.factorial(j) // math.factorial(j - k) * t
        return out

    @classmethod
    def random(cls, rng: np.random.Generator, in_dim: int, out_dim: int, degree: int = 3,
               scale: float = 1.0) -> "PolyMap":
        cs = [scale * rng.standard_normal(out_dim)]
        for j in range(1, degree + 1):
            raw = rng.standard_normal((out_dim,) + (in_dim,) * j)
            cs.append(scale * symmetrize(raw) / math.factorial(j))
        return cls(tuple(cs))

    @classmethod
    def linear(cls, m: np.ndarray, offset=None) -> "PolyMap":
        m = np.asarray(m, dtype=float)
        c0 = np.zeros(m.shape[0]) if offset is None else np.asarray(offset, dtype=float)
        return cls((c0, m))

    @classmethod
    def identity(cls, n: int) -> "PolyMap":
        return cls.linear(np.eye(n))
