"""splitmix64 PRNG and deterministic weight initialization.

One 64-bit state word; the next() sequence matches the published
splitmix64 reference (first output for seed 0 is 0xE220A8397B1DCDAF)."""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64_next(state: int) -> tuple[int, int]:
    """Advance one step; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_seed(seed: int, salt: int) -> int:
    """One splitmix64 output of (seed XOR salt); used to derive trial seeds."""
    return splitmix64_next((seed ^ salt) & MASK64)[1]


class Prng:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state, out = splitmix64_next(self.state)
        return out

    def next_f32(self) -> np.float32:
        # top 24 bits over 2^24 gives uniform [0, 1) exactly representable in f32
        return np.float32(self.next_u64() >> 40) / np.float32(1 << 24)

    def next_below(self, n: int) -> int:
        return self.next_u64() % n

    def uniform(self, lo: float, hi: float) -> np.float32:
        return np.float32(lo) + self.next_f32() * (np.float32(hi) - np.float32(lo))


def glorot_bound(shape: tuple[int, ...]) -> float:
    if len(shape) == 1:
        fan_in = fan_out = shape[0]
    elif len(shape) == 2:
        fan_out, fan_in = shape  # (out, in)
    else:
        raise ValueError(f"glorot init supports rank 1 or 2, got shape {shape}")
    return math.sqrt(6.0 / (fan_in + fan_out))


def glorot_init(shape: tuple[int, ...], rng: Prng) -> np.ndarray:
    """Glorot-uniform samples in [-a, a], drawn row-major from the stream."""
    a = np.float32(glorot_bound(shape))
    n = int(np.prod(shape))
    out = np.empty(n, dtype=np.float32)
    for i in range(n):
        out[i] = (rng.next_f32() * np.float32(2.0) - np.float32(1.0)) * a
    return out.reshape(shape)
