"""Counter-based random streams.

Every draw is a pure function of ``(seed, kind, iteration, particle_id,
component)``.  Particle noise for iteration ``k`` therefore does not depend on
which other particles are still alive, on the order they are processed in, or
on how work is split across threads.

The bit source is Philox4x32-10, evaluated vectorised in numpy.
"""

from __future__ import annotations

from enum import IntEnum

import numpy as np

__all__ = ["DrawKind", "RngStream", "SHARED_ID", "philox4x32"]

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# particle slot used when a single draw is shared by every particle
SHARED_ID = 0xFFFFFFFF


class DrawKind(IntEnum):
    """Purpose tag, one independent stream family per value."""

    INIT = 0
    STEP_NOISE = 1
    PERTURB = 2
    DISCARD = 3
    PERMUTE = 4
    CONSTANTS = 5
    EXPERIMENT = 6


def philox4x32(c0, c1, c2, c3, key):
    """Philox4x32-10 block function.

    Parameters
    ----------
    c0, c1, c2, c3 : array_like of uint32
        Counter words, broadcast against each other.
    key : int
        64-bit key, split into two 32-bit words (low word first).

    Returns
    -------
    tuple of four uint64 arrays holding 32-bit outputs.
    """
    c0, c1, c2, c3 = np.broadcast_arrays(
        *(np.asarray(c, dtype=np.uint64) & _MASK32 for c in (c0, c1, c2, c3))
    )
    k0 = int(key) & 0xFFFFFFFF
    k1 = (int(key) >> 32) & 0xFFFFFFFF
    for _ in range(10):
        p0 = c0 * _M0
        p1 = c2 * _M1
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ np.uint64(k0),
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ np.uint64(k1),
            p0 & _MASK32,
        )
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53-bit float in [0, 1)
    return ((hi >> np.uint64(5)).astype(np.float64) * 67108864.0
            + (lo >> np.uint64(6)).astype(np.float64)) / 9007199254740992.0


class RngStream:
    """Reproducible random numbers addressed by a stream id.

    Parameters
    ----------
    seed : int
        64-bit seed.  Negative values and values above ``2**64 - 1`` are
        rejected.

    Examples
    --------
    >>> rng = RngStream(7)
    >>> a = rng.normal(DrawKind.STEP_NOISE, 3, [0, 5], 4)
    >>> b = rng.normal(DrawKind.STEP_NOISE, 3, [5], 4)
    >>> bool((a[1] == b[0]).all())
    True
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed

    def __repr__(self):
        return f"RngStream(seed={self.seed})"

    def _blocks(self, kind, iteration, ids, n_blocks):
        iteration = int(iteration)
        if not 0 <= iteration < 2**32:
            raise ValueError(f"iteration out of range: {iteration}")
        ids = np.asarray(ids, dtype=np.uint64).reshape(-1, 1)
        blk = np.arange(n_blocks, dtype=np.uint64).reshape(1, -1)
        return philox4x32(ids, iteration, int(kind), blk, self.seed)

    def uniform(self, kind, iteration, ids, dim):
        """Uniform ``[0, 1)`` draws, shape ``(len(ids), dim)``."""
        n_blocks = (dim + 1) // 2
        w0, w1, w2, w3 = self._blocks(kind, iteration, ids, n_blocks)
        u = np.stack([_to_unit(w0, w1), _to_unit(w2, w3)], axis=-1)
        return u.reshape(len(u), -1)[:, :dim]

    def normal(self, kind, iteration, ids, dim):
        """Standard normal draws (Box-Muller), shape ``(len(ids), dim)``.

        Row ``r`` depends only on ``ids[r]`` and the stream coordinates.
        """
        n_blocks = (dim + 1) // 2
        w0, w1, w2, w3 = self._blocks(kind, iteration, ids, n_blocks)
        u1 = 1.0 - _to_unit(w0, w1)  # (0, 1]
        u2 = _to_unit(w2, w3)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.stack([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)], axis=-1)
        return z.reshape(len(z), -1)[:, :dim]

    def generator(self, kind, iteration=0):
        """A numpy Generator for serial draws (permutations, subsets)."""
        ss = np.random.SeedSequence([self.seed, int(kind), int(iteration)])
        return np.random.Generator(np.random.Philox(ss))

    def spawn(self, index):
        """Child stream for run ``index`` of a batch."""
        ss = np.random.SeedSequence([self.seed, int(DrawKind.EXPERIMENT), int(index)])
        return RngStream(int(ss.generate_state(1, np.uint64)[0]))
