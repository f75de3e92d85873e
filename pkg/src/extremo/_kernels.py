"""Integer kernels for lagged joint-exceedance counts.

``joint_counts(x, y, min_lag, max_lag)[j]`` is the number of ``t`` in
``[0, n - h)`` with ``x[t] and y[t + h]`` for ``h = min_lag + j``. Two exact
routes exist: shifted-AND popcount over packed 64-bit words (dense
indicators) and pair-difference histograms over exceedance positions
(sparse indicators). They return identical integers, so the dispatcher is
free to pick whichever is cheaper.
"""

from __future__ import annotations

import numpy as np

WORD = 64


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a boolean vector into little-endian uint64 words (bit t -> word t // 64)."""
    bits = np.asarray(bits, dtype=bool)
    packed = np.packbits(bits, bitorder="little")
    pad = (-packed.size) % 8
    if pad:
        packed = np.concatenate([packed, np.zeros(pad, dtype=np.uint8)])
    # one spare zero word keeps the shifted read in bounds
    return np.concatenate([packed.view("<u8"), np.zeros(1, dtype="<u8")]).astype(np.uint64)


def _shift_down(words: np.ndarray, h: int) -> np.ndarray:
    """Words of the bit vector ``b'[t] = b[t + h]``."""
    q, r = divmod(h, WORD)
    if q >= words.size:
        return np.zeros(0, dtype=np.uint64)
    hi = words[q:]
    if r == 0:
        return hi
    out = hi >> np.uint64(r)
    out[:-1] |= hi[1:] << np.uint64(WORD - r)
    return out


def joint_counts_packed(xw: np.ndarray, yw: np.ndarray, min_lag: int, max_lag: int) -> np.ndarray:
    """Shifted-AND popcount over packed words, one pass per lag."""
    out = np.zeros(max_lag - min_lag + 1, dtype=np.int64)
    for j, h in enumerate(range(min_lag, max_lag + 1)):
        ys = _shift_down(yw, h)
        if ys.size:
            out[j] = int(np.bitwise_count(xw[: ys.size] & ys).sum(dtype=np.int64))
    return out


def joint_counts_positions(px: np.ndarray, py: np.ndarray, min_lag: int, max_lag: int) -> np.ndarray:
    """Histogram of ``py[j] - px[i]`` over ``[min_lag, max_lag]``.

    ``px`` and ``py`` must be sorted exceedance positions. Positions past the
    end of the series never occur, so the ``n - h`` window is implicit.
    """
    size = max_lag - min_lag + 1
    if px.size == 0 or py.size == 0:
        return np.zeros(size, dtype=np.int64)
    lo = np.searchsorted(py, px + min_lag, side="left")
    hi = np.searchsorted(py, px + max_lag, side="right")
    width = hi - lo
    total = int(width.sum())
    if total == 0:
        return np.zeros(size, dtype=np.int64)
    owner = np.repeat(np.arange(px.size), width)
    # index into py for each (i, j) pair: lo[i] + offset within the run
    starts = np.cumsum(width) - width
    idx = np.arange(total) - np.repeat(starts, width) + np.repeat(lo, width)
    diffs = py[idx] - px[owner] - min_lag
    return np.bincount(diffs, minlength=size).astype(np.int64)


def expected_pairs(kx: int, ky: int, n: int, n_lags: int) -> float:
    return kx * ky * n_lags / max(n, 1)


def prefer_positions(kx: int, ky: int, n: int, n_lags: int) -> bool:
    """Rough cost model: pair expansion vs one word pass per lag."""
    pair_cost = expected_pairs(kx, ky, n, n_lags) * 4 + (kx + ky) * 2
    word_cost = n_lags * (n / WORD + 200)
    return pair_cost < word_cost


def joint_counts(x: np.ndarray, y: np.ndarray, min_lag: int, max_lag: int) -> np.ndarray:
    x = np.asarray(x, dtype=bool)
    y = np.asarray(y, dtype=bool)
    n = x.size
    px = np.flatnonzero(x)
    py = px if y is x else np.flatnonzero(y)
    if prefer_positions(px.size, py.size, n, max_lag - min_lag + 1):
        return joint_counts_positions(px, py, min_lag, max_lag)
    xw = pack_bits(x)
    yw = xw if y is x else pack_bits(y)
    return joint_counts_packed(xw, yw, min_lag, max_lag)
