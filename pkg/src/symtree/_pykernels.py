"""Pure-numpy compute kernels, bit-compatible with the compiled ones.

Both backends must agree to the last bit, so row sums are accumulated in
edge storage order: step k adds every row's k-th contribution.  That is the
same `acc += w*x[src]` sequence the compiled loop performs, just batched
across rows instead of within one row.  Biases are added after the loop,
and max reductions add +0.0 so a -0.0 result never leaks from either side.
"""

from __future__ import annotations

import numpy as np

from .flatnet import FlatLayer

NEG_INF = float("-inf")


def net_sum(fl: FlatLayer, x: np.ndarray) -> np.ndarray:
    contrib = fl.w * x[fl.src]
    acc = np.zeros(fl.width, dtype=np.float64)
    for rows, pos in fl.schedule:
        acc[rows] += contrib[pos]
    return acc + fl.bias


def net_max(fl: FlatLayer, x: np.ndarray) -> np.ndarray:
    contrib = fl.w * x[fl.src]
    acc = np.full(fl.width, NEG_INF, dtype=np.float64)
    for rows, pos in fl.schedule:
        c = contrib[pos]
        cur = acc[rows]
        take = c > cur  # keep the earlier tap on ties
        acc[rows] = np.where(take, c, cur)
    return acc + 0.0


def bounds_sum(
    fl: FlatLayer, lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    pos_w = fl.w >= 0
    c_lo = np.where(pos_w, fl.w * lo[fl.src], fl.w * hi[fl.src])
    c_hi = np.where(pos_w, fl.w * hi[fl.src], fl.w * lo[fl.src])
    acc_lo = np.zeros(fl.width, dtype=np.float64)
    acc_hi = np.zeros(fl.width, dtype=np.float64)
    for rows, pos in fl.schedule:
        acc_lo[rows] += c_lo[pos]
        acc_hi[rows] += c_hi[pos]
    return acc_lo + fl.bias, acc_hi + fl.bias


def bounds_max(
    fl: FlatLayer, lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    pos_w = fl.w >= 0
    c_lo = np.where(pos_w, fl.w * lo[fl.src], fl.w * hi[fl.src])
    c_hi = np.where(pos_w, fl.w * hi[fl.src], fl.w * lo[fl.src])
    acc_lo = np.full(fl.width, NEG_INF, dtype=np.float64)
    acc_hi = np.full(fl.width, NEG_INF, dtype=np.float64)
    for rows, pos in fl.schedule:
        a, b = acc_lo[rows], acc_hi[rows]
        va, vb = c_lo[pos], c_hi[pos]
        acc_lo[rows] = np.where(va > a, va, a)
        acc_hi[rows] = np.where(vb > b, vb, b)
    return acc_lo + 0.0, acc_hi + 0.0


def seg_absmax(fl: FlatLayer, vals: np.ndarray) -> np.ndarray:
    """Per row, max of |vals| over its edges; 0.0 for empty rows."""
    acc = np.zeros(fl.width, dtype=np.float64)
    a = np.abs(vals)
    for rows, pos in fl.schedule:
        v = a[pos]
        cur = acc[rows]
        acc[rows] = np.where(v > cur, v, cur)
    return acc


def seg_argmax(fl: FlatLayer, vals: np.ndarray) -> np.ndarray:
    """Per row, global index of the first maximal edge; -1 for empty rows."""
    best = np.full(fl.width, NEG_INF, dtype=np.float64)
    idx = np.full(fl.width, -1, dtype=np.int64)
    for rows, pos in fl.schedule:
        v = vals[pos]
        take = v > best[rows]
        upd = rows[take]
        best[upd] = v[take]
        idx[upd] = pos[take]
    return idx
