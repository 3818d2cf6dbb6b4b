"""Pure-Python/numpy raster kernels.

These are the reference implementations; ``_ckernels.pyx`` carries compiled
twins with identical signatures and identical floating-point arithmetic.
"""
from collections import deque
import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _neighbour_offsets(connectivity):
    if connectivity == 4:
        return ((-1, 0), (0, -1), (0, 1), (1, 0))
    return tuple((dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1) if dy or dx)


def label(mask, connectivity=8):
    """Label connected set pixels; labels follow raster order of first pixel."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    offsets = _neighbour_offsets(connectivity)
    count = 0
    ys, xs = np.nonzero(m)
    for y0, x0 in zip(ys.tolist(), xs.tolist()):
        if labels[y0, x0]:
            continue
        count += 1
        labels[y0, x0] = count
        queue = deque([(y0, x0)])
        while queue:
            y, x = queue.popleft()
            for dy, dx in offsets:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and m[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = count
                    queue.append((ny, nx))
    return labels, count


def binarize_tiles(diff, tile_size, p_fa):
    """Per-tile exponential fit and threshold; returns (mask, rates)."""
    d = np.asarray(diff, dtype=np.uint8)
    h, w = d.shape
    ny = -(-h // tile_size)
    nx = -(-w // tile_size)
    mask = np.zeros((h, w), dtype=np.uint8)
    rates = np.zeros((ny, nx), dtype=np.float64)
    neg_log_p = -math.log(p_fa)
    for ty in range(ny):
        y0, y1 = ty * tile_size, min((ty + 1) * tile_size, h)
        for tx in range(nx):
            x0, x1 = tx * tile_size, min((tx + 1) * tile_size, w)
            tile = d[y0:y1, x0:x1]
            total = int(tile.sum(dtype=np.int64))
            if total == 0:
                continue
            lam = float(tile.size) / float(total)
            rates[ty, tx] = lam
            th = neg_log_p / lam
            mask[y0:y1, x0:x1] = tile > th
    return mask, rates


def grow_region(frame, seed_rows, seed_cols, cy, cx, half, lo, hi, connectivity=8):
    """Flood fill from the seed through in-band pixels of the search window."""
    f = np.asarray(frame, dtype=np.uint8)
    sr = np.asarray(seed_rows, dtype=np.intp)
    sc = np.asarray(seed_cols, dtype=np.intp)
    h, w = f.shape
    wy0, wy1 = max(cy - half, 0), min(cy + half + 1, h)
    wx0, wx1 = max(cx - half, 0), min(cx + half + 1, w)
    by0, by1 = min(wy0, int(sr.min())), max(wy1, int(sr.max()) + 1)
    bx0, bx1 = min(wx0, int(sc.min())), max(wx1, int(sc.max()) + 1)
    eligible = np.zeros((by1 - by0, bx1 - bx0), dtype=bool)
    window = f[wy0:wy1, wx0:wx1].astype(np.float64)
    eligible[wy0 - by0:wy1 - by0, wx0 - bx0:wx1 - bx0] = (window >= lo) & (window <= hi)
    eligible[sr - by0, sc - bx0] = True
    visited = np.zeros_like(eligible)
    offsets = _neighbour_offsets(connectivity)
    queue = deque()
    for y, x in zip((sr - by0).tolist(), (sc - bx0).tolist()):
        if not visited[y, x]:
            visited[y, x] = True
            queue.append((y, x))
    bh, bw = eligible.shape
    while queue:
        y, x = queue.popleft()
        for dy, dx in offsets:
            ny, nx = y + dy, x + dx
            if 0 <= ny < bh and 0 <= nx < bw and eligible[ny, nx] and not visited[ny, nx]:
                visited[ny, nx] = True
                queue.append((ny, nx))
    rows, cols = np.nonzero(visited)
    return rows + by0, cols + bx0


def ssim_map(frame, template, y0, y1, x0, x1, c1, c2):
    """SSIM of ``template`` at every top-left placement in [y0, y1] x [x0, x1]."""
    f = np.asarray(frame, dtype=np.int64)
    t = np.asarray(template, dtype=np.int64)
    th, tw = t.shape
    region = f[y0:y1 + th, x0:x1 + tw]
    windows = sliding_window_view(region, (th, tw))
    n = float(th * tw)
    sa = int(t.sum())
    saa = int((t * t).sum())
    mua = sa / n
    vara = saa / n - mua * mua
    sb = windows.sum(axis=(2, 3))
    sbb = (windows * windows).sum(axis=(2, 3))
    sab = (windows * t).sum(axis=(2, 3))
    mub = sb / n
    varb = sbb / n - mub * mub
    cov = sab / n - mua * mub
    return ((2.0 * mua * mub + c1) * (2.0 * cov + c2)) / (
        (mua * mua + mub * mub + c1) * (vara + varb + c2))
