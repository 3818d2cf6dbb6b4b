# cython: language_level=3
"""Compiled versions of the raster kernels in :mod:`tinytrack._pykernels`.

Every function here mirrors its Python twin operation for operation so the
two backends agree bit-for-bit on integer inputs.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        i, parent[i] = parent[i], root
    return root


cdef inline void _union(Py_ssize_t[::1] parent, Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    a = _find(parent, a)
    b = _find(parent, b)
    if a < b:
        parent[b] = a
    elif b < a:
        parent[a] = b


def label(mask, int connectivity=8):
    """Label connected set pixels; labels follow raster order of first pixel."""
    cdef const cnp.uint8_t[:, ::1] m = np.ascontiguousarray(mask, dtype=np.uint8)
    cdef Py_ssize_t h = m.shape[0], w = m.shape[1]
    labels_arr = np.zeros((h, w), dtype=np.int32)
    cdef cnp.int32_t[:, ::1] lab = labels_arr
    # provisional labels are 1-based; a checkerboard needs at most ceil(h*w/2)
    parent_arr = np.zeros(h * w // 2 + 2, dtype=np.intp)
    cdef Py_ssize_t[::1] parent = parent_arr
    cdef Py_ssize_t y, x, nxt = 1, cur, nb
    cdef bint diag = connectivity == 8

    with nogil:
        for y in range(h):
            for x in range(w):
                if not m[y, x]:
                    continue
                cur = 0
                if x > 0 and m[y, x - 1]:
                    cur = lab[y, x - 1]
                if y > 0:
                    if m[y - 1, x]:
                        nb = lab[y - 1, x]
                        if cur == 0:
                            cur = nb
                        else:
                            _union(parent, cur, nb)
                    if diag:
                        if x > 0 and m[y - 1, x - 1]:
                            nb = lab[y - 1, x - 1]
                            if cur == 0:
                                cur = nb
                            else:
                                _union(parent, cur, nb)
                        if x + 1 < w and m[y - 1, x + 1]:
                            nb = lab[y - 1, x + 1]
                            if cur == 0:
                                cur = nb
                            else:
                                _union(parent, cur, nb)
                if cur == 0:
                    parent[nxt] = nxt
                    cur = nxt
                    nxt += 1
                lab[y, x] = <cnp.int32_t>cur

    final_arr = np.zeros(nxt, dtype=np.int32)
    cdef cnp.int32_t[::1] final = final_arr
    cdef cnp.int32_t count = 0
    cdef Py_ssize_t root
    with nogil:
        for y in range(h):
            for x in range(w):
                cur = lab[y, x]
                if cur == 0:
                    continue
                root = _find(parent, cur)
                if final[root] == 0:
                    count += 1
                    final[root] = count
                lab[y, x] = final[root]
    return labels_arr, int(count)


def binarize_tiles(diff, int tile_size, double p_fa):
    """Per-tile exponential fit and threshold; returns (mask, rates)."""
    cdef const cnp.uint8_t[:, ::1] d = np.ascontiguousarray(diff, dtype=np.uint8)
    cdef Py_ssize_t h = d.shape[0], w = d.shape[1]
    cdef Py_ssize_t ny = (h + tile_size - 1) // tile_size
    cdef Py_ssize_t nx = (w + tile_size - 1) // tile_size
    mask_arr = np.zeros((h, w), dtype=np.uint8)
    rates_arr = np.zeros((ny, nx), dtype=np.float64)
    cdef cnp.uint8_t[:, ::1] out = mask_arr
    cdef double[:, ::1] rates = rates_arr
    cdef double neg_log_p = -log(p_fa)
    cdef Py_ssize_t ty, tx, y, x, y0, y1, x0, x1
    cdef long long total, count
    cdef double lam, th

    with nogil:
        for ty in range(ny):
            y0 = ty * tile_size
            y1 = min(y0 + tile_size, h)
            for tx in range(nx):
                x0 = tx * tile_size
                x1 = min(x0 + tile_size, w)
                total = 0
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        total += d[y, x]
                if total == 0:
                    continue
                count = (y1 - y0) * (x1 - x0)
                lam = <double>count / <double>total
                rates[ty, tx] = lam
                th = neg_log_p / lam
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        if d[y, x] > th:
                            out[y, x] = 1
    return mask_arr, rates_arr


def grow_region(frame, seed_rows, seed_cols, Py_ssize_t cy, Py_ssize_t cx,
                Py_ssize_t half, double lo, double hi, int connectivity=8):
    """Flood fill from the seed through in-band pixels of the search window."""
    cdef const cnp.uint8_t[:, ::1] f = np.ascontiguousarray(frame, dtype=np.uint8)
    cdef const cnp.intp_t[::1] sr = np.ascontiguousarray(seed_rows, dtype=np.intp)
    cdef const cnp.intp_t[::1] sc = np.ascontiguousarray(seed_cols, dtype=np.intp)
    cdef Py_ssize_t h = f.shape[0], w = f.shape[1], n = sr.shape[0]
    cdef Py_ssize_t wy0 = max(cy - half, 0), wy1 = min(cy + half + 1, h)
    cdef Py_ssize_t wx0 = max(cx - half, 0), wx1 = min(cx + half + 1, w)
    cdef Py_ssize_t by0 = wy0, by1 = wy1, bx0 = wx0, bx1 = wx1
    cdef Py_ssize_t i, y, x, ny_, nx_, dy, dx, head = 0, tail = 0
    for i in range(n):
        by0 = min(by0, sr[i]); by1 = max(by1, sr[i] + 1)
        bx0 = min(bx0, sc[i]); bx1 = max(bx1, sc[i] + 1)
    cdef Py_ssize_t bh = by1 - by0, bw = bx1 - bx0
    # 0 = not eligible, 1 = eligible, 2 = visited
    state_arr = np.zeros((bh, bw), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] state = state_arr
    cdef double v
    for y in range(wy0, wy1):
        for x in range(wx0, wx1):
            v = f[y, x]
            if lo <= v <= hi:
                state[y - by0, x - bx0] = 1
    queue_arr = np.empty(bh * bw, dtype=np.intp)
    cdef cnp.intp_t[::1] queue = queue_arr
    for i in range(n):
        y = sr[i] - by0
        x = sc[i] - bx0
        state[y, x] = 1
    for i in range(n):
        y = sr[i] - by0
        x = sc[i] - bx0
        if state[y, x] != 2:
            state[y, x] = 2
            queue[tail] = y * bw + x
            tail += 1
    while head < tail:
        y = queue[head] // bw
        x = queue[head] % bw
        head += 1
        for dy in range(-1, 2):
            for dx in range(-1, 2):
                if dy == 0 and dx == 0:
                    continue
                if connectivity == 4 and dy != 0 and dx != 0:
                    continue
                ny_ = y + dy
                nx_ = x + dx
                if ny_ < 0 or ny_ >= bh or nx_ < 0 or nx_ >= bw:
                    continue
                if state[ny_, nx_] == 1:
                    state[ny_, nx_] = 2
                    queue[tail] = ny_ * bw + nx_
                    tail += 1
    rows, cols = np.nonzero(state_arr == 2)
    return rows + by0, cols + bx0


def ssim_map(frame, template, Py_ssize_t y0, Py_ssize_t y1, Py_ssize_t x0, Py_ssize_t x1,
             double c1, double c2):
    """SSIM of ``template`` at every top-left placement in [y0, y1] x [x0, x1]."""
    cdef const cnp.uint8_t[:, ::1] f = np.ascontiguousarray(frame, dtype=np.uint8)
    cdef const cnp.uint8_t[:, ::1] t = np.ascontiguousarray(template, dtype=np.uint8)
    cdef Py_ssize_t th = t.shape[0], tw = t.shape[1]
    cdef Py_ssize_t ny = y1 - y0 + 1, nx = x1 - x0 + 1
    out_arr = np.empty((ny, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef long long sa = 0, saa = 0, sb, sbb, sab
    cdef Py_ssize_t i, j, py, px
    cdef long long a, b
    cdef double n = th * tw, mua, mub, vara, varb, cov
    for i in range(th):
        for j in range(tw):
            a = t[i, j]
            sa += a
            saa += a * a
    mua = sa / n
    vara = saa / n - mua * mua
    with nogil:
        for py in range(ny):
            for px in range(nx):
                sb = 0
                sbb = 0
                sab = 0
                for i in range(th):
                    for j in range(tw):
                        a = t[i, j]
                        b = f[y0 + py + i, x0 + px + j]
                        sb += b
                        sbb += b * b
                        sab += a * b
                mub = sb / n
                varb = sbb / n - mub * mub
                cov = sab / n - mua * mub
                out[py, px] = ((2.0 * mua * mub + c1) * (2.0 * cov + c2)) / (
                    (mua * mua + mub * mub + c1) * (vara + varb + c2))
    return out_arr
