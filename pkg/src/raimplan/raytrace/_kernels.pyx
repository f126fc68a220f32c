# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled geometry kernels; semantics mirror _kernels_py exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

DEF MAX_DEPTH = 8

cdef double _MIN_SPAN = 1e-12


cdef bint _point_strictly_inside(const double[:, ::1] poly_xy, Py_ssize_t lo,
                                 Py_ssize_t hi, double x, double y) noexcept:
    cdef bint inside = False
    cdef Py_ssize_t i
    cdef double xi, yi, xj, yj, cross, xint, lox, hix, loy, hiy
    xj = poly_xy[hi - 1, 0]
    yj = poly_xy[hi - 1, 1]
    for i in range(lo, hi):
        xi = poly_xy[i, 0]
        yi = poly_xy[i, 1]
        cross = (xj - xi) * (y - yi) - (yj - yi) * (x - xi)
        if cross == 0.0:
            lox = xi if xi <= xj else xj
            hix = xj if xi <= xj else xi
            loy = yi if yi <= yj else yj
            hiy = yj if yi <= yj else yi
            if lox <= x <= hix and loy <= y <= hiy:
                return False
        if (yi > y) != (yj > y):
            xint = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < xint:
                inside = not inside
        xj = xi
        yj = yi
    return inside


cdef bint _prism_blocks(const double[:, ::1] poly_xy, Py_ssize_t lo, Py_ssize_t hi,
                        double zlo, double zhi,
                        double px, double py, double pz,
                        double qx, double qy, double qz,
                        double* ts) noexcept:
    cdef double dx = qx - px
    cdef double dy = qy - py
    cdef double dz = qz - pz
    cdef Py_ssize_t nts = 2
    ts[0] = 0.0
    ts[1] = 1.0
    cdef Py_ssize_t i, j
    cdef double ax, ay, bx, by, ex, ey, denom, wx, wy, t, s, zc, key, tm, z, t0, t1
    ax = poly_xy[hi - 1, 0]
    ay = poly_xy[hi - 1, 1]
    for i in range(lo, hi):
        bx = poly_xy[i, 0]
        by = poly_xy[i, 1]
        ex = bx - ax
        ey = by - ay
        denom = dx * ey - dy * ex
        if denom != 0.0:
            wx = ax - px
            wy = ay - py
            t = (wx * ey - wy * ex) / denom
            if 0.0 <= t <= 1.0:
                s = (wx * dy - wy * dx) / denom
                if 0.0 <= s <= 1.0:
                    ts[nts] = t
                    nts += 1
        ax = bx
        ay = by
    if dz != 0.0:
        for j in range(2):
            zc = zlo if j == 0 else zhi
            t = (zc - pz) / dz
            if 0.0 < t < 1.0:
                ts[nts] = t
                nts += 1
    # insertion sort; crossing counts stay tiny
    for i in range(1, nts):
        key = ts[i]
        j = i - 1
        while j >= 0 and ts[j] > key:
            ts[j + 1] = ts[j]
            j -= 1
        ts[j + 1] = key
    t0 = ts[0]
    for i in range(1, nts):
        t1 = ts[i]
        if t1 - t0 > _MIN_SPAN:
            tm = 0.5 * (t0 + t1)
            z = pz + tm * dz
            if zlo < z < zhi and _point_strictly_inside(
                    poly_xy, lo, hi, px + tm * dx, py + tm * dy):
                return True
        t0 = t1
    return False


cdef bint _segment_blocked_c(const double[:, ::1] poly_xy, const long long[::1] poly_off,
                             const double[:, ::1] bbox, const double[::1] pzlo,
                             const double[::1] pzhi, double* ts,
                             double px, double py, double pz,
                             double qx, double qy, double qz) noexcept:
    cdef Py_ssize_t b, nb
    cdef double sxlo, sxhi, sylo, syhi, szlo, szhi
    nb = bbox.shape[0]
    sxlo = px if px <= qx else qx
    sxhi = qx if px <= qx else px
    sylo = py if py <= qy else qy
    syhi = qy if py <= qy else py
    szlo = pz if pz <= qz else qz
    szhi = qz if pz <= qz else pz
    for b in range(nb):
        if sxhi < bbox[b, 0] or sxlo > bbox[b, 2]:
            continue
        if syhi < bbox[b, 1] or sylo > bbox[b, 3]:
            continue
        if szlo >= pzhi[b] or szhi <= pzlo[b]:
            continue
        if _prism_blocks(poly_xy, poly_off[b], poly_off[b + 1], pzlo[b], pzhi[b],
                         px, py, pz, qx, qy, qz, ts):
            return True
    return False


def segment_blocked(geom, double px, double py, double pz,
                    double qx, double qy, double qz):
    """True if the segment from p to q crosses any building interior."""
    cdef const double[:, ::1] poly_xy = geom.np_poly_xy
    cdef const long long[::1] poly_off = geom.np_poly_off
    cdef const double[:, ::1] bbox = geom.np_bbox
    cdef const double[::1] pzlo = geom.np_prism_zlo
    cdef const double[::1] pzhi = geom.np_prism_zhi
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ts_arr = np.empty(
        geom.max_vertices + 4, dtype=np.float64)
    return bool(_segment_blocked_c(poly_xy, poly_off, bbox, pzlo, pzhi,
                                   &ts_arr[0], px, py, pz, qx, qy, qz))


def trace_paths(geom, double rxx, double rxy, double rxz,
                double txx, double txy, double txz, int max_bounces):
    """Image-method specular paths; same contract as the Python backend."""
    cdef const double[:, ::1] walls = geom.np_walls
    cdef const double[:, ::1] poly_xy = geom.np_poly_xy
    cdef const long long[::1] poly_off = geom.np_poly_off
    cdef const double[:, ::1] bbox = geom.np_bbox
    cdef const double[::1] pzlo = geom.np_prism_zlo
    cdef const double[::1] pzhi = geom.np_prism_zhi
    cdef Py_ssize_t nwalls = walls.shape[0]
    out = []
    if max_bounces < 1 or nwalls == 0:
        return out
    if max_bounces > MAX_DEPTH:
        raise ValueError("max_bounces exceeds compiled kernel depth limit")

    cdef cnp.ndarray[cnp.float64_t, ndim=1] ts_arr = np.empty(
        geom.max_vertices + 4, dtype=np.float64)
    cdef double* ts = &ts_arr[0]

    cdef Py_ssize_t seq[MAX_DEPTH]
    cdef double img_x[MAX_DEPTH + 1]
    cdef double img_y[MAX_DEPTH + 1]
    cdef double img_z[MAX_DEPTH + 1]
    cdef double hit_x[MAX_DEPTH]
    cdef double hit_y[MAX_DEPTH]
    cdef double hit_z[MAX_DEPTH]
    cdef Py_ssize_t stack_w[MAX_DEPTH]
    cdef Py_ssize_t depth, w, j, k
    cdef double ix, iy, f, cx, cy, cz, f_cur, f_img, t, hx, hy, hz, s
    cdef double ex2, ey2
    cdef bint ok

    img_x[0] = txx
    img_y[0] = txy
    img_z[0] = txz
    depth = 0
    stack_w[0] = 0
    while True:
        if stack_w[depth] >= nwalls:
            if depth == 0:
                break
            depth -= 1
            stack_w[depth] += 1
            continue
        w = stack_w[depth]
        if depth > 0 and w == seq[depth - 1]:
            stack_w[depth] += 1
            continue
        ix = img_x[depth]
        iy = img_y[depth]
        f = walls[w, 7] * ix + walls[w, 8] * iy - walls[w, 9]
        if f <= 0.0:
            stack_w[depth] += 1
            continue
        seq[depth] = w
        img_x[depth + 1] = ix - 2.0 * f * walls[w, 7]
        img_y[depth + 1] = iy - 2.0 * f * walls[w, 8]
        img_z[depth + 1] = img_z[depth]
        k = depth + 1

        # try to close the current sequence back to the receiver
        ok = True
        cx = rxx
        cy = rxy
        cz = rxz
        for j in range(k, 0, -1):
            w = seq[j - 1]
            f_cur = walls[w, 7] * cx + walls[w, 8] * cy - walls[w, 9]
            f_img = walls[w, 7] * img_x[j] + walls[w, 8] * img_y[j] - walls[w, 9]
            if f_cur <= 0.0 or f_img >= 0.0:
                ok = False
                break
            t = f_cur / (f_cur - f_img)
            hx = cx + t * (img_x[j] - cx)
            hy = cy + t * (img_y[j] - cy)
            hz = cz + t * (img_z[j] - cz)
            s = ((hx - walls[w, 0]) * walls[w, 2] + (hy - walls[w, 1]) * walls[w, 3]) / walls[w, 4]
            if s < 0.0 or s > 1.0 or hz < walls[w, 5] or hz > walls[w, 6]:
                ok = False
                break
            hit_x[j - 1] = hx
            hit_y[j - 1] = hy
            hit_z[j - 1] = hz
            cx = hx
            cy = hy
            cz = hz
        if ok:
            ex2 = txx
            ey2 = txy
            cz = txz
            for j in range(k):
                if _segment_blocked_c(poly_xy, poly_off, bbox, pzlo, pzhi, ts,
                                      ex2, ey2, cz, hit_x[j], hit_y[j], hit_z[j]):
                    ok = False
                    break
                ex2 = hit_x[j]
                ey2 = hit_y[j]
                cz = hit_z[j]
            if ok and _segment_blocked_c(poly_xy, poly_off, bbox, pzlo, pzhi, ts,
                                         ex2, ey2, cz, rxx, rxy, rxz):
                ok = False
            if ok:
                out.append((tuple([seq[j] for j in range(k)]),
                            [(hit_x[j], hit_y[j], hit_z[j]) for j in range(k)]))

        if k < max_bounces:
            depth += 1
            stack_w[depth] = 0
        else:
            stack_w[depth] += 1
    return out
