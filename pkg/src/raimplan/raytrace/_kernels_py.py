"""Pure-Python geometry kernels (fallback when the compiled extension is absent).

Both backends implement the same two entry points against the packed geometry
tables built by ``engine.pack_scene``:

- ``segment_blocked``: does an open 3D segment pass through the open interior
  of any building prism (boundary contact does not block)?
- ``trace_paths``: image-method enumeration of specular reflection paths off
  vertical building walls, up to a bounce limit.
"""

from __future__ import annotations

# Sub-intervals of the parametric segment shorter than this are treated as
# degenerate (a crossing point, not a traversal) and skipped.
_MIN_SPAN = 1e-12


def _point_strictly_inside(poly, x, y):
    """Even-odd test for the open polygon interior; boundary points are outside."""
    inside = False
    n = len(poly)
    xj, yj = poly[n - 1]
    for i in range(n):
        xi, yi = poly[i]
        cross = (xj - xi) * (y - yi) - (yj - yi) * (x - xi)
        if cross == 0.0:
            lox, hix = (xi, xj) if xi <= xj else (xj, xi)
            loy, hiy = (yi, yj) if yi <= yj else (yj, yi)
            if lox <= x <= hix and loy <= y <= hiy:
                return False
        if (yi > y) != (yj > y):
            xint = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < xint:
                inside = not inside
        xj, yj = xi, yi
    return inside


def _prism_blocks(poly, zlo, zhi, px, py, pz, qx, qy, qz):
    """True if the open segment p->q enters the open prism poly x (zlo, zhi)."""
    dx = qx - px
    dy = qy - py
    dz = qz - pz
    ts = [0.0, 1.0]
    n = len(poly)
    ax, ay = poly[n - 1]
    for i in range(n):
        bx, by = poly[i]
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
                    ts.append(t)
        ax, ay = bx, by
    if dz != 0.0:
        for zc in (zlo, zhi):
            t = (zc - pz) / dz
            if 0.0 < t < 1.0:
                ts.append(t)
    ts.sort()
    t0 = ts[0]
    for t1 in ts[1:]:
        if t1 - t0 > _MIN_SPAN:
            tm = 0.5 * (t0 + t1)
            z = pz + tm * dz
            if zlo < z < zhi and _point_strictly_inside(poly, px + tm * dx, py + tm * dy):
                return True
        t0 = t1
    return False


def segment_blocked(geom, px, py, pz, qx, qy, qz):
    """True if the segment from p to q crosses any building interior."""
    sxlo, sxhi = (px, qx) if px <= qx else (qx, px)
    sylo, syhi = (py, qy) if py <= qy else (qy, py)
    szlo, szhi = (pz, qz) if pz <= qz else (qz, pz)
    for poly, (bxlo, bylo, bxhi, byhi), zlo, zhi in geom.py_prisms:
        if sxhi < bxlo or sxlo > bxhi or syhi < bylo or sylo > byhi:
            continue
        if szlo >= zhi or szhi <= zlo:
            continue
        if _prism_blocks(poly, zlo, zhi, px, py, pz, qx, qy, qz):
            return True
    return False


def trace_paths(geom, rxx, rxy, rxz, txx, txy, txz, max_bounces):
    """Image-method specular paths from tx to rx with 1..max_bounces wall hits.

    Returns a list of ``(wall_indices, bounce_points)`` where wall_indices is a
    tuple ordered from the tx side and bounce_points the matching (x, y, z)
    hits.  Paths are validated for wall-rectangle containment and cleared
    against building blockage on every leg.
    """
    walls = geom.py_walls
    nwalls = len(walls)
    out = []
    if max_bounces < 1 or nwalls == 0:
        return out

    def close_path(seq, images):
        k = len(seq)
        pts = [None] * k
        cx, cy, cz = rxx, rxy, rxz
        for j in range(k, 0, -1):
            x0, y0, ex, ey, len2, zlo, zhi, nx, ny, pd = walls[seq[j - 1]]
            ix, iy, iz = images[j]
            f_cur = nx * cx + ny * cy - pd
            f_img = nx * ix + ny * iy - pd
            if f_cur <= 0.0 or f_img >= 0.0:
                return None
            t = f_cur / (f_cur - f_img)
            hx = cx + t * (ix - cx)
            hy = cy + t * (iy - cy)
            hz = cz + t * (iz - cz)
            s = ((hx - x0) * ex + (hy - y0) * ey) / len2
            if s < 0.0 or s > 1.0 or hz < zlo or hz > zhi:
                return None
            pts[j - 1] = (hx, hy, hz)
            cx, cy, cz = hx, hy, hz
        ax, ay, az = txx, txy, txz
        for bx, by, bz in pts:
            if segment_blocked(geom, ax, ay, az, bx, by, bz):
                return None
            ax, ay, az = bx, by, bz
        if segment_blocked(geom, ax, ay, az, rxx, rxy, rxz):
            return None
        return pts

    def recurse(seq, images):
        last = seq[-1] if seq else -1
        ix, iy, iz = images[-1]
        for w in range(nwalls):
            if w == last:
                continue
            x0, y0, ex, ey, len2, zlo, zhi, nx, ny, pd = walls[w]
            f = nx * ix + ny * iy - pd
            if f <= 0.0:
                continue
            mx = ix - 2.0 * f * nx
            my = iy - 2.0 * f * ny
            seq.append(w)
            images.append((mx, my, iz))
            pts = close_path(seq, images)
            if pts is not None:
                out.append((tuple(seq), pts))
            if len(seq) < max_bounces:
                recurse(seq, images)
            seq.pop()
            images.pop()

    recurse([], [(txx, txy, txz)])
    return out
