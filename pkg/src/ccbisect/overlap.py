"""Vectorised overlap volumes between placed cutters and axis-aligned boxes.

Every function broadcasts over leading axes so a whole batch of placements
can be evaluated against every kernel box of a measure in one numpy pass.
Box-local formulas are used throughout; nothing is computed as a difference
of two large areas, so tiny kernels under huge placements stay accurate.
"""

import functools
import math
from itertools import product

import numpy as np

# Gauss-Legendre nodes on [-1, 1] used by the 3D chord quadrature.
CHORD_NODES = 10
_GL_X, _GL_W = np.polynomial.legendre.leggauss(CHORD_NODES)


def _pos_part_integral(yl, xl, yh, xh, X):
    """Integral over y in [yl, yh] of (x(y) - X)_+ for x linear in y."""
    length = yh - yl
    a = xl - X
    b = xh - X
    both = (a >= 0) & (b >= 0)
    mixed = (a > 0) != (b > 0)
    full = 0.5 * length * (a + b)
    denom = np.abs(a - b)
    denom = np.where(denom > 0, denom, 1.0)
    m = np.maximum(a, b)
    tri = 0.5 * length * m * m / denom
    return np.where(both, full, np.where(mixed & ~both, tri, 0.0))


def polygon_box_area(xa, ya, xb, yb, bx0, by0, bx1, by1):
    """Signed area of (polygon with edges (xa,ya)->(xb,yb)) intersected with a box.

    Edge arrays carry the edge index on the last axis, which is summed out.
    Box bounds broadcast against the remaining leading axes. CCW outer rings
    contribute positively, CW holes negatively; the polygon may be non-convex.
    """
    bx0 = np.asarray(bx0)[..., None]
    bx1 = np.asarray(bx1)[..., None]
    by0 = np.asarray(by0)[..., None]
    by1 = np.asarray(by1)[..., None]
    dy = yb - ya
    up = dy > 0
    ylo_e = np.where(up, ya, yb)
    yhi_e = np.where(up, yb, ya)
    ylo = np.maximum(ylo_e, by0)
    yhi = np.minimum(yhi_e, by1)
    live = (yhi > ylo) & (dy != 0)
    safe_dy = np.where(dy != 0, dy, 1.0)
    slope = (xb - xa) / safe_dy
    xl = xa + (ylo - ya) * slope
    xh = xa + (yhi - ya) * slope
    part = _pos_part_integral(ylo, xl, yhi, xh, bx0) - _pos_part_integral(ylo, xl, yhi, xh, bx1)
    sign = np.where(up, 1.0, -1.0)
    return np.sum(np.where(live, sign * part, 0.0), axis=-1)


def _circle_segment_integral(p, q, R):
    """Integral of sqrt(R^2 - x^2) over [p, q], both clipped to [-R, R]."""
    p = np.clip(p, -R, R)
    q = np.clip(q, -R, R)
    hp = np.sqrt(np.maximum(R * R - p * p, 0.0))
    hq = np.sqrt(np.maximum(R * R - q * q, 0.0))
    dang = np.arctan2(q * hp - p * hq, p * q + hp * hq)
    return 0.5 * ((q * hq - p * hp) + R * R * dang)


def disk_box_area(cx, cy, R, bx0, by0, bx1, by1):
    """Exact area of disk(center, R) intersected with [bx0,bx1] x [by0,by1]."""
    cx, cy, R, bx0, by0, bx1, by1 = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (cx, cy, R, bx0, by0, bx1, by1)))
    cands = [bx0, bx1, cx - R, cx + R]
    for yb in (by0, by1):
        dyb = yb - cy
        w = np.sqrt(np.maximum(R * R - dyb * dyb, 0.0))
        cands.append(cx - w)
        cands.append(cx + w)
    xs = np.stack(cands, axis=-1)
    xs = np.clip(xs, bx0[..., None], bx1[..., None])
    xs.sort(axis=-1)
    a = xs[..., :-1]
    b = xs[..., 1:]
    cxe, cye, Re = cx[..., None], cy[..., None], R[..., None]
    y0e, y1e = by0[..., None], by1[..., None]
    m = 0.5 * (a + b)
    hm = np.sqrt(np.maximum(Re * Re - (m - cxe) ** 2, 0.0))
    inside = np.abs(m - cxe) < Re
    top_h = cye + hm < y1e
    bot_h = cye - hm > y0e
    top_mid = np.where(top_h, cye + hm, y1e)
    bot_mid = np.where(bot_h, cye - hm, y0e)
    active = inside & (top_mid > bot_mid) & (b > a)
    width = b - a
    ih = _circle_segment_integral(a - cxe, b - cxe, Re)
    top = np.where(top_h, cye * width + ih, y1e * width)
    bot = np.where(bot_h, cye * width - ih, y0e * width)
    return np.sum(np.where(active, top - bot, 0.0), axis=-1)


def _sum_uniform_cdf(t, a):
    """P(sum_i a_i V_i <= t) for V_i iid uniform on [-1, 1], valid for t <= 0.

    ``a`` has the component axis last and is sorted descending; components
    below a relative floor are treated as exactly zero.
    """
    d = a.shape[-1]
    amax = a[..., 0]
    floor = 1e-9 * amax
    live = a > floor[..., None]
    m = np.sum(live, axis=-1)
    out = np.where(t >= 0, 0.5, 0.0)  # m == 0: point mass at 0
    for k in range(1, d + 1):
        ak = a[..., :k]
        ak_safe = np.where(ak > 0, ak, 1.0)
        shift = t + np.sum(ak_safe, axis=-1)
        acc = np.zeros_like(t)
        for eps in product((0, 1), repeat=k):
            eps = np.asarray(eps)
            x = shift - 2.0 * np.sum(eps * ak_safe, axis=-1)
            acc = acc + (-1.0) ** int(eps.sum()) * np.maximum(x, 0.0) ** k
        val = acc / (math.factorial(k) * np.prod(2.0 * ak_safe, axis=-1))
        out = np.where(m == k, val, out)
    return np.clip(out, 0.0, 1.0)


def halfspace_cube_fraction(normal, offset, centers, radii):
    """Fraction of each cube (center, half-width r) lying in {<x, n> >= offset}.

    ``normal`` (..., d) and ``offset`` (...) broadcast against ``centers``
    (..., d) and ``radii`` (...). The result is computed from the lower tail
    of the projected uniform sum, so f(n, o) + f(-n, -o) == 1 up to rounding.
    """
    normal = np.asarray(normal, dtype=float)
    t = np.asarray(offset) - np.sum(normal * centers, axis=-1)
    a = np.abs(normal) * np.asarray(radii)[..., None]
    a, t = np.broadcast_arrays(a, t[..., None])
    t = t[..., 0]
    a = -np.sort(-a, axis=-1)
    neg = t <= 0
    tail = _sum_uniform_cdf(np.where(neg, t, -t), a)
    below = np.where(neg, tail, 1.0 - tail)  # P(<x,n> - <k,n> <= t)
    return 1.0 - below


def _quad_interval(A, Bh, C):
    """Solve A x^2 + 2 Bh x + C <= 0 for A >= 0; returns (lo, hi, nonempty)."""
    disc = Bh * Bh - A * C
    A_safe = np.where(A > 0, A, 1.0)
    root = np.sqrt(np.maximum(disc, 0.0))
    lo = (-Bh - root) / A_safe
    hi = (-Bh + root) / A_safe
    ok = (A > 0) & (disc > 0)
    flat = A <= 0
    lo = np.where(flat, -np.inf, lo)
    hi = np.where(flat, np.inf, hi)
    ok = ok | (flat & (C <= 0))
    return lo, hi, ok


def _slab_interval(q0, e, h):
    """Solve |q0 + x e| <= h."""
    e_safe = np.where(e != 0, e, 1.0)
    t1 = (-h - q0) / e_safe
    t2 = (h - q0) / e_safe
    lo = np.where(e != 0, np.minimum(t1, t2), -np.inf)
    hi = np.where(e != 0, np.maximum(t1, t2), np.inf)
    ok = (e != 0) | (np.abs(q0) <= h)
    return lo, hi, ok


def chord_intervals(shape, q0, e):
    """Parameter interval {x : q0 + x e in shape} for lines in shape-local coordinates.

    ``shape`` is ("ball", R) | ("cylinder", R, half_height, axis) | ("box", half_extents).
    ``q0`` and ``e`` have the coordinate axis last.
    """
    kind = shape[0]
    if kind == "ball":
        R = shape[1]
        return _quad_interval(np.sum(e * e, -1), np.sum(q0 * e, -1), np.sum(q0 * q0, -1) - R * R)
    if kind == "cylinder":
        R, hh, axis = shape[1], shape[2], shape[3]
        keep = [i for i in range(q0.shape[-1]) if i != axis]
        qr, er = q0[..., keep], e[..., keep]
        lo, hi, ok = _quad_interval(np.sum(er * er, -1), np.sum(qr * er, -1),
                                    np.sum(qr * qr, -1) - R * R)
        lo2, hi2, ok2 = _slab_interval(q0[..., axis], e[..., axis], hh)
        return np.maximum(lo, lo2), np.minimum(hi, hi2), ok & ok2
    if kind == "box":
        ext = shape[1]
        lo = np.full(q0.shape[:-1], -np.inf)
        hi = np.full(q0.shape[:-1], np.inf)
        ok = np.ones(q0.shape[:-1], dtype=bool)
        for i, hx in enumerate(ext):
            l2, h2, o2 = _slab_interval(q0[..., i], e[..., i], hx)
            lo, hi, ok = np.maximum(lo, l2), np.minimum(hi, h2), ok & o2
        return lo, hi, ok
    raise ValueError(f"unknown shape kind {kind!r}")


def convex_cube_fraction(shape, inv_map, offset, centers, radii):
    """Fraction of each cube (center, half-width r) inside a placed convex 3D body.

    The placed body is {x : inv_map @ x + offset in shape}; ``inv_map`` is
    (B, 3, 3), ``offset`` (B, 3). Cubes are (K, 3) / (K,). Result is (B, K).
    The cube is swept by lines parallel to the x axis through a tensor Gauss
    grid on its (y, z) face; each chord length is exact.
    """
    inv_map = np.asarray(inv_map, dtype=float)
    offset = np.asarray(offset, dtype=float)
    B = inv_map.shape[0]
    K = centers.shape[0]
    gy, gz = np.meshgrid(_GL_X, _GL_X, indexing="ij")
    wgt = np.outer(_GL_W, _GL_W).ravel() / 4.0
    gy, gz = gy.ravel(), gz.ravel()
    # line points (0, y, z) for every kernel and node: (K, N, 3)
    base = np.zeros((K, gy.size, 3))
    base[..., 1] = centers[:, 1:2] + radii[:, None] * gy
    base[..., 2] = centers[:, 2:3] + radii[:, None] * gz
    ex = inv_map[:, :, 0]  # (B, 3) local direction of world x
    q0 = np.einsum("bij,knj->bkni", inv_map, base) + offset[:, None, None, :]
    e = np.broadcast_to(ex[:, None, None, :], q0.shape)
    lo, hi, ok = chord_intervals(shape, q0, e)
    x0 = (centers[:, 0] - radii)[None, :, None]
    x1 = (centers[:, 0] + radii)[None, :, None]
    length = np.minimum(hi, x1) - np.maximum(lo, x0)
    length = np.where(ok, np.maximum(length, 0.0), 0.0)
    frac = np.sum(length * wgt, axis=-1) / (2.0 * radii)[None, :]
    assert frac.shape == (B, K)
    return np.clip(frac, 0.0, 1.0)


# --------------------------------------------------------------------------
# Slice quadrature for balls and cylinders
# --------------------------------------------------------------------------
# The cube is cut into planar slices across one world axis at Gauss nodes;
# every slice area is exact, so each node is a C^1 function of the placement
# (chord lengths are not: they behave like a square root near tangency).

SLICE_NODES = 3      # Gauss nodes per panel
SLICE_PANELS = 2     # uniform panels per kernel, before splitting at breakpoints
SLICE_BREAKS = 16    # most breakpoints honoured inside one kernel
_PAIR_CHUNK = 4096
_PAD_LIMIT = 32     # below this many pairs, pad breakpoints instead of grouping


@functools.lru_cache(maxsize=None)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


def _slice_integral(lo, hi, breaks, slice_area, nodes=None, panels=None):
    """Integral over [lo, hi] (shape (P,)) of piecewise-smooth slice areas.

    Each interval is cut into ``panels`` equal pieces and at its breakpoints
    (``breaks`` (P, m), non-finite entries ignored, at most ``SLICE_BREAKS``
    honoured), and Gauss nodes are laid on every piece. Pairs are grouped by
    breakpoint count so no work goes into empty panels. ``slice_area(idx, z)``
    returns the areas (len(idx), n) of the slices at heights z (len(idx), n).
    """
    nodes = nodes or SLICE_NODES
    panels = panels or SLICE_PANELS
    gx, gw = _gauss(nodes)
    uni = lo[:, None] + (hi - lo)[:, None] * (np.arange(1, panels) / panels)
    inside = (breaks > lo[:, None]) & (breaks < hi[:, None])
    count = np.minimum(inside.sum(axis=1), SLICE_BREAKS)
    b = np.sort(np.where(inside, breaks, hi[:, None]), axis=1)
    if len(lo) <= _PAD_LIMIT:
        count = np.full_like(count, count.max(initial=0))   # one padded group: fewer calls
    out = np.zeros(len(lo))
    for m in np.unique(count):
        idx = np.flatnonzero(count == m)
        edges = np.sort(np.concatenate([lo[idx, None], uni[idx], b[idx, :m], hi[idx, None]], axis=1),
                        axis=1)
        mid = 0.5 * (edges[:, 1:] + edges[:, :-1])
        half = 0.5 * (edges[:, 1:] - edges[:, :-1])
        z = (mid[:, :, None] + half[:, :, None] * gx).reshape(len(idx), -1)
        w = (half[:, :, None] * gw).reshape(len(idx), -1)
        out[idx] = np.sum(slice_area(idx, z) * w, axis=1)
    return out


def _disk_triangle_area(a, b):
    """Signed area of unit disk intersected with triangle (0, a, b); points on last axis."""
    d = b - a
    A = np.sum(d * d, axis=-1)
    Bh = np.sum(a * d, axis=-1)
    C = np.sum(a * a, axis=-1) - 1.0
    disc = Bh * Bh - A * C
    A_safe = np.where(A > 0, A, 1.0)
    root = np.sqrt(np.maximum(disc, 0.0))
    hit = (disc > 0) & (A > 0)
    t1 = np.where(hit, np.clip((-Bh - root) / A_safe, 0.0, 1.0), 1.0)
    t2 = np.where(hit, np.clip((-Bh + root) / A_safe, 0.0, 1.0), 1.0)
    t2 = np.maximum(t2, t1)
    p = a + t1[..., None] * d
    q = a + t2[..., None] * d

    def cross(u, v):
        return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]

    def sector(u, v):
        return 0.5 * np.arctan2(cross(u, v), np.sum(u * v, axis=-1))

    return sector(a, p) + 0.5 * cross(p, q) + sector(q, b)


def _clip_halfplane(P, n, off):
    """Clip polygons P (..., M, 2) to {<x, n> >= off}; returns (..., 2M, 2).

    Slots never go unused: an edge lying wholly outside contributes the
    projections of its end onto the clip line, which only adds collinear
    back-and-forth pieces of zero area. ``n`` (..., 2) and ``off`` (...)
    broadcast against the polygon's leading axes.
    """
    n = n[..., None, :]
    f = np.sum(P * n, axis=-1) - off[..., None]
    Q = np.roll(P, -1, axis=-2)
    fq = np.roll(f, -1, axis=-1)
    pin = f >= 0
    qin = fq >= 0
    den = f - fq
    t = np.where(den != 0, f / np.where(den != 0, den, 1.0), 0.0)[..., None]
    I = P + t * (Q - P)
    nn = np.sum(n * n, axis=-1)[..., None]
    proj = Q - (fq[..., None] * n) / np.where(nn > 0, nn, 1.0)
    s1 = np.where((pin & qin)[..., None], Q, np.where(pin[..., None] | qin[..., None], I, proj))
    s2 = np.where(qin[..., None], Q, np.where(pin[..., None], I, proj))
    out = np.stack([s1, s2], axis=-2)
    return out.reshape(*out.shape[:-3], -1, 2)


def _ball_pairs(c, rho, kc, kr, nodes=None, panels=None):
    """Fraction of cube (kc, kr) inside ball (c, rho), pairwise over the leading axis."""
    nodes = nodes or SLICE_NODES + 1
    lo = kc[:, 2] - kr
    hi = kc[:, 2] + kr
    dx = np.stack([kc[:, 0] - kr - c[:, 0], kc[:, 0] + kr - c[:, 0]], 1)
    dy = np.stack([kc[:, 1] - kr - c[:, 1], kc[:, 1] + kr - c[:, 1]], 1)
    # the slice disk changes how it meets the square where its radius hits an edge or corner
    D2 = np.concatenate([np.zeros((len(c), 1)), dx * dx, dy * dy,
                         (dx[:, :, None] ** 2 + dy[:, None, :] ** 2).reshape(-1, 4)], 1)
    h = np.sqrt(np.maximum(rho[:, None] ** 2 - D2, 0.0))
    h = np.where(D2 < rho[:, None] ** 2, h, np.inf)
    breaks = np.concatenate([c[:, 2, None] - h, c[:, 2, None] + h], 1)

    def slice_area(idx, z):
        dz = z - c[idx, 2, None]
        R = np.sqrt(np.maximum(rho[idx, None] ** 2 - dz * dz, 0.0))
        return disk_box_area(c[idx, 0, None], c[idx, 1, None], R, (kc[idx, 0] - kr[idx])[:, None],
                             (kc[idx, 1] - kr[idx])[:, None], (kc[idx, 0] + kr[idx])[:, None],
                             (kc[idx, 1] + kr[idx])[:, None])

    return _slice_integral(lo, hi, breaks, slice_area, nodes, panels) / (8.0 * kr ** 3)


def _unit_perp(a):
    """Orthonormal pair spanning the plane orthogonal to each unit row of ``a``."""
    helper = np.where((np.abs(a[:, 0]) < 0.9)[:, None], np.array([1.0, 0.0, 0.0]),
                      np.array([0.0, 1.0, 0.0]))
    e1 = np.cross(a, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    return e1, np.cross(a, e1)


def _cylinder_breaks(a, rho, eta, xs, ys):
    """Heights (relative to the centre) where a cylinder's slice changes shape against a square.

    ``a`` (P, 3) is the axis, the square's edge lines are x = xs (P, 2) and
    y = ys (P, 2) relative to the centre, and the last coordinate is the
    sweep direction.
    """
    az = a[:, 2]
    a2 = a[:, :2]
    tiny = 1e-300
    out = []
    cap = eta * np.abs(az)
    side = rho * np.sqrt(np.maximum(1.0 - az * az, 0.0))
    out += [-cap - side, -cap + side, cap - side, cap + side]
    corners = np.stack([np.stack([xs[:, i], ys[:, j]], 1) for i in (0, 1) for j in (0, 1)], 1)
    pa = np.einsum("pki,pi->pk", corners, a2)
    pp = np.sum(corners * corners, axis=2)
    # lateral surface through a corner: (1 - az^2) t^2 - 2 pa az t + pp - pa^2 - rho^2 = 0
    qa = (1.0 - az * az)[:, None]
    qb = -pa * az[:, None]
    qc = pp - pa * pa - (rho * rho)[:, None]
    disc = np.sqrt(np.maximum(qb * qb - qa * qc, 0.0))
    safe = np.where(qa > 1e-12, qa, 1.0)
    for sgn in (-1.0, 1.0):
        root = np.where(qa > 1e-12, (-qb + sgn * disc) / safe,
                        np.where(np.abs(qb) > tiny, -qc / (2.0 * np.where(np.abs(qb) > tiny, qb, 1.0)),
                                 np.nan))
        out += list((np.where(qb * qb - qa * qc >= 0, root, np.nan)).T)
    # cap planes through a corner
    for e in (-1.0, 1.0):
        out += list(((e * eta)[:, None] - pa).T / az)
    # slice ellipse touching an edge line: centre moves as t * a2 / az, half-width fixed
    for k, lines in ((0, xs), (1, ys)):
        bk = a2[:, k] / az
        hw = rho * np.sqrt(1.0 + (a2[:, k] / az) ** 2)
        ok = np.abs(bk) > 1e-12
        for e in (-1.0, 1.0):
            out += list(np.where(ok[:, None], (lines + e * hw[:, None]) / np.where(ok, bk, 1.0)[:, None],
                                 np.nan).T)
    # rim circles crossing the side planes of the kernel
    e1, e2 = _unit_perp(a)
    for e in (-1.0, 1.0):
        for k, lines in ((0, xs), (1, ys)):
            A = rho * e1[:, k]
            B = rho * e2[:, k]
            r = np.hypot(A, B)
            ph0 = np.arctan2(B, A)
            for j in (0, 1):
                C = lines[:, j] - e * eta * a[:, k]
                ok = r > np.abs(C)
                dph = np.arccos(np.clip(C / np.where(r > 0, r, 1.0), -1.0, 1.0))
                for sg in (-1.0, 1.0):
                    ph = ph0 + sg * dph
                    zz = e * eta * az + rho * (np.cos(ph) * e1[:, 2] + np.sin(ph) * e2[:, 2])
                    out.append(np.where(ok, zz, np.nan))
    return np.stack(out, 1)


def _cylinder_pairs(c, a, rho, eta, kc, kr, nodes=None, panels=None):
    """Pairwise cube-in-cylinder fraction, slicing across the last coordinate.

    The caller orders coordinates so that |a_z| is the largest axis component.
    """
    az = a[:, 2]
    a2 = a[:, :2]
    xs = np.stack([kc[:, 0] - kr - c[:, 0], kc[:, 0] + kr - c[:, 0]], 1)
    ys = np.stack([kc[:, 1] - kr - c[:, 1], kc[:, 1] + kr - c[:, 1]], 1)
    lo = kc[:, 2] - kr
    hi = kc[:, 2] + kr
    breaks = c[:, 2, None] + _cylinder_breaks(a, rho, eta, xs, ys)
    breaks = np.where(np.isnan(breaks), np.inf, breaks)
    n2 = np.sum(a2 * a2, axis=1)
    flat = n2 == 0
    k = np.where(n2 > 0, (np.abs(az) - 1.0) / np.where(n2 > 0, n2, 1.0), 0.0)
    S = np.eye(2)[None] + k[:, None, None] * a2[:, :, None] * a2[:, None, :]   # Q^(1/2)
    rect = np.stack([np.stack([xs[:, 0], ys[:, 0]], -1), np.stack([xs[:, 1], ys[:, 0]], -1),
                     np.stack([xs[:, 1], ys[:, 1]], -1), np.stack([xs[:, 0], ys[:, 1]], -1)], 1)

    def slice_area(idx, z):
        dz = z - c[idx, 2, None]                                          # (P, n)
        A2, AZ, RHO, ETA, FL = a2[idx], az[idx], rho[idx], eta[idx], flat[idx]
        poly = np.broadcast_to(rect[idx, None], (*dz.shape, 4, 2))
        # caps: |<a2, P> + az dz| <= eta
        nrm = np.broadcast_to(np.where(FL[:, None], np.array([1.0, 0.0]), A2)[:, None, :],
                              (*dz.shape, 2))
        lo_c = np.where(FL[:, None], -1e30, -ETA[:, None] - AZ[:, None] * dz)
        hi_c = np.where(FL[:, None], 1e30, ETA[:, None] - AZ[:, None] * dz)
        poly = _clip_halfplane(poly, nrm, lo_c)
        poly = _clip_halfplane(poly, -nrm, -hi_c)
        # slice ellipse (P - t b)^T Q (P - t b) <= rho^2, Q = I - a2 a2^T, mapped to the unit disk
        xy0 = dz[..., None] * (A2 / AZ[:, None])[:, None, :]
        X = (poly - xy0[:, :, None, :]) / RHO[:, None, None, None]
        U = (X[..., None, :] @ np.swapaxes(S[idx], 1, 2)[:, None, None])[..., 0, :]
        area = np.sum(_disk_triangle_area(U, np.roll(U, -1, axis=-2)), axis=-1)
        area = area * (RHO * RHO / np.abs(AZ))[:, None]
        inside_caps = np.abs(AZ[:, None] * dz) <= ETA[:, None]
        return np.where(FL[:, None] & ~inside_caps, 0.0, area)

    return _slice_integral(lo, hi, breaks, slice_area, nodes, panels) / (8.0 * kr ** 3)


def _straddling(sdf, kr):
    """Split a (B, K) signed-distance table into exact 0/1 fractions and pairs needing quadrature."""
    reach = np.sqrt(3.0) * kr[None, :]
    out = np.where(sdf < 0, 1.0, 0.0)
    todo = np.nonzero(np.abs(sdf) < reach)
    return out, todo


def ball_cube_fraction(centers, rho, kc, kr, nodes=None, panels=None):
    """Fraction of each cube (kc, kr) inside balls (centers (B, 3), radii rho (B,)) -> (B, K)."""
    sdf = np.linalg.norm(kc[None, :, :] - centers[:, None, :], axis=2) - rho[:, None]
    out, (bi, ki) = _straddling(sdf, kr)
    for s in range(0, bi.size, _PAIR_CHUNK):
        b, k = bi[s:s + _PAIR_CHUNK], ki[s:s + _PAIR_CHUNK]
        out[b, k] = _ball_pairs(centers[b], rho[b], kc[k], kr[k], nodes, panels)
    return np.clip(out, 0.0, 1.0)


def cylinder_cube_fraction(centers, axes, rho, eta, kc, kr, nodes=None, panels=None):
    """Fraction of each cube (kc, kr) inside placed cylinders -> (B, K).

    ``centers`` (B, 3) are cylinder centres, ``axes`` (B, 3) unit axis
    directions, ``rho`` radii and ``eta`` half-heights. Each cylinder is
    sliced across the world axis it is most aligned with.
    """
    rel = kc[None, :, :] - centers[:, None, :]
    along = np.einsum("bki,bi->bk", rel, axes)
    radial = np.sqrt(np.maximum(np.sum(rel * rel, axis=2) - along * along, 0.0))
    dr = radial - rho[:, None]
    da = np.abs(along) - eta[:, None]
    sdf = np.minimum(np.maximum(dr, da), 0.0) + np.hypot(np.maximum(dr, 0.0), np.maximum(da, 0.0))
    out, (bi, ki) = _straddling(sdf, kr)
    # per pair, move the sweep axis (most aligned with the cylinder axis) last
    sweep = np.argmax(np.abs(axes), axis=1)
    perm = np.array([[1, 2, 0], [2, 0, 1], [0, 1, 2]])[sweep]
    pc = np.take_along_axis(centers, perm, axis=1)
    pa = np.take_along_axis(axes, perm, axis=1)
    for s in range(0, bi.size, _PAIR_CHUNK):
        b, k = bi[s:s + _PAIR_CHUNK], ki[s:s + _PAIR_CHUNK]
        out[b, k] = _cylinder_pairs(pc[b], pa[b], rho[b], eta[b],
                                    np.take_along_axis(kc[k], perm[b], axis=1), kr[k], nodes, panels)
    return np.clip(out, 0.0, 1.0)
