"""Arc-length parametrized boundary pieces.

Every piece maps a local arc-length coordinate ``u`` in ``[0, length]`` to
points on a planar curve, oriented counterclockwise.  Pieces also answer
exact segment/ray intersection queries, which the star-region, clearance
and trajectory machinery all rely on.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

_TWO_PI = 2.0 * math.pi


def _as_xy(p) -> np.ndarray:
    a = np.asarray(p, dtype=float)
    if a.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {a.shape}")
    return a


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _golden_min(f, lo: float, hi: float, iters: int = 90) -> float:
    """Golden-section minimum value of f on [lo, hi]."""
    phi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - phi * (b - a)
    d = a + phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = f(d)
    return min(fc, fd)


class ArcPiece:
    """Counterclockwise circular arc.

    Parameters
    ----------
    center, radius : circle carrying the arc.
    a0, a1 : angular window of the outward radial direction, a1 > a0.
    """

    def __init__(self, center, radius: float, a0: float, a1: float):
        if radius <= 0:
            raise ValueError("arc radius must be positive")
        if a1 <= a0:
            raise ValueError("empty arc window")
        self.center = _as_xy(center)
        self.radius = float(radius)
        self.a0 = float(a0)
        self.a1 = float(a1)
        self.length = self.radius * (self.a1 - self.a0)

    def _ang(self, u):
        return self.a0 + np.asarray(u, dtype=float) / self.radius

    def point(self, u):
        t = self._ang(u)
        return self.center + self.radius * np.stack([np.cos(t), np.sin(t)], axis=-1)

    def tangent(self, u):
        t = self._ang(u)
        return np.stack([-np.sin(t), np.cos(t)], axis=-1)

    def curvature(self, u):
        return np.full(np.shape(np.asarray(u)), 1.0 / self.radius)

    def nearest_dist(self, pts):
        """Distance from points (n,2) to the arc as a point set."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts - self.center
        rho = np.hypot(d[:, 0], d[:, 1])
        ang = np.arctan2(d[:, 1], d[:, 0])
        # fold the query angle into [a0, a0 + 2pi)
        rel = np.mod(ang - self.a0, _TWO_PI)
        on_arc = rel <= (self.a1 - self.a0)
        radial = np.abs(rho - self.radius)
        e0 = self.point(0.0)
        e1 = self.point(self.length)
        d_end = np.minimum(np.hypot(*(pts - e0).T), np.hypot(*(pts - e1).T))
        return np.where(on_arc, radial, d_end)

    def _param_from_angle(self, ang: float) -> float:
        rel = (ang - self.a0) % _TWO_PI
        return rel * self.radius

    def segment_hits(self, p, q):
        """Intersections with segment p->q as (t_seg in [0,1], u) pairs."""
        p = _as_xy(p)
        q = _as_xy(q)
        d = q - p
        f = p - self.center
        A = d @ d
        B = 2.0 * (f @ d)
        C = f @ f - self.radius**2
        disc = B * B - 4 * A * C
        out = []
        if A == 0 or disc < 0:
            return out
        sq = math.sqrt(disc)
        for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)):
            if -1e-12 <= t <= 1 + 1e-12:
                x = p + t * d
                ang = math.atan2(x[1] - self.center[1], x[0] - self.center[0])
                rel = (ang - self.a0) % _TWO_PI
                if rel <= self.a1 - self.a0 + 1e-12:
                    out.append((min(max(t, 0.0), 1.0), min(rel * self.radius, self.length)))
        return out

    def ray_hits(self, x, d):
        """Positive ray parameters t where x + t*d meets the arc."""
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        f = x - self.center
        A = d @ d
        B = 2.0 * (f @ d)
        C = f @ f - self.radius**2
        disc = B * B - 4 * A * C
        if A == 0 or disc < 0:
            return []
        sq = math.sqrt(disc)
        hits = []
        for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)):
            if t > 0:
                p = x + t * d
                ang = math.atan2(p[1] - self.center[1], p[0] - self.center[0])
                rel = (ang - self.a0) % _TWO_PI
                if rel <= self.a1 - self.a0 + 1e-12:
                    hits.append(t)
        return hits


class SegmentPiece:
    """Straight boundary segment from p0 to p1."""

    def __init__(self, p0, p1):
        self.p0 = _as_xy(p0)
        self.p1 = _as_xy(p1)
        delta = self.p1 - self.p0
        self.length = float(np.hypot(*delta))
        if self.length <= 0:
            raise ValueError("degenerate segment")
        self.dir = delta / self.length

    def point(self, u):
        u = np.asarray(u, dtype=float)
        return self.p0 + u[..., None] * self.dir

    def tangent(self, u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(self.dir, u.shape + (2,)).copy()

    def curvature(self, u):
        return np.zeros(np.shape(np.asarray(u)))

    def nearest_dist(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - self.p0
        t = np.clip(rel @ self.dir, 0.0, self.length)
        foot = self.p0 + t[:, None] * self.dir
        return np.hypot(*(pts - foot).T)

    def segment_hits(self, p, q):
        p = _as_xy(p)
        q = _as_xy(q)
        d = q - p
        e = self.p1 - self.p0
        denom = d[0] * e[1] - d[1] * e[0]
        if abs(denom) < 1e-15:
            return []
        rel = self.p0 - p
        t = (rel[0] * e[1] - rel[1] * e[0]) / denom
        v = (rel[0] * d[1] - rel[1] * d[0]) / -denom
        if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= v <= 1 + 1e-12:
            return [(min(max(t, 0.0), 1.0), min(max(v, 0.0), 1.0) * self.length)]
        return []

    def ray_hits(self, x, d):
        x = np.asarray(x, dtype=float)
        d = np.asarray(d, dtype=float)
        e = self.p1 - self.p0
        denom = d[0] * e[1] - d[1] * e[0]
        if abs(denom) < 1e-15:
            return []
        rel = self.p0 - x
        t = (rel[0] * e[1] - rel[1] * e[0]) / denom
        v = (rel[0] * d[1] - rel[1] * d[0]) / denom
        if t > 0 and -1e-12 <= v <= 1 + 1e-12:
            return [t]
        return []


class EllipsePiece:
    """Full ellipse as a single arc-length parametrized piece.

    The naive angle parametrization is not arc length, so construction
    builds a dense cumulative-length table (1e5 nodes), inverts it with a
    monotone cubic interpolant, and sharpens each query with two Newton
    steps on the exact speed.  The semiaxes are given after any perimeter
    normalization; ``rotation`` and ``center`` place the ellipse rigidly.
    """

    _TABLE_N = 100_000

    def __init__(self, a: float, b: float, rotation: float = 0.0, center=(0.0, 0.0)):
        if a <= 0 or b <= 0:
            raise ValueError("semiaxes must be positive")
        self.a = float(a)
        self.b = float(b)
        self.rotation = float(rotation)
        self.center = _as_xy(center)
        self._R = _rot(self.rotation)
        theta = np.linspace(0.0, _TWO_PI, self._TABLE_N + 1)
        speed = np.hypot(self.a * np.sin(theta), self.b * np.cos(theta))
        cum = np.concatenate([[0.0], np.cumsum((speed[1:] + speed[:-1]) * 0.5 * np.diff(theta))])
        self.length = float(cum[-1])
        self._theta_of_s = PchipInterpolator(cum, theta)

    def _theta(self, u):
        u = np.clip(np.asarray(u, dtype=float), 0.0, self.length)
        th = np.asarray(self._theta_of_s(u), dtype=float)
        # Newton refinement on ds/dtheta = speed(theta)
        for _ in range(3):
            speed = np.hypot(self.a * np.sin(th), self.b * np.cos(th))
            resid = self._arclen(th) - u
            th = th - resid / speed
        return th

    def _arclen(self, theta):
        """Exact-enough arclength of [0, theta] by per-query Gauss on the table grid."""
        # the pchip table is only ~1e-13 off after Newton; evaluate via the
        # inverse relation instead of re-integrating: use high-res interpolation
        theta = np.asarray(theta, dtype=float)
        return self._s_of_theta(theta)

    @property
    def _s_of_theta(self):
        interp = getattr(self, "_s_interp", None)
        if interp is None:
            th = np.linspace(0.0, _TWO_PI, self._TABLE_N + 1)
            speed = np.hypot(self.a * np.sin(th), self.b * np.cos(th))
            cum = np.concatenate([[0.0], np.cumsum((speed[1:] + speed[:-1]) * 0.5 * np.diff(th))])
            interp = CubicSpline(th, cum)
            self._s_interp = interp
        return interp

    def point(self, u):
        th = self._theta(u)
        local = np.stack([self.a * np.cos(th), self.b * np.sin(th)], axis=-1)
        return self.center + local @ self._R.T

    def tangent(self, u):
        th = self._theta(u)
        v = np.stack([-self.a * np.sin(th), self.b * np.cos(th)], axis=-1)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return v @ self._R.T

    def curvature(self, u):
        th = self._theta(u)
        denom = (self.a**2 * np.sin(th) ** 2 + self.b**2 * np.cos(th) ** 2) ** 1.5
        return self.a * self.b / denom

    def _to_local(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts - self.center) @ self._R

    def implicit(self, pts):
        """(x/a)^2 + (y/b)^2 - 1 in the ellipse frame; negative inside."""
        loc = self._to_local(pts)
        return (loc[:, 0] / self.a) ** 2 + (loc[:, 1] / self.b) ** 2 - 1.0

    @property
    def _dense(self):
        cache = getattr(self, "_dense_cache", None)
        if cache is None:
            th = np.linspace(0.0, _TWO_PI, 4096, endpoint=False)
            cache = (th, np.column_stack([self.a * np.cos(th), self.b * np.sin(th)]))
            self._dense_cache = cache
        return cache

    def nearest_dist(self, pts):
        loc = self._to_local(pts)
        th_grid, dense = self._dense
        d2 = ((loc[:, None, :] - dense[None, :, :]) ** 2).sum(-1)
        idx = np.argmin(d2, axis=1)
        h = th_grid[1] - th_grid[0]
        out = np.empty(len(loc))
        for i, j in enumerate(idx):
            px, py = loc[i]

            def f(th):
                return (self.a * math.cos(th) - px) ** 2 + (self.b * math.sin(th) - py) ** 2

            out[i] = math.sqrt(_golden_min(f, th_grid[j] - h, th_grid[j] + h))
        return out

    def _seg_roots(self, p, q):
        """Roots u in [0,1] of the implicit conic along p + u (q - p)."""
        p = self._to_local(p)[0]
        q = self._to_local(q)[0]
        d = q - p
        A = (d[0] / self.a) ** 2 + (d[1] / self.b) ** 2
        B = 2 * (p[0] * d[0] / self.a**2 + p[1] * d[1] / self.b**2)
        C = (p[0] / self.a) ** 2 + (p[1] / self.b) ** 2 - 1.0
        if A == 0:
            return []
        disc = B * B - 4 * A * C
        if disc < 0:
            return []
        sq = math.sqrt(disc)
        return [t for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)) if -1e-12 <= t <= 1 + 1e-12]

    def segment_hits(self, p, q):
        out = []
        pl = np.asarray(p, dtype=float)
        ql = np.asarray(q, dtype=float)
        for t in self._seg_roots(p, q):
            x = pl + t * (ql - pl)
            loc = self._to_local(x)[0]
            th = math.atan2(loc[1] / self.b, loc[0] / self.a) % _TWO_PI
            out.append((min(max(t, 0.0), 1.0), float(self._s_of_theta(th))))
        return out

    def ray_hits(self, x, d):
        p = self._to_local(x)[0]
        dd = np.asarray(d, dtype=float) @ self._R
        A = (dd[0] / self.a) ** 2 + (dd[1] / self.b) ** 2
        B = 2 * (p[0] * dd[0] / self.a**2 + p[1] * dd[1] / self.b**2)
        C = (p[0] / self.a) ** 2 + (p[1] / self.b) ** 2 - 1.0
        disc = B * B - 4 * A * C
        if A == 0 or disc < 0:
            return []
        sq = math.sqrt(disc)
        return [t for t in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)) if t > 0]


class SplinePiece:
    """Closed C^2 periodic cubic spline through sample points.

    The raw samples are resampled to uniform arc length before the final
    periodic fit, so the parametrization is arc length up to the spline's
    own interpolation error (about 1e-6 with the default resampling).
    """

    _RESAMPLE = 4096

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
            raise ValueError("need at least 8 sample points of shape (k, 2)")
        if np.hypot(*(pts[0] - pts[-1])) < 1e-12:
            pts = pts[:-1]
        k = len(pts)
        t = np.arange(k + 1, dtype=float)
        closed = np.vstack([pts, pts[:1]])
        raw = CubicSpline(t, closed, bc_type="periodic", axis=0)
        dense_t = np.linspace(0.0, k, 200_000 + 1)
        dv = raw(dense_t, 1)
        speed = np.hypot(dv[:, 0], dv[:, 1])
        cum = np.concatenate([[0.0], np.cumsum((speed[1:] + speed[:-1]) * 0.5 * np.diff(dense_t))])
        raw_len = cum[-1]
        t_of_s = PchipInterpolator(cum, dense_t)
        s_new = np.linspace(0.0, raw_len, self._RESAMPLE + 1)
        resampled = raw(t_of_s(s_new))
        resampled[-1] = resampled[0]  # close exactly; eval roundoff breaks bc_type="periodic"
        self.length = raw_len
        self._spline = CubicSpline(s_new, resampled, bc_type="periodic", axis=0)
        # dense polyline cache for containment and intersection bracketing
        self._poly_s = np.linspace(0.0, self.length, 8192 + 1)
        self._poly = self._spline(self._poly_s)

    def point(self, u):
        u = np.mod(np.asarray(u, dtype=float), self.length)
        return np.asarray(self._spline(u), dtype=float)

    def tangent(self, u):
        u = np.mod(np.asarray(u, dtype=float), self.length)
        v = np.asarray(self._spline(u, 1), dtype=float)
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    def curvature(self, u):
        u = np.mod(np.asarray(u, dtype=float), self.length)
        d1 = np.asarray(self._spline(u, 1), dtype=float)
        d2 = np.asarray(self._spline(u, 2), dtype=float)
        speed = np.linalg.norm(d1, axis=-1)
        return (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]) / speed**3

    def nearest_dist(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        # coarse nearest polyline node, then golden refine on |g(s) - p|^2
        d2 = ((pts[:, None, :] - self._poly[None, :, :]) ** 2).sum(-1)
        idx = np.argmin(d2, axis=1)
        out = np.empty(len(pts))
        h = self._poly_s[1] - self._poly_s[0]
        for i, j in enumerate(idx):
            p = pts[i]

            def f(s):
                v = self.point(s) - p
                return float(v[0] ** 2 + v[1] ** 2)

            out[i] = math.sqrt(_golden_min(f, self._poly_s[j] - h, self._poly_s[j] + h))
        return out

    def _crossings(self, p, d, tmax):
        """Parameters (t, u) where p + t d crosses the spline, 0 < t <= tmax."""
        # sign changes of the cross product along the cached polyline
        rel = self._poly - np.asarray(p, dtype=float)
        cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
        hits = []
        sgn = np.sign(cross)
        flips = np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]
        for j in flips:
            s_lo, s_hi = self._poly_s[j], self._poly_s[j + 1]

            def fn(s):
                v = self.point(s) - p
                return float(v[0] * d[1] - v[1] * d[0])
            try:
                s_star = brentq(fn, s_lo, s_hi, xtol=1e-13)
            except ValueError:
                continue
            x = self.point(s_star)
            t = float((x - p) @ d) / float(d @ d)
            if 1e-12 < t <= tmax:
                hits.append((t, s_star % self.length))
        return hits

    def segment_hits(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        d = q - p
        return [(t, u) for t, u in self._crossings(p, d, 1.0 + 1e-12)]

    def ray_hits(self, x, d):
        return [t for t, _ in self._crossings(np.asarray(x, float), np.asarray(d, float), math.inf)]

    def winding_inside(self, pts):
        """Even-odd containment against the dense polyline."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        poly = self._poly[:-1]
        x0, y0 = poly[:, 0], poly[:, 1]
        x1 = np.roll(x0, -1)
        y1 = np.roll(y0, -1)
        px = pts[:, 0][:, None]
        py = pts[:, 1][:, None]
        cond = (y0[None, :] > py) != (y1[None, :] > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_int = x0[None, :] + (py - y0[None, :]) * (x1 - x0)[None, :] / (y1 - y0)[None, :]
        crosses = cond & (px < x_int)
        return (crosses.sum(axis=1) % 2) == 1
