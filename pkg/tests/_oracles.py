"""Brute-force reference computations kept independent of the package's
optimizers.  Only elementary numpy is used; geometry (points, tangents)
is passed in by the caller."""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def brute_defect(X, T, x0, R, nr=201, ntheta=201):
    """Exhaustive defect maximization on a polar z0 grid times 8 sign choices.

    X, T: (3, 2) triple points and unit tangents; z0 ranges over the closed
    disk of radius R/2 about x0 including the rim exactly.
    """
    X = np.asarray(X, float)
    T = np.asarray(T, float)
    x0 = np.asarray(x0, float)
    r = np.linspace(0.0, R / 2.0, nr)
    th = np.linspace(0.0, TWO_PI, ntheta, endpoint=False)
    RR, TH = np.meshgrid(r, th)
    Z = x0 + np.column_stack([(RR * np.cos(TH)).ravel(),
                              (RR * np.sin(TH)).ravel()])

    V = Z[:, None, :] - X[None, :, :]
    nrm = np.sqrt((V * V).sum(-1))
    U = V / nrm[..., None]
    dot = (T[None, :, :] * U).sum(-1)           # (G, 3)
    ang = np.arctan2(U[..., 1], U[..., 0])      # (G, 3)

    best = -np.inf
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            for s3 in (1.0, -1.0):
                sg = np.array([s1, s2, s3])
                margin = np.min(-sg[None, :] * dot, axis=1)
                a = np.sort(np.mod(ang + np.where(sg > 0, 0.0, math.pi), TWO_PI), axis=1)
                gap = np.maximum(np.maximum(a[:, 1] - a[:, 0], a[:, 2] - a[:, 1]),
                                 TWO_PI - (a[:, 2] - a[:, 0]))
                excess = np.maximum(TWO_PI - gap - math.pi, 0.0)
                best = max(best, float(np.max(np.minimum(margin, excess))))
    return max(best, 0.0)


def brute_objective_at(X, T, z0):
    """Defect objective at a single z0 (max over the 8 sign choices)."""
    return brute_defect(X, T, np.asarray(z0, float), 0.0, nr=1, ntheta=1)
