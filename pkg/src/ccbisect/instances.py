"""Seeded instance generators and a few hand-built instances with known structure."""

from __future__ import annotations

import math

import numpy as np

from .measures import Measure, MeasureSet


def random_instance(seed: int, d: int = 2, blobs: int = 3, spread: float = 1.0) -> MeasureSet:
    """d + 1 measures, each a mixture of ``blobs`` box kernels.

    Centres are uniform in [-spread, spread]^d, half-widths uniform in
    [0.05, 0.3] * spread and weights uniform in [0.5, 1.5].
    """
    rng = np.random.default_rng(seed)
    ms = []
    for _ in range(d + 1):
        c = rng.uniform(-spread, spread, (blobs, d))
        w = rng.uniform(0.5, 1.5, blobs)
        r = rng.uniform(0.05, 0.3, blobs) * spread
        ms.append(Measure(c, w, r))
    return MeasureSet(tuple(ms))


def symmetric_instance(seed: int, d: int = 2, blobs: int = 2, spread: float = 1.0) -> MeasureSet:
    """A centrally symmetric mu_0 and its quarter turns as mu_1..mu_d.

    Any copy of a disk, ball, square or cube centred at the origin (unrotated)
    is invariant under the quarter turns, so it holds the same fraction of
    every measure: the centred bisector of mu_0 bisects them all.
    """
    m = random_instance(seed, d, blobs, spread)[0]
    c = np.concatenate([m.centers, -m.centers])
    w = np.concatenate([m.weights, m.weights])
    r = np.concatenate([m.radii, m.radii])
    ms = [Measure(c, w, r)]
    for i in range(d):
        turn = np.eye(d)
        j = (i + 1) % d
        turn[[i, i, j, j], [i, j, i, j]] = [0.0, -1.0, 1.0, 0.0]
        ms.append(Measure(c @ turn.T, w, r))
    return MeasureSet(tuple(ms))


def diagonal_instance(radius: float = 0.1) -> MeasureSet:
    """Three small blobs on the line x = y; no axis-parallel square bisects all three."""
    pts = [(-1.0, -1.0), (0.0, 0.0), (1.0, 1.0)]
    return MeasureSet(tuple(Measure(np.array([p]), np.array([1.0]), np.array([radius])) for p in pts))


def gap_instance():
    """Pinning measure with a radial gap, so the bisecting disk radii form an interval.

    A unit-mass box [-1/2, 1/2]^2 sits at the origin and four boxes of total mass
    one sit at distance 3. A disk of radius s about the origin holds exactly half
    the mass for s in [sqrt(2)/2, 5/2]. Returns (measure, (s_lo, s_hi)).
    """
    centers = np.array([[0.0, 0.0], [3.0, 0.0], [-3.0, 0.0], [0.0, 3.0], [0.0, -3.0]])
    weights = np.array([1.0, 0.25, 0.25, 0.25, 0.25])
    radii = np.array([0.5, 0.5, 0.5, 0.5, 0.5])
    return Measure(centers, weights, radii), (math.sqrt(2) / 2, 2.5)
