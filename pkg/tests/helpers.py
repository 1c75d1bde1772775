"""Shared generators for tests."""

import numpy as np


def separated_points(rng, n, eps, box=None, max_tries=20000):
    """Dart throwing: up to ``n`` points in a square, pairwise distance at least ``eps``."""
    box = box if box is not None else eps * np.sqrt(n) * 2.0
    pts = []
    for _ in range(max_tries):
        if len(pts) == n:
            break
        p = rng.uniform(-box / 2, box / 2, 2)
        if all(np.hypot(*(p - q)) >= eps for q in pts):
            pts.append(p)
    return np.array(pts)


def grid10():
    """10 x 10 unit grid with the origin at the centre of a cell."""
    i = np.arange(-5, 5) + 0.5
    xx, yy = np.meshgrid(i, i)
    return np.column_stack([xx.ravel(), yy.ravel()])
