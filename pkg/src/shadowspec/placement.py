"""Transmitter configurations on a disc and the geometry statistics the bounds consume."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateConfigurationError, ParameterDomainError

__all__ = [
    "PlacementKind",
    "PointConfig",
    "GeometryStats",
    "hex_lattice_constant",
    "gen_hex_grid",
    "gen_poisson",
    "gen_hardcore_matern2",
    "matern2_intensity",
    "explicit_config",
    "load_points",
    "geometry_stats",
    "annulus_counts",
]


class PlacementKind(str, enum.Enum):
    HEX = "hex"
    POISSON = "poisson"
    HARDCORE = "hardcore"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class PointConfig:
    """A finite transmitter configuration inside the closed disc of radius ``disc_radius``.

    Attributes
    ----------
    points : ndarray, shape (n, 2)
        Coordinates in km; none at the origin.
    disc_radius : float
        Radius ``C`` of the disc (km).
    kind : PlacementKind
    intensity : float
        Target intensity in km^-2 (for Matérn II the thinned intensity).
    eps_star : float or None
        Hard-core distance, only for ``HARDCORE``.
    """

    points: np.ndarray
    disc_radius: float
    kind: PlacementKind
    intensity: float
    eps_star: float | None = None
    norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "kind", PlacementKind(self.kind))
        norms = np.hypot(pts[:, 0], pts[:, 1])
        norms.setflags(write=False)
        object.__setattr__(self, "norms", norms)
        if np.any(norms == 0):
            raise DegenerateConfigurationError("configuration contains the origin")

    def __len__(self):
        return len(self.points)

    @property
    def realized_intensity(self) -> float:
        return len(self.points) / (math.pi * self.disc_radius**2)

    def sorted_by_norm(self) -> "PointConfig":
        """Same configuration with points ordered by distance to the origin."""
        order = np.argsort(self.norms, kind="stable")
        return PointConfig(self.points[order], self.disc_radius, self.kind, self.intensity, self.eps_star)

    def restrict(self, radius: float) -> "PointConfig":
        """Points within the closed disc of the given radius."""
        keep = self.norms <= radius
        return PointConfig(self.points[keep], min(radius, self.disc_radius), self.kind,
                           self.intensity, self.eps_star)


@dataclass(frozen=True)
class GeometryStats:
    d_star: float
    eps_min: float
    T_lower: int
    T_upper: int
    R: float


def _check_positive(**kw):
    for name, val in kw.items():
        if not (val > 0 and math.isfinite(val)):
            raise ParameterDomainError(f"{name} must be positive and finite, got {val}")


def hex_lattice_constant(kappa: float) -> float:
    """Nearest-neighbour spacing of the hexagonal lattice with cell area ``1/kappa``."""
    _check_positive(kappa=kappa)
    return math.sqrt(2.0 / (math.sqrt(3.0) * kappa))


def gen_hex_grid(kappa: float, C: float) -> PointConfig:
    """Centres of a hexagonal tiling with cell area ``1/kappa``, clipped to the disc.

    The lattice is shifted so the origin sits at the centroid of a lattice
    triangle, the point farthest from every transmitter; the nearest
    transmitter is then at distance ``a / sqrt(3)``.
    """
    _check_positive(kappa=kappa, C=C)
    a = hex_lattice_constant(kappa)
    shift = np.array([a / 2.0, a * math.sqrt(3.0) / 6.0])
    nj = int(math.ceil(C / (a * math.sqrt(3.0) / 2.0))) + 2
    ni = int(math.ceil(C / a)) + nj + 2
    i, j = np.meshgrid(np.arange(-ni, ni + 1), np.arange(-nj, nj + 1), indexing="ij")
    x = a * (i + 0.5 * j) - shift[0]
    y = a * (math.sqrt(3.0) / 2.0) * j - shift[1]
    pts = np.column_stack([x.ravel(), y.ravel()])
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= C]
    order = np.lexsort((pts[:, 0], pts[:, 1], np.hypot(pts[:, 0], pts[:, 1])))
    return PointConfig(pts[order], C, PlacementKind.HEX, kappa)


def _uniform_disc(n: int, C: float, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(n)
    # resample exact zeros so no point lands on the origin
    while np.any(u == 0):
        bad = u == 0
        u[bad] = rng.random(int(bad.sum()))
    r = C * np.sqrt(u)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def gen_poisson(kappa: float, C: float, rng: np.random.Generator) -> PointConfig:
    """Homogeneous Poisson process of intensity ``kappa`` on the disc of radius ``C``."""
    _check_positive(kappa=kappa, C=C)
    n = int(rng.poisson(kappa * math.pi * C * C))
    return PointConfig(_uniform_disc(n, C, rng), C, PlacementKind.POISSON, kappa)


def matern2_intensity(kappa_parent: float, eps_star: float) -> float:
    """Intensity of Matérn type-II thinning: ``(1 - exp(-k pi e^2)) / (pi e^2)``."""
    area = math.pi * eps_star * eps_star
    return -math.expm1(-kappa_parent * area) / area


def gen_hardcore_matern2(
    kappa_parent: float, eps_star: float, C: float, rng: np.random.Generator
) -> PointConfig:
    """Matérn type-II hard-core process on the disc of radius ``C``.

    Parents are drawn on the enlarged disc of radius ``C + eps_star`` so
    that points near the boundary see all their competitors. A parent is
    kept when its uniform mark is the smallest among parents within
    ``eps_star``; the survivors are then restricted to the disc.
    """
    _check_positive(kappa_parent=kappa_parent, eps_star=eps_star, C=C)
    outer = C + eps_star
    n = int(rng.poisson(kappa_parent * math.pi * outer * outer))
    pts = _uniform_disc(n, outer, rng)
    marks = rng.random(n)
    keep = np.ones(n, dtype=bool)
    if n > 1:
        pairs = cKDTree(pts).query_pairs(eps_star, output_type="ndarray")
        if len(pairs):
            i, j = pairs[:, 0], pairs[:, 1]
            # the younger parent (larger mark, then larger index) loses
            younger_is_i = (marks[i] > marks[j]) | ((marks[i] == marks[j]) & (i > j))
            keep[np.where(younger_is_i, i, j)] = False
    pts = pts[keep]
    pts = pts[np.hypot(pts[:, 0], pts[:, 1]) <= C]
    return PointConfig(pts, C, PlacementKind.HARDCORE, matern2_intensity(kappa_parent, eps_star), eps_star)


def explicit_config(points, C: float | None = None, kappa: float | None = None) -> PointConfig:
    """Wrap user-supplied points; ``C`` defaults to the largest norm."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    norms = np.hypot(pts[:, 0], pts[:, 1])
    if C is None:
        C = float(norms.max()) if len(pts) else 1.0
    if np.any(norms > C):
        raise ParameterDomainError("explicit points lie outside the disc of radius C")
    if kappa is None:
        kappa = len(pts) / (math.pi * C * C)
    return PointConfig(pts, C, PlacementKind.EXPLICIT, kappa)


def load_points(path, C: float | None = None, kappa: float | None = None) -> PointConfig:
    """Read a point file: two coordinates (km) per line, '#' starts a comment."""
    pts = np.loadtxt(path, comments="#", ndmin=2, dtype=float)
    if pts.size and pts.shape[1] != 2:
        raise ParameterDomainError(f"{path}: expected two columns, got {pts.shape[1]}")
    return explicit_config(pts.reshape(-1, 2), C, kappa)


def geometry_stats(config: PointConfig, R: float) -> GeometryStats:
    """Minimum norm, minimum spacing and the bracket on ``T_C(R)``.

    ``T_lower`` counts the fullest closed R-ball centred at a transmitter,
    ``T_upper`` the fullest closed 2R-ball centred at a transmitter. Any
    R-ball containing a transmitter ``p`` lies inside the 2R-ball at ``p``.
    """
    _check_positive(R=R)
    pts = config.points
    if len(pts) == 0:
        raise DegenerateConfigurationError("geometry statistics need at least one point")
    d_star = float(config.norms.min())
    tree = cKDTree(pts)
    if len(pts) > 1:
        dist, _ = tree.query(pts, k=2)
        eps_min = float(dist[:, 1].min())
        if eps_min == 0:
            raise DegenerateConfigurationError("configuration contains coincident points")
    else:
        eps_min = math.inf
    t_lo = int(np.max(tree.query_ball_point(pts, R, return_length=True)))
    t_hi = int(np.max(tree.query_ball_point(pts, 2.0 * R, return_length=True)))
    return GeometryStats(d_star, eps_min, t_lo, t_hi, float(R))


def annulus_counts(config: PointConfig, center, R: float) -> np.ndarray:
    """Counts in ``B_k = {R + (k-1) sqrt(3) R < |x - center| <= R + k sqrt(3) R}``.

    Entry ``k - 1`` holds the count of ``B_k``; annuli run until the disc
    is covered.
    """
    _check_positive(R=R)
    c = np.asarray(center, dtype=float).reshape(2)
    width = math.sqrt(3.0) * R
    reach = config.disc_radius + float(np.hypot(*c))
    n_ann = max(1, int(math.ceil((reach - R) / width)))
    dist = np.hypot(*(config.points - c).T)
    outside = dist[dist > R]
    k = np.ceil((outside - R) / width).astype(int)
    k = np.maximum(k, 1)
    # guard the floor/ceil boundary: a point at exactly R + k w belongs to B_k
    k = np.where(outside <= R + (k - 1) * width, k - 1, k)
    return np.bincount(k - 1, minlength=n_ann)[: max(n_ann, int(k.max()) if k.size else 0)]
