"""Label geometry for level-indexed magnetic lattices.

A label is a pair (r, gamma) of a non-negative level index and a point
gamma of the rectangular lattice alpha*Z x beta*Z.  The label metric is

    dist((r, g), (r', g')) = |r - r'| + alpha_star * |g - g'|_1,

with alpha_star = min(alpha, beta).  Everything downstream (overlap decay
certificates, interaction localization sums, light-cone checks) measures
distances with this metric, so the window enumeration and the geometric
functionals (m_eps sums, covering constants, set diameters) live here.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LatticeError",
    "LatticeParams",
    "Site",
    "Window",
    "build_window",
    "window_from_triples",
    "build_chain",
    "site_from_gamma",
    "distance",
    "m_epsilon",
    "dimension_constant",
    "set_geometry",
]


class LatticeError(ValueError):
    """Invalid lattice parameters or site data."""


@dataclass(frozen=True)
class LatticeParams:
    """Rectangular lattice spacings and window extent.

    Parameters
    ----------
    alpha, beta : float
        Positive lattice spacings along the two axes.
    radius : float
        Spatial window cutoff: a site (r, gamma) is kept when
        alpha_star * |gamma|_1 <= radius.  The window is therefore a
        metric ball in the spatial part and symmetric under gamma -> -gamma.
    level_max : int
        Highest level index included (0 keeps only the lowest level).
    nu : int or None
        Metric-space dimension used by covering constants; defaults to
        2 for a single level and 3 when several levels are present.
    """

    alpha: float
    beta: float
    radius: float
    level_max: int = 0
    nu: int | None = None

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise LatticeError(f"spacings must be positive, got alpha={self.alpha}, beta={self.beta}")
        if self.radius <= 0:
            raise LatticeError(f"window radius must be positive, got {self.radius}")
        if self.level_max < 0 or int(self.level_max) != self.level_max:
            raise LatticeError(f"level_max must be a non-negative integer, got {self.level_max}")

    @property
    def alpha_star(self) -> float:
        return min(self.alpha, self.beta)

    @property
    def dim(self) -> int:
        """Effective metric dimension: spatial axes plus the level axis if present."""
        if self.nu is not None:
            return self.nu
        return 2 if self.level_max == 0 else 3


@dataclass(frozen=True)
class Site:
    """One window label: level index r and lattice indices (i, j).

    The spatial point is gamma = (i * alpha, j * beta); sites serialize as
    the integer triple [r, i, j].
    """

    r: int
    i: int
    j: int

    def gamma(self, params: LatticeParams) -> tuple[float, float]:
        return (self.i * params.alpha, self.j * params.beta)

    def triple(self) -> tuple[int, int, int]:
        return (self.r, self.i, self.j)


def site_from_gamma(r: int, gamma: tuple[float, float], params: LatticeParams) -> Site:
    """Recover lattice indices from a spatial point, enforcing commensurability."""
    i = round(gamma[0] / params.alpha)
    j = round(gamma[1] / params.beta)
    for label, want, got in (("gamma_1", gamma[0], i * params.alpha), ("gamma_2", gamma[1], j * params.beta)):
        scale = max(1.0, abs(want))
        if abs(want - got) > 1e-12 * scale:
            raise LatticeError(f"{label}={want} is not a lattice multiple (nearest {got})")
    return Site(r, i, j)


@dataclass(frozen=True)
class Window:
    """Finite label window with cached coordinate arrays.

    Sites are ordered lexicographically by (r, i, j); the order is the
    contract for every matrix indexed by window sites.
    """

    params: LatticeParams
    sites: tuple[Site, ...]
    levels: np.ndarray = field(repr=False)
    gxy: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.sites)

    def index(self, site: Site) -> int:
        try:
            return self.sites.index(site)
        except ValueError:
            raise LatticeError(f"site {site.triple()} not in window") from None

    def distance_matrix(self) -> np.ndarray:
        """All pairwise label distances, shape (n, n)."""
        a_star = self.params.alpha_star
        dl = np.abs(self.levels[:, None] - self.levels[None, :])
        dg = np.abs(self.gxy[:, None, :] - self.gxy[None, :, :]).sum(axis=2)
        return dl + a_star * dg

    def center_index(self) -> int:
        """Index of the site at the origin of the lowest level."""
        return self.index(Site(0, 0, 0))

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.params.alpha!r},{self.params.beta!r},{self.params.level_max}".encode())
        for s in self.sites:
            h.update(f"{s.r},{s.i},{s.j};".encode())
        return h.hexdigest()[:16]

    def is_subwindow_of(self, other: "Window") -> bool:
        if self.params.alpha != other.params.alpha or self.params.beta != other.params.beta:
            return False
        return set(self.sites) <= set(other.sites)


def build_window(params: LatticeParams) -> Window:
    """Enumerate the window for the given parameters.

    Returns the sites (r, i, j) with r <= level_max and
    alpha_star * (|i*alpha| + |j*beta|) <= radius, in lexicographic order.
    """
    a_star = params.alpha_star
    imax = int(np.floor(params.radius / (a_star * params.alpha)))
    jmax = int(np.floor(params.radius / (a_star * params.beta)))
    sites: list[Site] = []
    for r in range(params.level_max + 1):
        for i in range(-imax, imax + 1):
            for j in range(-jmax, jmax + 1):
                l1 = abs(i) * params.alpha + abs(j) * params.beta
                if a_star * l1 <= params.radius * (1 + 1e-12):
                    sites.append(Site(r, i, j))
    if not sites:
        raise LatticeError("window is empty; radius too small for the given spacings")
    sites.sort(key=lambda s: (s.r, s.i, s.j))
    levels = np.array([s.r for s in sites], dtype=np.int64)
    gxy = np.array([s.gamma(params) for s in sites], dtype=np.float64)
    return Window(params=params, sites=tuple(sites), levels=levels, gxy=gxy)


def window_from_triples(params: LatticeParams, triples) -> Window:
    """Window over an explicit site list given as (r, i, j) triples.

    Sites are deduplicated and put into the canonical lexicographic order;
    every site must respect level_max and fit inside the window radius.
    """
    seen = sorted({(int(r), int(i), int(j)) for r, i, j in triples})
    if not seen:
        raise LatticeError("window needs at least one site")
    a_star = params.alpha_star
    sites = []
    for r, i, j in seen:
        if r < 0 or r > params.level_max:
            raise LatticeError(f"site level {r} outside 0..{params.level_max}")
        l1 = abs(i) * params.alpha + abs(j) * params.beta
        if a_star * l1 > params.radius * (1 + 1e-12):
            raise LatticeError(f"site ({r},{i},{j}) outside the window radius {params.radius}")
        sites.append(Site(r, i, j))
    levels = np.array([s.r for s in sites], dtype=np.int64)
    gxy = np.array([s.gamma(params) for s in sites], dtype=np.float64)
    return Window(params=params, sites=tuple(sites), levels=levels, gxy=gxy)


def build_chain(params: LatticeParams, length: int) -> Window:
    """A one-dimensional window: `length` consecutive sites along the i-axis
    on the lowest level, containing the origin and as centered as parity
    allows; chains built with growing lengths are nested."""
    if length < 1:
        raise LatticeError(f"chain length must be positive, got {length}")
    lo = -(length - 1) // 2
    return window_from_triples(params, [(0, lo + k, 0) for k in range(length)])


def distance(p: Site, q: Site, params: LatticeParams) -> float:
    """Label metric |r - r'| + alpha_star * |gamma - gamma'|_1."""
    dg = abs(p.i - q.i) * params.alpha + abs(p.j - q.j) * params.beta
    return abs(p.r - q.r) + params.alpha_star * dg


def m_epsilon(window: Window, eps: float) -> tuple[float, float]:
    """Exponential localization sum and its closed-form dominator.

    Returns
    -------
    estimate : float
        max over window sites gamma of sum_xi exp(-eps * dist(gamma, xi)),
        a lower approximation of the supremum over the infinite lattice.
    bound : float
        (2 / (1 - exp(-eps * alpha_star**2)))**2, times the level factor
        (1 + exp(-eps)) / (1 - exp(-eps)) when more than one level is
        present.  Dominates the estimate for every window.
    """
    if eps <= 0:
        raise LatticeError(f"eps must be positive, got {eps}")
    d = window.distance_matrix()
    estimate = float(np.exp(-eps * d).sum(axis=1).max())
    a2 = window.params.alpha_star ** 2
    bound = (2.0 / (1.0 - np.exp(-eps * a2))) ** 2
    if window.params.level_max > 0:
        bound *= (1.0 + np.exp(-eps)) / (1.0 - np.exp(-eps))
    return estimate, float(bound)


def dimension_constant(window: Window, nu: int | None = None) -> float:
    """Measured covering constant kappa with |ball(gamma, rho)| <= kappa * rho**nu.

    Scans every window site and every distinct pairwise distance rho > 0 up
    to the window diameter, returning the largest count / rho**nu ratio.
    """
    if nu is None:
        nu = window.params.dim
    d = window.distance_matrix()
    radii = np.unique(d[d > 0])
    if radii.size == 0:
        raise LatticeError("window has fewer than two sites")
    kappa = 0.0
    for rho in radii:
        counts = (d <= rho * (1 + 1e-12)).sum(axis=1)
        kappa = max(kappa, counts.max() / rho ** nu)
    return float(kappa)


def set_geometry(z: list[Site], zp: list[Site], params: LatticeParams) -> tuple[float, float, float]:
    """Diameter of z, distance between z and zp, and the volume weight D(z).

    D(z) = (1 + diam z)**nu with nu the metric dimension of the lattice.
    """
    if not z or not zp:
        raise LatticeError("set_geometry requires non-empty site sets")
    diam = max(distance(a, b, params) for a in z for b in z)
    dist_zzp = min(distance(a, b, params) for a in z for b in zp)
    d_z = (1.0 + diam) ** params.dim
    return diam, dist_zzp, d_z
