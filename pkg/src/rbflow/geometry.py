"""Airfoil O-mesh and the radius-dependent rotation of the flow domain.

The computational domain is an annular region between a symmetric airfoil
and an outer circle.  Changing the angle of attack rotates the airfoil
rigidly while leaving the outer boundary fixed; in between, the domain
follows a radius-dependent rotation angle that blends smoothly from full
rotation (inside ``r_min``) to none (outside ``r_max``).  This module builds
the mesh, the smooth spline parametrization used for integration, and all
pointwise matrices needed to expand the rotation Jacobian in powers of the
angle parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, OutOfDomainError
from .splines import (BSplineBasis, PeriodicCurve,
                      clamped_quadratic_interpolation_coeffs)

__all__ = [
    "AirfoilProfile", "naca_profile", "OMesh", "build_omesh", "blend_weight",
    "RotationProfile", "DeformedGeometry", "JacobianFactors",
    "AIRFOIL", "INFLOW", "OUTFLOW",
]

AIRFOIL = "AIRFOIL"
INFLOW = "INFLOW"
OUTFLOW = "OUTFLOW"

# 90-degree rotation; squares to -I, generates the rotation group algebra.
ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


# ---------------------------------------------------------------------------
# airfoil profile


def _naca_halfthickness(x: np.ndarray, t: float) -> np.ndarray:
    # closed trailing edge variant (last coefficient -0.1036)
    return 5.0 * t * (0.2969 * np.sqrt(x) - 0.1260 * x - 0.3516 * x**2
                      + 0.2843 * x**3 - 0.1036 * x**4)


@dataclass(frozen=True)
class AirfoilProfile:
    """Closed polyline around a symmetric airfoil, mid-chord at the origin."""

    points: np.ndarray          # (n+1, 2), first point repeated at the end
    chord: float
    thickness_ratio: float

    def __post_init__(self):
        pts = self.points
        if not np.allclose(pts[0], pts[-1]):
            raise MeshError("profile polyline is not closed")
        if _polyline_self_intersects(pts):
            raise MeshError("profile polyline self-intersects")
        thickness = 2.0 * np.abs(pts[:, 1]).max()
        if abs(thickness / self.chord - self.thickness_ratio) > 0.01 * self.thickness_ratio:
            raise MeshError("sampled max thickness deviates from the nominal "
                            f"ratio: {thickness / self.chord:.5f} vs {self.thickness_ratio}")
        if np.hypot(pts[:, 0], pts[:, 1]).max() >= 1.0:
            raise MeshError("profile does not fit inside the unit disk")


def _polyline_self_intersects(pts: np.ndarray) -> bool:
    # brute force is fine at the sizes used here
    segs = np.stack([pts[:-1], pts[1:]], axis=1)
    n = segs.shape[0]
    for i in range(n):
        a, b = segs[i]
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue  # closing segment shares a vertex with the first
            c, d = segs[j]
            if _segments_cross(a, b, c, d):
                return True
    return False


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    return (o1 * o2 < 0) and (o3 * o4 < 0)


def naca_profile(thickness_ratio: float, n_points: int) -> AirfoilProfile:
    """Symmetric 4-digit airfoil, cosine-clustered, mid-chord at the origin.

    The polyline starts at the trailing edge and walks counterclockwise over
    the upper surface; ``n_points`` counts the distinct vertices, so the
    returned array has ``n_points + 1`` rows with the first repeated.
    """
    if not (0.0 < thickness_ratio < 0.5):
        raise ValueError("thickness ratio out of range")
    if n_points < 8 or n_points % 2:
        raise ValueError("need an even number of points, at least 8, "
                         "to resolve the leading edge")
    i = np.arange(n_points)
    x = 0.5 * (1.0 + np.cos(2.0 * np.pi * i / n_points))
    y = _naca_halfthickness(np.clip(x, 0.0, 1.0), thickness_ratio)
    y[i > n_points // 2] *= -1.0
    y[0] = 0.0
    pts = np.column_stack([x - 0.5, y])
    pts = np.vstack([pts, pts[:1]])
    return AirfoilProfile(points=pts, chord=1.0, thickness_ratio=thickness_ratio)


# ---------------------------------------------------------------------------
# O-mesh


def blend_weight(j, n_rad: int, alpha: float):
    """Airfoil weight of node row ``j``; row 0 is the outer circle, row
    ``n_rad`` the airfoil.  Rows follow ``(alpha^j - 1) / (alpha^n - 1)``."""
    gamma = n_rad * math.log(alpha)
    if gamma == 0.0:
        return np.asarray(j) / n_rad
    return (np.exp(gamma * np.asarray(j, dtype=float) / n_rad) - 1.0) \
        / (math.expm1(gamma))


@dataclass
class OMesh:
    """Structured annular mesh with a smooth spline parametrization.

    Parametric coordinates are ``(xi, eta)`` with ``xi in [0, n_circ]``
    periodic (counterclockwise) and ``eta in [0, n_rad]`` running from the
    outer circle to the airfoil.  ``nodes[i, j]`` is the blended node at
    ``(xi, eta) = (i, j)``.  The parametrization interpolates the two
    boundary node rows exactly and the interior rows to spline accuracy,
    and is C^1 in both directions, so Piola push-forwards of continuous
    parametric fields stay continuous across element interfaces.
    """

    nodes: np.ndarray               # (n_circ, n_rad + 1, 2)
    n_circ: int
    n_rad: int
    alpha: float
    outer_radius: float
    outer_tags: list                # per outer segment: INFLOW or OUTFLOW
    airfoil_curve: PeriodicCurve = field(repr=False)
    outer_curve: PeriodicCurve = field(repr=False)
    blend_coeffs: np.ndarray = field(repr=False)
    _blend_basis: BSplineBasis = field(repr=False, default=None)

    def __post_init__(self):
        if self._blend_basis is None:
            self._blend_basis = BSplineBasis(self.n_rad, 2, periodic=False)

    # -- geometry map -------------------------------------------------

    def _blend(self, eta: np.ndarray) -> np.ndarray:
        """Blend value and two derivatives at ``eta``; shape (n, 3)."""
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        out = np.zeros((eta.size, 3))
        spans = np.clip(eta.astype(int), 0, self.n_rad - 1)
        for k in range(eta.size):
            s = int(spans[k])
            vals = self._blend_basis.eval_span(s, np.array([eta[k] - s]), 2)[0]
            out[k] = vals @ self.blend_coeffs[self._blend_basis.span_funcs(s)]
        return out

    def map(self, xi, eta, n_ders: int = 1):
        """Physical position and derivatives of the parametrization.

        Returns ``(x, G)`` for ``n_ders == 1`` and ``(x, G, H)`` for
        ``n_ders == 2``, where ``G[..., :, k]`` is the derivative of the
        position along parametric direction ``k`` and ``H[..., :, k, l]``
        the second derivatives.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        A = self.airfoil_curve.eval(xi, n_ders)
        C = self.outer_curve.eval(xi, n_ders)
        w = self._blend(eta)
        x = w[:, 0, None] * A[:, 0] + (1.0 - w[:, 0, None]) * C[:, 0]
        G = np.zeros(xi.shape + (2, 2))
        G[..., 0] = w[:, 0, None] * A[:, 1] + (1.0 - w[:, 0, None]) * C[:, 1]
        G[..., 1] = w[:, 1, None] * (A[:, 0] - C[:, 0])
        if n_ders == 1:
            return x, G
        H = np.zeros(xi.shape + (2, 2, 2))
        H[..., 0, 0] = w[:, 0, None] * A[:, 2] + (1.0 - w[:, 0, None]) * C[:, 2]
        H[..., 0, 1] = w[:, 1, None] * (A[:, 1] - C[:, 1])
        H[..., 1, 0] = H[..., 0, 1]
        H[..., 1, 1] = w[:, 2, None] * (A[:, 0] - C[:, 0])
        return x, G, H

    def map_grid(self, xi: np.ndarray, eta: np.ndarray, n_ders: int = 2):
        """Tensor-grid version of :meth:`map`: curves are evaluated once per
        distinct parameter, results broadcast over the grid.

        Shapes: ``x (nxi, neta, 2)``, ``G (nxi, neta, 2, 2)`` and, for
        ``n_ders == 2``, ``H (nxi, neta, 2, 2, 2)``.
        """
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        A = self.airfoil_curve.eval(xi, 2)      # (nxi, 3, 2)
        C = self.outer_curve.eval(xi, 2)
        w = self._blend(eta)                    # (neta, 3)
        w0 = w[None, :, 0, None]
        x = w0 * A[:, None, 0] + (1.0 - w0) * C[:, None, 0]
        G = np.zeros((xi.size, eta.size, 2, 2))
        G[..., 0] = w0 * A[:, None, 1] + (1.0 - w0) * C[:, None, 1]
        G[..., 1] = w[None, :, 1, None] * (A[:, None, 0] - C[:, None, 0])
        if n_ders == 1:
            return x, G
        H = np.zeros((xi.size, eta.size, 2, 2, 2))
        H[..., 0, 0] = w0 * A[:, None, 2] + (1.0 - w0) * C[:, None, 2]
        H[..., 0, 1] = w[None, :, 1, None] * (A[:, None, 1] - C[:, None, 1])
        H[..., 1, 0] = H[..., 0, 1]
        H[..., 1, 1] = w[None, :, 2, None] * (A[:, None, 0] - C[:, None, 0])
        return x, G, H

    def inflow_spans(self) -> np.ndarray:
        """Outer-boundary segment indices tagged as inflow."""
        return np.array([i for i, t in enumerate(self.outer_tags) if t == INFLOW])

    def inflow_nodes(self) -> np.ndarray:
        """Outer-boundary node indices incident to an inflow segment."""
        spans = set(self.inflow_spans().tolist())
        nodes = sorted({i for s in spans for i in (s, (s + 1) % self.n_circ)})
        return np.array(nodes)

    def locate(self, points: np.ndarray, tol: float = 1e-11,
               max_iter: int = 40) -> np.ndarray:
        """Invert the parametrization for physical points in the annulus."""
        points = np.atleast_2d(points)
        out = np.zeros_like(points)
        flat_nodes = self.nodes.reshape(-1, 2)
        grid_i, grid_j = np.divmod(np.arange(flat_nodes.shape[0]), self.n_rad + 1)
        for k, p in enumerate(points):
            nearest = np.argmin(((flat_nodes - p) ** 2).sum(axis=1))
            xi, eta = float(grid_i[nearest]), float(grid_j[nearest])
            for _ in range(max_iter):
                x, G = self.map(np.array([xi]), np.array([eta]), 1)
                res = x[0] - p
                if np.hypot(*res) < tol:
                    break
                step = np.linalg.solve(G[0], res)
                xi -= step[0]
                eta = min(max(eta - step[1], 0.0), float(self.n_rad))
            else:
                raise OutOfDomainError(f"point {p} could not be located in the mesh")
            out[k] = (xi % self.n_circ, eta)
        return out

    # -- exports --------------------------------------------------------

    def element_corner_ids(self):
        """Corner node ids (i*(n_rad+1)+j) per element, counterclockwise."""
        nr = self.n_rad + 1
        ids = []
        for i in range(self.n_circ):
            inext = (i + 1) % self.n_circ
            for j in range(self.n_rad):
                ids.append((i * nr + j, inext * nr + j,
                            inext * nr + j + 1, i * nr + j + 1))
        return np.array(ids)

    def export_text(self) -> str:
        """Plain-text mesh dump: one node / element / boundary record per line."""
        lines = [f"omesh {self.n_circ} {self.n_rad} {self.alpha!r} {self.outer_radius!r}"]
        flat = self.nodes.reshape(-1, 2)
        for k, (x, y) in enumerate(flat):
            lines.append(f"node {k} {x!r} {y!r}")
        for e, corners in enumerate(self.element_corner_ids()):
            lines.append("elem " + str(e) + " " + " ".join(map(str, corners)))
        nr = self.n_rad + 1
        for i in range(self.n_circ):
            inext = (i + 1) % self.n_circ
            lines.append(f"bnd {self.outer_tags[i]} {i * nr} {inext * nr}")
            lines.append(f"bnd {AIRFOIL} {i * nr + self.n_rad} {inext * nr + self.n_rad}")
        return "\n".join(lines) + "\n"


def build_omesh(profile: AirfoilProfile, outer_radius: float, n_circ: int,
                n_rad: int, alpha: float) -> OMesh:
    """Blend airfoil and outer-circle nodes into a graded O-mesh.

    Node rows interpolate between the uniformly spaced circle nodes (row 0)
    and the airfoil vertices (row ``n_rad``) with exponentially graded
    weights, so consecutive radial extents differ by a factor ``alpha``.
    Fails if any element of the resulting parametrization is tangled.
    """
    if n_circ < 4 or n_rad < 4:
        raise ValueError("need at least 4 elements per direction")
    if alpha < 1.0:
        raise ValueError("grading factor must be >= 1")
    if profile.points.shape[0] - 1 != n_circ:
        profile = naca_profile(profile.thickness_ratio, n_circ)
    airfoil = profile.points[:-1]
    angles = 2.0 * np.pi * np.arange(n_circ) / n_circ
    circle = outer_radius * np.column_stack([np.cos(angles), np.sin(angles)])
    w = blend_weight(np.arange(n_rad + 1), n_rad, alpha)
    nodes = w[None, :, None] * airfoil[:, None, :] \
        + (1.0 - w[None, :, None]) * circle[:, None, :]

    mid = angles + np.pi / n_circ
    outer_tags = [INFLOW if np.cos(a) < 0.0 else OUTFLOW for a in mid]
    if not any(t == INFLOW for t in outer_tags):
        raise MeshError("no inflow segments tagged; Dirichlet boundary empty")

    mesh = OMesh(
        nodes=nodes, n_circ=n_circ, n_rad=n_rad, alpha=alpha,
        outer_radius=outer_radius, outer_tags=outer_tags,
        airfoil_curve=PeriodicCurve.interpolating(airfoil, 3),
        outer_curve=PeriodicCurve.interpolating(circle, 3),
        blend_coeffs=clamped_quadratic_interpolation_coeffs(
            lambda j: float(blend_weight(j, n_rad, alpha)), n_rad),
    )
    _check_jacobians(mesh)
    return mesh


def _check_jacobians(mesh: OMesh):
    # sample each element on a 4x4 grid; positive orientation required
    offs = np.array([0.03, 0.35, 0.65, 0.97])
    for i in range(mesh.n_circ):
        for j in range(mesh.n_rad):
            xi = (i + offs).repeat(4)
            eta = np.tile(j + offs, 4)
            _, G = mesh.map(xi, eta, 1)
            dets = np.linalg.det(G)
            if np.any(dets <= 0.0):
                raise MeshError(f"tangled element ({i}, {j}): "
                                f"min jacobian {dets.min():.3e}")


# ---------------------------------------------------------------------------
# rotation profile and deformation


@dataclass(frozen=True)
class RotationProfile:
    """Radial blend of the rotation angle: 1 inside, 0 outside, cubic between."""

    r_min: float = 1.0
    r_max: float = 10.0

    def theta(self, r):
        """Angle factor and its radial derivative at radius ``r``."""
        r = np.asarray(r, dtype=float)
        dr = self.r_max - self.r_min
        rb = np.clip((r - self.r_min) / dr, 0.0, 1.0)
        th = (1.0 - rb) ** 3 * (3.0 * rb + 1.0)
        dth = -12.0 * rb * (1.0 - rb) ** 2 / dr
        return th, dth

    def theta2(self, r):
        """Second radial derivative (discontinuous at the blend ends)."""
        r = np.asarray(r, dtype=float)
        dr = self.r_max - self.r_min
        inside = (r > self.r_min) & (r < self.r_max)
        rb = np.clip((r - self.r_min) / dr, 0.0, 1.0)
        return np.where(inside, -12.0 * (1.0 - rb) * (1.0 - 3.0 * rb) / dr**2, 0.0)


@dataclass
class JacobianFactors:
    """Pointwise matrices of the rotation-series expansion at given points."""

    Q: np.ndarray        # (n, 2, 2)
    D1: np.ndarray
    D2: np.ndarray
    R: np.ndarray        # (n_orders, n, 2, 2)
    Bm: np.ndarray       # J^{-T} expansion coefficients
    Bp: np.ndarray       # J expansion coefficients


class DeformedGeometry:
    """Rotation map ``x = R(phi * theta(r)) r_hat`` and its series algebra.

    Caches nothing across calls; all methods are pure functions of the
    points supplied, so concurrent evaluation is safe.  ``n_terms`` is the
    order parameter ``n``: series in the rotation angle are carried to power
    ``2 n`` throughout.
    """

    def __init__(self, profile: RotationProfile = RotationProfile(),
                 n_terms: int = 12, phi_max: float = math.radians(35.0)):
        if n_terms < 1:
            raise ValueError("series order must be at least 1")
        if n_terms > 25:
            raise ValueError("series order beyond 25 underflows the factorials")
        self.profile = profile
        self.n_terms = n_terms
        self.phi_max = phi_max

    # number of retained powers of phi in the matrix series
    @property
    def max_power(self) -> int:
        return 2 * self.n_terms

    def _radii(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(points)
        r = np.hypot(points[:, 0], points[:, 1])
        if np.any(r < 1e-12):
            raise OutOfDomainError("the origin is outside the annulus")
        return r

    @staticmethod
    def _rot_power(i: int) -> np.ndarray:
        """ROT90**i, using the period-4 cycle."""
        return [np.eye(2), ROT90, -np.eye(2), -ROT90][i % 4]

    def factors(self, points: np.ndarray) -> JacobianFactors:
        """All pointwise series matrices at the given points."""
        points = np.atleast_2d(points)
        r = self._radii(points)
        th, dth = self.profile.theta(r)
        rr = points[:, :, None] * points[:, None, :]
        Q = (dth / r)[:, None, None] * rr
        QP = Q @ ROT90
        PQ = ROT90 @ Q
        D1 = QP - PQ
        D2 = ROT90 @ Q @ Q @ ROT90
        n_pow = self.max_power + 1
        rho = np.ones((n_pow, points.shape[0]))  # theta^i / i!
        for i in range(1, n_pow):
            rho[i] = rho[i - 1] * th / i
        R = np.zeros((n_pow, points.shape[0], 2, 2))
        Bm = np.zeros_like(R)
        Bp = np.zeros_like(R)
        for i in range(n_pow):
            R[i] = rho[i][:, None, None] * self._rot_power(i)
            Bm[i] = R[i]
            Bp[i] = R[i]
            if i > 0:
                Rprev = rho[i - 1][:, None, None] * self._rot_power(i - 1)
                Bm[i] = Bm[i] + Rprev @ QP
                Bp[i] = Bp[i] + Rprev @ PQ
        return JacobianFactors(Q=Q, D1=D1, D2=D2, R=R, Bm=Bm, Bp=Bp)

    def factor_derivs(self, points: np.ndarray):
        """Spatial derivatives of Q, B- and B+ at the given points.

        Returns ``(dQ, dBm, dBp)`` with a leading derivative-direction axis
        on the last matrix index block: ``dQ[d, n, :, :]`` etc.
        """
        points = np.atleast_2d(points)
        npt = points.shape[0]
        r = self._radii(points)
        th, dth = self.profile.theta(r)
        ddth = self.profile.theta2(r)
        x = points
        dQ = np.zeros((2, npt, 2, 2))
        coef = (ddth / r**2 - dth / r**3)
        for d in range(2):
            dQ[d] = coef[:, None, None] * x[:, d, None, None] \
                * (x[:, :, None] * x[:, None, :])
            dQ[d] += (dth / r)[:, None, None] * (
                np.eye(2)[d][:, None] * x[:, None, :]
                + x[:, :, None] * np.eye(2)[d][None, :])
        n_pow = self.max_power + 1
        dBm = np.zeros((n_pow, 2, npt, 2, 2))
        dBp = np.zeros_like(dBm)
        # rho_i = theta^i / i!; d rho_i = rho_{i-1} * theta' * x_d / r
        rho = [np.ones_like(th)]
        for i in range(1, n_pow + 1):
            rho.append(rho[-1] * th / i)
        QP = ((dth / r)[:, None, None] * (x[:, :, None] * x[:, None, :])) @ ROT90
        PQ = ROT90 @ ((dth / r)[:, None, None] * (x[:, :, None] * x[:, None, :]))
        grad_dir = dth / r
        zero = np.zeros((npt, 2, 2))
        for i in range(n_pow):
            Pi = self._rot_power(i)
            Pi1 = self._rot_power(i - 1)
            for d in range(2):
                dRi = (zero if i == 0 else
                       (rho[i - 1] * grad_dir * x[:, d])[:, None, None] * Pi)
                dBm[i, d] = dRi
                dBp[i, d] = dRi
                if i > 0:
                    dRi1 = (zero if i == 1 else
                            (rho[i - 2] * grad_dir * x[:, d])[:, None, None] * Pi1)
                    Ri1 = rho[i - 1][:, None, None] * Pi1
                    dBm[i, d] = dBm[i, d] + dRi1 @ QP + Ri1 @ (dQ[d] @ ROT90)
                    dBp[i, d] = dBp[i, d] + dRi1 @ PQ + Ri1 @ (ROT90 @ dQ[d])
        return dQ, dBm, dBp

    def _check_phi(self, phi: float):
        if abs(phi) > self.phi_max + 1e-12:
            raise OutOfDomainError(
                f"angle {phi} outside the configured range +-{self.phi_max}")

    def domain_map(self, phi: float, points: np.ndarray):
        """Deformed position and exact Jacobian at reference points."""
        self._check_phi(phi)
        points = np.atleast_2d(points)
        r = self._radii(points)
        th, dth = self.profile.theta(r)
        a = phi * th
        ca, sa = np.cos(a), np.sin(a)
        Rm = np.empty((points.shape[0], 2, 2))
        Rm[:, 0, 0] = ca
        Rm[:, 0, 1] = -sa
        Rm[:, 1, 0] = sa
        Rm[:, 1, 1] = ca
        x = np.einsum("nij,nj->ni", Rm, points)
        PQ = ROT90 @ ((dth / r)[:, None, None]
                      * (points[:, :, None] * points[:, None, :]))
        J = Rm @ (np.eye(2) + phi * PQ)
        return x, J

    def jacobian(self, phi: float, points: np.ndarray) -> np.ndarray:
        return self.domain_map(phi, points)[1]

    def jacobian_deriv(self, phi: float, points: np.ndarray) -> np.ndarray:
        """Exact spatial derivatives of the Jacobian, shape (2, n, 2, 2)."""
        self._check_phi(phi)
        points = np.atleast_2d(points)
        r = self._radii(points)
        th, dth = self.profile.theta(r)
        a = phi * th
        ca, sa = np.cos(a), np.sin(a)
        Rm = np.empty((points.shape[0], 2, 2))
        Rm[:, 0, 0] = ca
        Rm[:, 0, 1] = -sa
        Rm[:, 1, 0] = sa
        Rm[:, 1, 1] = ca
        Q = (dth / r)[:, None, None] * (points[:, :, None] * points[:, None, :])
        PQ = ROT90 @ Q
        dQ, _, _ = self.factor_derivs(points)
        base = np.eye(2) + phi * PQ
        out = np.zeros((2, points.shape[0], 2, 2))
        da = phi * dth / r
        for d in range(2):
            out[d] = (da * points[:, d])[:, None, None] * (Rm @ ROT90 @ base) \
                + phi * Rm @ (ROT90 @ dQ[d])
        return out

    def kmatrix(self, phi: float, points: np.ndarray) -> np.ndarray:
        """Exact ``J^{-1} J^{-T} = I + phi D1 - phi^2 D2`` at the points."""
        self._check_phi(phi)
        f = self.factors(points)
        return np.eye(2) + phi * f.D1 - phi**2 * f.D2

    def jacobian_series(self, phi: float, points: np.ndarray) -> np.ndarray:
        """Truncated series for J (powers up to ``2 n``); for verification."""
        f = self.factors(points)
        powers = phi ** np.arange(self.max_power + 1)
        return np.einsum("k,knij->nij", powers, f.Bp)

    def jinv_t_series(self, phi: float, points: np.ndarray) -> np.ndarray:
        """Truncated series for J^{-T}; for verification."""
        f = self.factors(points)
        powers = phi ** np.arange(self.max_power + 1)
        return np.einsum("k,knij->nij", powers, f.Bm)
