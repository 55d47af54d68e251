"""Velocity/pressure space pairs on the O-mesh and their push-forwards.

Two pairs are supported on the same mesh:

* ``taylor_hood`` -- biquadratic Lagrangian velocity with bilinear
  Lagrangian pressure, mapped by composition with the mesh parametrization;
* ``div_conforming`` -- velocity components in mixed quadratic/linear
  B-spline spaces chosen so the parametric divergence lands exactly in the
  bilinear pressure space, mapped by the Piola transform of the mesh
  parametrization.

All basis data is tabulated at the 3x3 Gauss points of every element with
values and gradients expressed in reference-domain (annulus) coordinates,
so downstream assembly never needs to know which pair it is working with.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError
from .geometry import AIRFOIL, INFLOW, DeformedGeometry, OMesh
from .splines import BSplineBasis, LagrangeBasis

__all__ = ["FunctionSpacePair", "build_space_pair", "PushForward",
           "push_forward", "TAYLOR_HOOD", "DIV_CONFORMING",
           "GAUSS_POINTS", "GAUSS_WEIGHTS"]

TAYLOR_HOOD = "taylor_hood"
DIV_CONFORMING = "div_conforming"

# 3-point Gauss-Legendre rule on [0, 1]; 9 points per element as in the
# reference experiments.
_g = np.sqrt(3.0 / 5.0) / 2.0
GAUSS_POINTS = np.array([0.5 - _g, 0.5, 0.5 + _g])
GAUSS_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0

FREE = 0
DIRICHLET = 1


def _basis_tables(basis, n_ders=1):
    """Per-span values/derivatives at the Gauss offsets plus connectivity."""
    vals = np.zeros((basis.n_spans, 3, n_ders + 1, basis.degree + 1))
    conn = np.zeros((basis.n_spans, basis.degree + 1), dtype=int)
    for s in range(basis.n_spans):
        vals[s] = basis.eval_span(s, GAUSS_POINTS, n_ders).transpose(0, 1, 2)
        conn[s] = basis.span_funcs(s)
    return vals, conn


def _circ_support_spans(basis, k: int) -> set:
    """Spans where periodic circumferential function ``k`` is nonzero."""
    n = basis.n_spans
    if isinstance(basis, LagrangeBasis):
        d = basis.degree
        if d == 1:
            return {(k - 1) % n, k % n}
        # degree 2: even index = vertex node (two spans), odd = midside
        return {((k // 2) - 1) % n, (k // 2) % n} if k % 2 == 0 else {k // 2}
    return {(k + i) % n for i in range(basis.degree + 1)}


@dataclass
class FunctionSpacePair:
    """Tabulated velocity/pressure pair; see the module docstring."""

    kind: str
    mesh: OMesh
    n_vdofs: int
    n_pdofs: int
    conn_v: np.ndarray            # (nel, nloc_v) global velocity dofs
    val_v: np.ndarray             # (nel, nq, nloc_v, 2)
    grad_v: np.ndarray            # (nel, nq, nloc_v, 2, 2), d val_c / d x_d
    divref_v: np.ndarray          # (nel, nq, nloc_v) reference-domain div
    pdiv_v: np.ndarray            # parametric divergence (splines; None for TH)
    conn_p: np.ndarray
    val_p: np.ndarray
    qp_pos: np.ndarray            # (nel, nq, 2) reference-domain positions
    qp_w: np.ndarray              # (nel, nq) quadrature weight incl. det G
    dirichlet_v: np.ndarray       # bool mask over velocity dofs
    _internals: dict = field(repr=False, default_factory=dict)
    _gram_cache: dict = field(repr=False, default_factory=dict)

    @property
    def free_v(self) -> np.ndarray:
        return np.where(~self.dirichlet_v)[0]

    @property
    def free_p(self) -> np.ndarray:
        return np.arange(self.n_pdofs)

    @property
    def n_elements(self) -> int:
        return self.conn_v.shape[0]

    # -- Gram matrices -------------------------------------------------

    def velocity_gram(self):
        """Full H1-seminorm Gram matrix of the velocity space (sparse)."""
        if "X" not in self._gram_cache:
            from .assemble import scatter_matrix
            loc = np.einsum("eqacd,eqbcd,eq->eab",
                            self.grad_v, self.grad_v, self.qp_w, optimize=True)
            self._gram_cache["X"] = scatter_matrix(
                loc, self.conn_v, self.conn_v, (self.n_vdofs, self.n_vdofs))
        return self._gram_cache["X"]

    def pressure_gram(self):
        """L2 Gram matrix of the pressure space (sparse)."""
        if "Mp" not in self._gram_cache:
            from .assemble import scatter_matrix
            loc = np.einsum("eqa,eqb,eq->eab",
                            self.val_p, self.val_p, self.qp_w, optimize=True)
            self._gram_cache["Mp"] = scatter_matrix(
                loc, self.conn_p, self.conn_p, (self.n_pdofs, self.n_pdofs))
        return self._gram_cache["Mp"]

    # -- pointwise evaluation (reference domain) ------------------------

    def eval_velocity(self, coeffs, xi, eta):
        """Velocity value, gradient and divergence at parametric points,
        in reference-domain coordinates."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float)) % self.mesh.n_circ
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        vals = np.zeros((xi.size, 2))
        grads = np.zeros((xi.size, 2, 2))
        for k in range(xi.size):
            v, g = self._eval_velocity_point(coeffs, xi[k], eta[k])
            vals[k], grads[k] = v, g
        return vals, grads, np.trace(grads, axis1=1, axis2=2)

    def eval_pressure(self, coeffs, xi, eta):
        xi = np.atleast_1d(np.asarray(xi, dtype=float)) % self.mesh.n_circ
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        hats = self._internals["pressure_bases"]
        out = np.zeros(xi.size)
        for k in range(xi.size):
            sc, sr, tc, tr = _locate_span(xi[k], eta[k], self.mesh)
            vc = hats[0].eval_span(sc, np.array([tc]), 0)[0, 0]
            vr = hats[1].eval_span(sr, np.array([tr]), 0)[0, 0]
            idx = np.add.outer(hats[0].span_funcs(sc) * self.n_rows_p,
                               hats[1].span_funcs(sr)).ravel()
            out[k] = np.outer(vc, vr).ravel() @ coeffs[idx]
        return out

    @property
    def n_rows_p(self) -> int:
        return self.mesh.n_rad + 1

    def _eval_velocity_point(self, coeffs, xi, eta):
        mesh = self.mesh
        sc, sr, tc, tr = _locate_span(xi, eta, mesh)
        _, G, H = mesh.map(np.array([xi]), np.array([eta]), 2)
        G, H = G[0], H[0]
        Ginv = np.linalg.inv(G)
        if self.kind == TAYLOR_HOOD:
            bc, br = self._internals["scalar_bases"]
            vc = bc.eval_span(sc, np.array([tc]), 1)[0]
            vr = br.eval_span(sr, np.array([tr]), 1)[0]
            idx = np.add.outer(bc.span_funcs(sc) * br.n_funcs,
                               br.span_funcs(sr)).ravel()
            N = np.outer(vc[0], vr[0]).ravel()
            dN = np.stack([np.outer(vc[1], vr[0]).ravel(),
                           np.outer(vc[0], vr[1]).ravel()], axis=1) @ Ginv
            val = np.stack([N @ coeffs[2 * idx], N @ coeffs[2 * idx + 1]])
            grad = np.stack([dN.T @ coeffs[2 * idx], dN.T @ coeffs[2 * idx + 1]])
            return val, grad
        # div-conforming: Piola transform of the mesh parametrization
        (b0c, b0r), (b1c, b1r) = self._internals["component_bases"]
        off = self._internals["comp_offset"]
        g = np.linalg.det(G)
        dG = H.transpose(2, 0, 1)          # dG[e][c,k] = H[c,k,e]
        dg = np.array([
            dG[e][0, 0] * G[1, 1] + G[0, 0] * dG[e][1, 1]
            - dG[e][0, 1] * G[1, 0] - G[0, 1] * dG[e][1, 0] for e in range(2)])
        u = np.zeros(2)
        du = np.zeros((2, 2))              # du[k, e] = d u_k / d xi_e
        for comp, (cb, rb) in enumerate(((b0c, b0r), (b1c, b1r))):
            vc = cb.eval_span(sc, np.array([tc]), 1)[0]
            vr = rb.eval_span(sr, np.array([tr]), 1)[0]
            idx = np.add.outer(cb.span_funcs(sc) * rb.n_funcs,
                               rb.span_funcs(sr)).ravel() + off[comp]
            cf = coeffs[idx]
            u[comp] = np.outer(vc[0], vr[0]).ravel() @ cf
            du[comp, 0] = np.outer(vc[1], vr[0]).ravel() @ cf
            du[comp, 1] = np.outer(vc[0], vr[1]).ravel() @ cf
        val = G @ u / g
        dval = np.zeros((2, 2))            # d val_c / d xi_e
        for e in range(2):
            dval[:, e] = (dG[e] @ u + G @ du[:, e]) / g - (G @ u) * dg[e] / g**2
        grad = dval @ Ginv
        return val, grad

    # -- Dirichlet data --------------------------------------------------

    def lift_dirichlet_values(self, u_inf: float) -> np.ndarray:
        """Full velocity vector with the inflow/airfoil trace imposed.

        Free entries are zero; the caller completes them by a Stokes solve.
        Inflow data ``(u_inf, 0)`` is imposed exactly at the outer-boundary
        mesh nodes (for the spline pair via collocation through the Piola
        factor of the mesh parametrization).
        """
        vec = np.zeros(self.n_vdofs)
        mesh = self.mesh
        dnodes = mesh.inflow_nodes()
        _, Gb = mesh.map(dnodes.astype(float), np.zeros(dnodes.size), 1)
        if self.kind == TAYLOR_HOOD:
            br_funcs = self._internals["scalar_bases"][1].n_funcs
            for k in self._internals["outer_dirichlet_scalars"]:
                vec[2 * k] = u_inf
            return vec
        # spline pair: u-hat = adj(G) (u_inf, 0) at the boundary nodes
        off = self._internals["comp_offset"]
        n_r0 = self._internals["component_bases"][0][1].n_funcs
        n_r1 = self._internals["component_bases"][1][1].n_funcs
        target1 = u_inf * Gb[:, 1, 1]      # component 0:  d eta F_2
        target2 = -u_inf * Gb[:, 1, 0]     # component 1: -d xi  F_2
        # component 1 (hats) is interpolatory at the nodes
        for node, t2 in zip(dnodes, target2):
            vec[off[1] + node * n_r1] = t2
        # component 0: collocation (c_{i-2} + c_{i-1}) / 2 = target at node i
        dir0 = sorted(self._internals["outer_dirichlet_comp0"])
        col = {k: j for j, k in enumerate(dir0)}
        A = np.zeros((dnodes.size, len(dir0)))
        for r, node in enumerate(dnodes):
            for k in ((node - 2) % mesh.n_circ, (node - 1) % mesh.n_circ):
                A[r, col[k]] += 0.5
        c, *_ = np.linalg.lstsq(A, target1, rcond=None)
        for k, ck in zip(dir0, c):
            vec[off[0] + k * n_r0] = ck
        return vec


def _locate_span(xi, eta, mesh):
    sc = int(xi) % mesh.n_circ
    sr = min(int(eta), mesh.n_rad - 1)
    return sc, sr, xi - int(xi), eta - sr


def build_space_pair(mesh: OMesh, kind: str) -> FunctionSpacePair:
    """Tabulate one of the two velocity/pressure pairs on the mesh."""
    if kind not in (TAYLOR_HOOD, DIV_CONFORMING):
        raise ValueError(f"unknown space kind {kind!r}")
    nc, nr = mesh.n_circ, mesh.n_rad
    nel, nq = nc * nr, 9

    # geometry at the quadrature grid
    xi_flat = (np.arange(nc)[:, None] + GAUSS_POINTS[None, :]).ravel()
    eta_flat = (np.arange(nr)[:, None] + GAUSS_POINTS[None, :]).ravel()
    pos_g, G_g, H_g = mesh.map_grid(xi_flat, eta_flat, 2)

    def to_elem(arr):
        shape = arr.shape[2:]
        a = arr.reshape((nc, 3, nr, 3) + shape)
        return a.transpose((0, 2, 1, 3) + tuple(range(4, 4 + len(shape)))) \
                .reshape((nel, nq) + shape)

    pos = to_elem(pos_g)
    G = to_elem(G_g)
    H = to_elem(H_g)
    detG = np.linalg.det(G)
    if np.any(detG <= 0.0):
        e = int(np.argwhere(np.any(detG <= 0.0, axis=1))[0, 0])
        raise MeshError(f"tangled element {divmod(e, nr)}: nonpositive jacobian")
    Ginv = np.linalg.inv(G)
    qp_w = detG * np.outer(GAUSS_WEIGHTS, GAUSS_WEIGHTS).ravel()[None, :]

    internals: dict = {}
    if kind == TAYLOR_HOOD:
        conn_v, val_v, grad_v, n_vdofs = _taylor_hood_tables(
            nc, nr, nel, nq, Ginv, internals)
        pdiv_v = None
        divref_v = np.trace(grad_v, axis1=3, axis2=4)
    else:
        conn_v, val_v, grad_v, pdiv_v, n_vdofs = _div_conforming_tables(
            nc, nr, nel, nq, G, H, Ginv, detG, internals)
        divref_v = pdiv_v / detG[:, :, None]

    conn_p, val_p, n_pdofs = _pressure_tables(nc, nr, nel, nq, internals)

    dirichlet_v = _classify_dirichlet(mesh, kind, n_vdofs, internals)
    return FunctionSpacePair(
        kind=kind, mesh=mesh, n_vdofs=n_vdofs, n_pdofs=n_pdofs,
        conn_v=conn_v, val_v=val_v, grad_v=grad_v, divref_v=divref_v,
        pdiv_v=pdiv_v, conn_p=conn_p, val_p=val_p,
        qp_pos=pos, qp_w=qp_w, dirichlet_v=dirichlet_v, _internals=internals)


def _tensor_scalar_tables(bc, br, nc, nr, nel, nq):
    """Scalar tensor-product tables: values, parametric gradients, conn."""
    tc, cc = _basis_tables(bc)
    tr, cr = _basis_tables(br)
    nloc = (bc.degree + 1) * (br.degree + 1)
    # element (i, j), q = qc*3 + qr, local a = ac*(br.degree+1) + ar
    val = np.einsum("iqa,jpb->ijqpab", tc[:, :, 0, :], tr[:, :, 0, :])
    dxi = np.einsum("iqa,jpb->ijqpab", tc[:, :, 1, :], tr[:, :, 0, :])
    deta = np.einsum("iqa,jpb->ijqpab", tc[:, :, 0, :], tr[:, :, 1, :])
    val, dxi, deta = (x.reshape(nel, nq, nloc) for x in (val, dxi, deta))
    conn = np.zeros((nel, nloc), dtype=int)
    for i in range(nc):
        for j in range(nr):
            conn[i * nr + j] = np.add.outer(cc[i] * br.n_funcs, cr[j]).ravel()
    return val, np.stack([dxi, deta], axis=-1), conn


def _taylor_hood_tables(nc, nr, nel, nq, Ginv, internals):
    bc = LagrangeBasis(nc, 2, periodic=True)
    br = LagrangeBasis(nr, 2, periodic=False)
    sval, sgrad, sconn = _tensor_scalar_tables(bc, br, nc, nr, nel, nq)
    sgrad = np.einsum("eqad,eqdk->eqak", sgrad, Ginv)
    ns = sval.shape[2]
    nloc = 2 * ns
    val = np.zeros((nel, nq, nloc, 2))
    grad = np.zeros((nel, nq, nloc, 2, 2))
    conn = np.zeros((nel, nloc), dtype=int)
    for c in range(2):
        val[:, :, c::2, c] = sval
        grad[:, :, c::2, c, :] = sgrad
        conn[:, c::2] = 2 * sconn + c
    internals["scalar_bases"] = (bc, br)
    return conn, val, grad, 2 * bc.n_funcs * br.n_funcs


def _div_conforming_tables(nc, nr, nel, nq, G, H, Ginv, detG, internals):
    comp_bases = (
        (BSplineBasis(nc, 2, periodic=True), BSplineBasis(nr, 1, periodic=False)),
        (BSplineBasis(nc, 1, periodic=True), BSplineBasis(nr, 2, periodic=False)),
    )
    n0 = comp_bases[0][0].n_funcs * comp_bases[0][1].n_funcs
    n1 = comp_bases[1][0].n_funcs * comp_bases[1][1].n_funcs
    off = (0, n0)
    n_vdofs = n0 + n1
    uvals, ugrads, conns, nlocs = [], [], [], []
    for comp, (cb, rb) in enumerate(comp_bases):
        v, g, c = _tensor_scalar_tables(cb, rb, nc, nr, nel, nq)
        uvals.append(v)
        ugrads.append(g)
        conns.append(c + off[comp])
        nlocs.append(v.shape[2])
    nloc = nlocs[0] + nlocs[1]
    conn = np.concatenate(conns, axis=1)
    # parametric vector fields: u[comp] = scalar table of that component
    uval = np.zeros((nel, nq, nloc, 2))
    ugrad = np.zeros((nel, nq, nloc, 2, 2))   # d u_c / d xi_e
    uval[:, :, :nlocs[0], 0] = uvals[0]
    uval[:, :, nlocs[0]:, 1] = uvals[1]
    ugrad[:, :, :nlocs[0], 0, :] = ugrads[0]
    ugrad[:, :, nlocs[0]:, 1, :] = ugrads[1]
    pdiv = ugrad[:, :, :, 0, 0] + ugrad[:, :, :, 1, 1]

    # Piola transform of the mesh parametrization: v = G u / det G
    dG = H.transpose(0, 1, 4, 2, 3)           # (nel, nq, e, c, k)
    dg = (dG[..., 0, 0] * G[..., 1, 1][..., None]
          + G[..., 0, 0][..., None] * dG[..., 1, 1]
          - dG[..., 0, 1] * G[..., 1, 0][..., None]
          - G[..., 0, 1][..., None] * dG[..., 1, 0])   # (nel, nq, e)
    Gu = np.einsum("eqck,eqak->eqac", G, uval)
    val = Gu / detG[:, :, None, None]
    dval = (np.einsum("eqdck,eqak->eqacd", dG, uval)
            + np.einsum("eqck,eqakd->eqacd", G, ugrad)
            ) / detG[:, :, None, None, None] \
        - np.einsum("eqac,eqd->eqacd", Gu, dg) / (detG**2)[:, :, None, None, None]
    grad = np.einsum("eqacd,eqdk->eqack", dval, Ginv)
    internals["component_bases"] = comp_bases
    internals["comp_offset"] = off
    return conn, val, grad, pdiv, n_vdofs


def _pressure_tables(nc, nr, nel, nq, internals):
    bc = LagrangeBasis(nc, 1, periodic=True)
    br = LagrangeBasis(nr, 1, periodic=False)
    val, _, conn = _tensor_scalar_tables(bc, br, nc, nr, nel, nq)
    internals["pressure_bases"] = (bc, br)
    return conn, val, bc.n_funcs * br.n_funcs


def _classify_dirichlet(mesh, kind, n_vdofs, internals):
    inflow = set(mesh.inflow_spans().tolist())
    mask = np.zeros(n_vdofs, dtype=bool)
    if kind == TAYLOR_HOOD:
        bc, br = internals["scalar_bases"]
        outer_scalars = []
        for k in range(bc.n_funcs):
            base = k * br.n_funcs
            mask[2 * (base + br.n_funcs - 1)] = True       # airfoil row
            mask[2 * (base + br.n_funcs - 1) + 1] = True
            if _circ_support_spans(bc, k) & inflow:
                mask[2 * base] = True
                mask[2 * base + 1] = True
                outer_scalars.append(base)
        internals["outer_dirichlet_scalars"] = outer_scalars
    else:
        (b0c, b0r), (b1c, b1r) = internals["component_bases"]
        off = internals["comp_offset"]
        dir0 = []
        for k in range(b0c.n_funcs):
            base = off[0] + k * b0r.n_funcs
            mask[base + b0r.n_funcs - 1] = True
            if _circ_support_spans(b0c, k) & inflow:
                mask[base] = True
                dir0.append(k)
        for k in range(b1c.n_funcs):
            base = off[1] + k * b1r.n_funcs
            mask[base + b1r.n_funcs - 1] = True
            if _circ_support_spans(b1c, k) & inflow:
                mask[base] = True
        internals["outer_dirichlet_comp0"] = dir0
    return mask


# ---------------------------------------------------------------------------
# deformation push-forward


@dataclass
class PushForward:
    """Maps reference-domain fields into the rotated physical domain."""

    mode: str                     # "canonical" or "piola"
    geometry: DeformedGeometry
    space: FunctionSpacePair

    def __post_init__(self):
        if self.mode not in ("canonical", "piola"):
            raise ValueError(f"unknown push-forward mode {self.mode!r}")


def push_forward(pf: PushForward, phi: float, coeffs: np.ndarray,
                 eval_points: np.ndarray, points_physical: bool = True):
    """Field values and gradients at physical points of the rotated domain.

    ``eval_points`` are positions in the deformed domain (or reference
    positions if ``points_physical`` is false).  The rotation preserves
    radii, so physical points invert in closed form before the mesh
    parametrization is inverted by Newton.
    """
    pts = np.atleast_2d(np.asarray(eval_points, dtype=float))
    geom, space = pf.geometry, pf.space
    if points_physical:
        r = np.hypot(pts[:, 0], pts[:, 1])
        th = geom.profile.theta(r)[0]
        a = -phi * th
        ca, sa = np.cos(a), np.sin(a)
        ref = np.stack([ca * pts[:, 0] - sa * pts[:, 1],
                        sa * pts[:, 0] + ca * pts[:, 1]], axis=1)
    else:
        ref = pts
    par = space.mesh.locate(ref)
    vals, grads, _ = space.eval_velocity(coeffs, par[:, 0], par[:, 1])
    J = geom.jacobian(phi, ref)
    Jinv = np.linalg.inv(J)
    if pf.mode == "canonical":
        out_val = vals
        out_grad = np.einsum("ncd,ndk->nck", grads, Jinv)
    else:
        dJ = geom.jacobian_deriv(phi, ref)
        out_val = np.einsum("nck,nk->nc", J, vals)
        dval = np.einsum("dnck,nk->ncd", dJ, vals) \
            + np.einsum("nck,nkd->ncd", J, grads)
        out_grad = np.einsum("ncd,ndk->nck", dval, Jinv)
    return out_val, out_grad
