"""Quadrature assembly of the weak forms with the exact deformation Jacobian.

This is the direct (non-affine) path: basis tables are pushed through the
rotation map at the requested angle and the forms are integrated as they
stand.  It serves as the reference for verifying the affine machinery and
as the production path for high-fidelity snapshot solves.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import instrument
from .geometry import DeformedGeometry
from .spaces import FunctionSpacePair

__all__ = ["scatter_matrix", "deformed_tables", "viscous_matrix",
           "divergence_matrix", "convection_matrices", "field_at_quadrature"]


def scatter_matrix(local: np.ndarray, conn_rows: np.ndarray,
                   conn_cols: np.ndarray, shape) -> sp.csr_matrix:
    """Scatter per-element blocks ``local[e, a, b]`` into a sparse matrix
    with rows ``conn_rows[e, a]`` and columns ``conn_cols[e, b]``."""
    ne, na, nb = local.shape
    rows = np.repeat(conn_rows, nb, axis=1).ravel()
    cols = np.tile(conn_cols, (1, na)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=shape)
    return mat.tocsr()


def deformed_tables(space: FunctionSpacePair, geom: DeformedGeometry,
                    phi: float, mode: str):
    """Velocity basis values/gradients in deformed-domain coordinates.

    Canonical mode composes with the rotation; Piola mode premultiplies by
    the exact Jacobian (unit determinant) and differentiates it as well.
    Gradients are with respect to physical coordinates.
    """
    nel, nq = space.qp_w.shape
    instrument.count_quadrature(nel * nq)
    pts = space.qp_pos.reshape(-1, 2)
    J = geom.jacobian(phi, pts).reshape(nel, nq, 2, 2)
    Jinv = np.linalg.inv(J)
    if mode == "canonical":
        dval = space.val_v
        dgrad = np.einsum("eqacd,eqdk->eqack", space.grad_v, Jinv)
        return dval, dgrad
    if mode != "piola":
        raise ValueError(f"unknown push-forward mode {mode!r}")
    dJ = geom.jacobian_deriv(phi, pts).reshape(2, nel, nq, 2, 2)
    dval = np.einsum("eqck,eqak->eqac", J, space.val_v)
    dref = np.einsum("deqck,eqak->eqacd", dJ, space.val_v) \
        + np.einsum("eqck,eqakd->eqacd", J, space.grad_v)
    dgrad = np.einsum("eqacd,eqdk->eqack", dref, Jinv)
    return dval, dgrad


def viscous_matrix(space, dgrad, nu: float) -> sp.csr_matrix:
    instrument.count_quadrature(space.qp_w.size)
    loc = nu * np.einsum("eqacd,eqbcd,eq->eab", dgrad, dgrad, space.qp_w,
                         optimize=True)
    n = space.n_vdofs
    return scatter_matrix(loc, space.conn_v, space.conn_v, (n, n))


def divergence_matrix(space, dgrad) -> sp.csr_matrix:
    """Matrix of ``b(p, w) = -int p div w``: velocity rows, pressure columns."""
    instrument.count_quadrature(space.qp_w.size)
    div = np.einsum("eqacc->eqa", dgrad)
    loc = -np.einsum("eqa,eqm,eq->eam", div, space.val_p, space.qp_w,
                     optimize=True)
    return scatter_matrix(loc, space.conn_v, space.conn_p,
                          (space.n_vdofs, space.n_pdofs))


def field_at_quadrature(space, dval, dgrad, coeffs):
    """Values and gradients of a coefficient field at the quadrature points."""
    cf = coeffs[space.conn_v]
    val = np.einsum("eqac,ea->eqc", dval, cf)
    grad = np.einsum("eqack,ea->eqck", dgrad, cf)
    return val, grad


def convection_matrices(space, dval, dgrad, coeffs):
    """Linearizations of the convective form at the given state.

    Returns ``(N1, N2)`` with ``N1[i, j] = c(U, phi_j, phi_i)`` and
    ``N2[i, j] = c(phi_j, U, phi_i)``; the Newton Jacobian block is their
    sum, the residual contribution ``N1 @ coeffs``.
    """
    instrument.count_quadrature(space.qp_w.size)
    uval, ugrad = field_at_quadrature(space, dval, dgrad, coeffs)
    t1 = np.einsum("eqk,eqbck->eqbc", uval, dgrad)
    loc1 = np.einsum("eqbc,eqac,eq->eab", t1, dval, space.qp_w, optimize=True)
    t2 = np.einsum("eqbk,eqck->eqbc", dval, ugrad)
    loc2 = np.einsum("eqbc,eqac,eq->eab", t2, dval, space.qp_w, optimize=True)
    n = space.n_vdofs
    return (scatter_matrix(loc1, space.conn_v, space.conn_v, (n, n)),
            scatter_matrix(loc2, space.conn_v, space.conn_v, (n, n)))
