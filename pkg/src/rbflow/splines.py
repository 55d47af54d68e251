"""One-dimensional B-spline and Lagrange bases on uniform integer knots.

Everything downstream (mesh parametrization, velocity/pressure spaces) is a
tensor product of the bases defined here.  Knots sit at the integers, spans
are the unit intervals ``[s, s+1]``, and each basis knows how to evaluate the
functions supported on a span at local coordinates with up to two derivatives.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "BSplineBasis",
    "LagrangeBasis",
    "periodic_interpolation_coeffs",
    "clamped_quadratic_interpolation_coeffs",
    "PeriodicCurve",
]


def _ders_basis_funs(span_left: float, knots: np.ndarray, degree: int,
                     x: float, n_ders: int) -> np.ndarray:
    """Nonzero B-spline functions and derivatives at one point.

    Standard triangular-table evaluation (The NURBS Book, A2.3).  ``knots``
    is the full knot vector, ``span_left`` the index of the knot at the left
    end of the span containing ``x``.  Returns an array of shape
    ``(n_ders + 1, degree + 1)``.
    """
    p = degree
    i = int(span_left)
    ndu = np.zeros((p + 1, p + 1))
    left = np.zeros(p + 1)
    right = np.zeros(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - knots[i + 1 - j]
        right[j] = knots[i + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved
    ders = np.zeros((n_ders + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.zeros((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, n_ders + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = 1.0
    for k in range(1, n_ders + 1):
        fac *= (p - k + 1)
        ders[k, :] *= fac
    return ders


class BSplineBasis:
    """Uniform-knot B-spline basis of given degree on ``n_spans`` spans.

    Periodic bases wrap circumferentially; clamped bases use open knot
    vectors (full multiplicity at both ends).  Functions are indexed by
    leftmost knot for periodic bases and in the usual open-knot order for
    clamped ones.
    """

    def __init__(self, n_spans: int, degree: int, periodic: bool):
        if n_spans < degree + 1:
            raise ValueError("need at least degree+1 spans")
        self.n_spans = n_spans
        self.degree = degree
        self.periodic = periodic
        self.n_funcs = n_spans if periodic else n_spans + degree
        p, n = degree, n_spans
        if periodic:
            self._knots = np.arange(-p, n + p + 1, dtype=float)
        else:
            self._knots = np.concatenate([
                np.zeros(p), np.arange(0.0, n + 1), np.full(p, float(n))])

    def span_funcs(self, span: int) -> np.ndarray:
        """Global indices of the ``degree+1`` functions active on a span."""
        p = self.degree
        idx = np.arange(span - p, span + 1) if self.periodic \
            else np.arange(span, span + p + 1)
        if self.periodic:
            idx = idx % self.n_spans
        return idx

    def eval_span(self, span: int, t: np.ndarray, n_ders: int = 1) -> np.ndarray:
        """Values/derivatives of the active functions at local coords.

        ``t`` holds local coordinates in ``[0, 1]``; the result has shape
        ``(len(t), n_ders + 1, degree + 1)`` with function columns ordered
        as in :meth:`span_funcs`.  Derivatives are with respect to the
        global (integer-knot) coordinate.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        p = self.degree
        out = np.zeros((t.size, n_ders + 1, p + 1))
        if self.periodic:
            # uniform interior knots: same local table for every span
            span_left = p  # span [0,1] of the extended uniform knot vector
            xs = t
            knots = self._knots
        else:
            span_left = p + span
            xs = span + t
            knots = self._knots
        for k, x in enumerate(xs):
            out[k] = _ders_basis_funs(span_left, knots, p, float(x), n_ders)
        return out

    def greville(self) -> np.ndarray:
        """Greville abscissae (averages of ``degree`` consecutive knots)."""
        p = self.degree
        if self.periodic:
            return (np.arange(self.n_funcs) + (p + 1) / 2.0) % self.n_spans
        ks = self._knots
        return np.array([ks[j + 1:j + p + 1].mean() for j in range(self.n_funcs)])

    def boundary_funcs(self, end: int) -> np.ndarray:
        """Indices of functions with nonzero value at span end 0 or 1 (clamped)."""
        if self.periodic:
            raise ValueError("periodic basis has no boundary")
        return np.array([0]) if end == 0 else np.array([self.n_funcs - 1])


class LagrangeBasis:
    """Nodal Lagrange basis of degree 1 or 2 on uniform spans.

    Nodes sit at span endpoints (degree 1) plus midpoints (degree 2); the
    basis is interpolatory at the nodes, which makes Dirichlet data trivial
    to impose.
    """

    def __init__(self, n_spans: int, degree: int, periodic: bool):
        if degree not in (1, 2):
            raise ValueError("only degrees 1 and 2 supported")
        self.n_spans = n_spans
        self.degree = degree
        self.periodic = periodic
        self.n_funcs = degree * n_spans + (0 if periodic else 1)

    def span_funcs(self, span: int) -> np.ndarray:
        d = self.degree
        idx = np.arange(d * span, d * span + d + 1)
        if self.periodic:
            idx = idx % self.n_funcs
        return idx

    def eval_span(self, span: int, t: np.ndarray, n_ders: int = 1) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros((t.size, n_ders + 1, self.degree + 1))
        if self.degree == 1:
            out[:, 0, 0] = 1.0 - t
            out[:, 0, 1] = t
            if n_ders >= 1:
                out[:, 1, 0] = -1.0
                out[:, 1, 1] = 1.0
        else:
            out[:, 0, 0] = 2.0 * (t - 0.5) * (t - 1.0)
            out[:, 0, 1] = -4.0 * t * (t - 1.0)
            out[:, 0, 2] = 2.0 * t * (t - 0.5)
            if n_ders >= 1:
                out[:, 1, 0] = 4.0 * t - 3.0
                out[:, 1, 1] = -8.0 * t + 4.0
                out[:, 1, 2] = 4.0 * t - 1.0
            if n_ders >= 2:
                out[:, 2, 0] = 4.0
                out[:, 2, 1] = -8.0
                out[:, 2, 2] = 4.0
        return out

    def node_params(self) -> np.ndarray:
        """Parametric positions of the nodes, in function order."""
        return np.arange(self.n_funcs) / self.degree

    def boundary_funcs(self, end: int) -> np.ndarray:
        if self.periodic:
            raise ValueError("periodic basis has no boundary")
        return np.array([0]) if end == 0 else np.array([self.n_funcs - 1])


def periodic_interpolation_coeffs(data: np.ndarray, degree: int = 3) -> np.ndarray:
    """Control points of the periodic spline interpolating ``data`` at the knots.

    ``data`` has one row per integer site ``0..n-1``.  Odd degrees give a
    well-posed knot-collocation problem (the even-degree one is singular).
    """
    if degree % 2 == 0:
        raise ValueError("knot collocation needs odd degree")
    n = data.shape[0]
    basis = BSplineBasis(n, degree, periodic=True)
    A = np.zeros((n, n))
    for s in range(n):
        vals = basis.eval_span(s, np.array([0.0]), n_ders=0)[0, 0]
        A[s, basis.span_funcs(s)] += vals
    return np.linalg.solve(A, data)


def clamped_quadratic_interpolation_coeffs(f, n_spans: int) -> np.ndarray:
    """Control ordinates of the clamped quadratic spline matching ``f``
    at the Greville abscissae (a square, totally positive system)."""
    basis = BSplineBasis(n_spans, 2, periodic=False)
    sites = basis.greville()
    A = np.zeros((basis.n_funcs, basis.n_funcs))
    for k, x in enumerate(sites):
        span = min(int(x), n_spans - 1)
        vals = basis.eval_span(span, np.array([x - span]), n_ders=0)[0, 0]
        A[k, basis.span_funcs(span)] = vals
    return np.linalg.solve(A, np.asarray([f(x) for x in sites], dtype=float))


class PeriodicCurve:
    """Periodic spline curve with explicit control points."""

    def __init__(self, control: np.ndarray, degree: int = 3):
        self.control = np.asarray(control, dtype=float)
        self.basis = BSplineBasis(self.control.shape[0], degree, periodic=True)

    @classmethod
    def interpolating(cls, points: np.ndarray, degree: int = 3) -> "PeriodicCurve":
        return cls(periodic_interpolation_coeffs(points, degree), degree)

    def eval(self, x: np.ndarray, n_ders: int = 2) -> np.ndarray:
        """Curve and derivatives at parameters ``x``; shape
        ``(len(x), n_ders + 1, dim)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float)) % self.basis.n_spans
        spans = np.minimum(x.astype(int), self.basis.n_spans - 1)
        out = np.zeros((x.size, n_ders + 1, self.control.shape[1]))
        for k in range(x.size):
            s = int(spans[k])
            vals = self.basis.eval_span(s, np.array([x[k] - s]), n_ders)[0]
            out[k] = vals @ self.control[self.basis.span_funcs(s)]
        return out
