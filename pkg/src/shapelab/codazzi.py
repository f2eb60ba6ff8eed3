"""The linear Codazzi system for curvature radii and S-deformation mixes.

The radii satisfy ``d_j k^i = chi_ij (k^j - k^i)`` for i != j, where
``chi_ij = d_j ln sqrt(G_ii)`` comes from the third fundamental form.  The
system is linear in k and, for a fixed net of curvature lines, linear in
the inverse metric coefficients as well; both facts are exercised here.
"""

from __future__ import annotations

import numpy as np

from .catalog import CurvatureField
from .expr import ScalarExpr, as_expr
from .goursat import GoursatBlowup, GoursatProblem, solve_goursat
from .grid import GridDomain, ResidualReport, d1
from .metric import (CodazziCoeffs, DiagonalMetric, SingularMetric, christoffel_ab, coord,
                     curvature_one_residual)

__all__ = [
    "CodazziError",
    "UMBILIC_TOL",
    "codazzi_residual",
    "integrate_codazzi",
    "sdeform_span_check",
    "mix_metrics",
]

UMBILIC_TOL = 1e-9


class CodazziError(ValueError):
    def __init__(self, message, locus=None):
        super().__init__(message)
        self.locus = locus


def _grid_values(f, dom: GridDomain, params=None) -> np.ndarray:
    if isinstance(f, ScalarExpr):
        v = f.evaluate(dom.bindings(params), strict=False)
        return np.broadcast_to(np.asarray(v, dtype=float), dom.shape).copy()
    return np.asarray(f, dtype=float)


def codazzi_residual(k: CurvatureField, c: CodazziCoeffs, domain: GridDomain | None = None,
                     trim: int = 0) -> ResidualReport:
    """``max |d_j k^i / (k^j - k^i) - chi_ij|`` over i != j and grid nodes.

    Symbolic radii are differentiated exactly; tabulated radii with 4th-order
    differences.  Nodes where ``|k^i - k^j| < 1e-9 max(1, |k|)`` are
    umbilic, excluded and counted.
    """
    dom = domain or k.domain
    if dom is None:
        raise ValueError("codazzi_residual needs a domain")
    if k.n != c.n:
        raise ValueError(f"{k.n} radii against {c.n}-d coefficients")
    kv = k.values(dom)
    chi = c.evaluate(dom)
    umb = k.umbilic_mask(dom, UMBILIC_TOL)
    fields = {}
    with np.errstate(all="ignore"):
        for (i, j), x in chi.items():
            if k.symbolic:
                dk = _grid_values(k.k[i].diff(coord(j)), dom, k.params)
            else:
                dk = d1(kv[i], j, dom.spacing[j])
            r = dk / (kv[j] - kv[i]) - x
            r = np.where(umb | ~np.isfinite(r), np.nan, r)
            if trim:
                r = r[(slice(trim, -trim),) * dom.dim]
            fields[f"chi[{i + 1}{j + 1}]"] = r
    rep = ResidualReport.from_fields("codazzi", fields, dom)
    rep.notes.append(f"umbilic nodes: {int(umb.sum())}")
    return rep


def _coeff_evaluator(c: CodazziCoeffs, params=None):
    if not c.symbolic:
        raise TypeError("integrate_codazzi needs symbolic coefficients")
    exprs = dict(c.chi)
    env0 = dict(params or {})

    def ev(key, X):
        env = dict(env0)
        env.update({coord(t): x for t, x in enumerate(X)})
        v = exprs[key].evaluate(env, strict=False)
        return np.broadcast_to(np.asarray(v, dtype=float), X[0].shape)

    return ev


def integrate_codazzi(c: CodazziCoeffs, boundary, domain: GridDomain, params=None,
                      richardson: bool = True, **kw) -> CurvatureField:
    """Solve the Codazzi system from radii given on the coordinate axes.

    ``boundary[i]`` is ``k^i`` along the ``R^i`` axis through the lower
    corner of the (margin-trimmed) box, as an expression in ``R^i`` alone.
    Raises :class:`CodazziError` if two radii meet (an umbilic) anywhere.
    """
    n = c.n
    if len(boundary) != n:
        raise ValueError(f"need {n} boundary curves, got {len(boundary)}")
    bexpr = []
    for i, b in enumerate(boundary):
        e = as_expr(b, params or {})
        other = e.coordinates - {coord(i)}
        if other:
            raise ValueError(f"boundary k^{i + 1} = {e} may only depend on {coord(i)}")
        bexpr.append(e)
    start = domain.start
    corner = {coord(t): start[t] for t in range(n)}
    kc = [float(e.evaluate(dict(corner, **(params or {})))) for e in bexpr]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(kc[i] - kc[j]) < UMBILIC_TOL * max(1.0, abs(kc[i]), abs(kc[j])):
                raise CodazziError(f"umbilic corner: k^{i + 1} = k^{j + 1} = {kc[i]}", list(start))

    ev = _coeff_evaluator(c, params)

    def data_fn(i):
        def f(x):
            v = bexpr[i].evaluate(dict(params or {}, **{coord(i): x}), strict=False)
            return np.broadcast_to(np.asarray(v, dtype=float), x.shape)
        return f

    def rhs(d, U, X):
        out = np.zeros_like(U)
        for i in range(n):
            if i != d:
                out[i] = ev((i, d), X) * (U[d] - U[i])
        return out

    prob = GoursatProblem(tuple(range(n)), [data_fn(i) for i in range(n)], rhs,
                          tuple(f"k{i + 1}" for i in range(n)))
    try:
        res = solve_goursat(prob, domain, richardson=richardson, **kw)
    except GoursatBlowup as exc:
        raise CodazziError(str(exc), exc.locus) from None
    k = res.fields
    for i in range(n):
        for j in range(i + 1, n):
            diff = k[i] - k[j]
            flip = np.sign(diff) != np.sign(kc[i] - kc[j])
            if flip.any():
                idx = np.argwhere(flip)[0]
                locus = [float(ax[t]) for ax, t in zip(domain.axes, idx)]
                raise CodazziError(f"k^{i + 1} - k^{j + 1} crosses zero near R={locus}", locus)
    return CurvatureField(tuple(k), domain, meta={"error_ratio": res.error_ratio,
                                                  "error_estimate": res.error_estimate})


def mix_metrics(m1: DiagonalMetric, m2: DiagonalMetric, lam: float) -> DiagonalMetric:
    """The metric with ``G^ii = lam G1^ii + (1 - lam) G2^ii``."""
    if m1.n != m2.n:
        raise ValueError("metrics of different dimension")
    if m1.symbolic and m2.symbolic:
        params = dict(m2.params)
        params.update(m1.params)
        G = tuple(1 / (lam / g1 + (1 - lam) / g2) for g1, g2 in zip(m1.G, m2.G))
        return DiagonalMetric(G, m1.domain, params)
    v1, v2 = m1.values(), m2.values()
    return DiagonalMetric(tuple(1 / (lam / a + (1 - lam) / b) for a, b in zip(v1, v2)), m1.domain)


def sdeform_span_check(m1: DiagonalMetric, m2: DiagonalMetric, lam: float,
                       coeff_tol: float = 1e-8, trim: int = 0) -> ResidualReport:
    """Curvature-1 residual of an affine mix of two S-deformation partners.

    The two metrics must have the same Codazzi coefficients (to
    ``coeff_tol``) on ``m1``'s grid, and the mixed inverse coefficients
    must stay positive.
    """
    dom = m1.domain
    c1 = christoffel_ab(m1).evaluate(dom, m1.params)
    if m2.symbolic:
        m2 = DiagonalMetric(m2.G, dom, m2.params)
    c2 = christoffel_ab(m2).evaluate(dom, m2.params)
    gap = 0.0
    with np.errstate(all="ignore"):
        for key in c1:
            d = np.abs(c1[key] - c2[key])
            gap = max(gap, float(np.nanmax(d)))
    if not gap <= coeff_tol:
        raise CodazziError(f"metrics do not share Codazzi coefficients (max gap {gap:.3e})")
    mixed = mix_metrics(m1, m2, lam)
    try:
        mixed.validate()
    except SingularMetric as exc:
        raise CodazziError(f"mix at lambda={lam}: {exc}") from None
    rep = curvature_one_residual(mixed, trim=trim)
    rep.name = f"sdeform_span(lambda={lam:g})"
    rep.notes.append(f"codazzi gap {gap:.3e}")
    return rep
