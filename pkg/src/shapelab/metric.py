"""Diagonal metrics: Christoffel fields, curvature residuals, metric pencils.

Coefficient fields are either :class:`~shapelab.expr.ScalarExpr` (derivatives
taken symbolically) or arrays tabulated on the metric's grid (derivatives by
4th-order differences).  The two paths are never mixed inside one metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .expr import ScalarExpr, as_expr, const
from .grid import GridDomain, ResidualReport, d1

__all__ = [
    "DiagonalMetric",
    "CodazziCoeffs",
    "MetricPencil",
    "PencilError",
    "SingularMetric",
    "christoffel_ab",
    "gaussian_curvature",
    "gaussian_curvature_field",
    "curvature_one_residual",
    "lame_fields",
    "constant_curvature_residual",
    "pencil_curvature_scan",
    "flatness_residual",
    "coord",
]

Field = Union[ScalarExpr, np.ndarray]


class SingularMetric(ArithmeticError):
    pass


class PencilError(ValueError):
    pass


def coord(i: int) -> str:
    """Name of the 0-based coordinate ``i``."""
    return f"R{i + 1}"


def _is_symbolic(fields) -> bool:
    kinds = {isinstance(f, ScalarExpr) for f in fields}
    if len(kinds) > 1:
        raise TypeError("cannot mix symbolic and tabulated coefficient fields")
    return kinds == {True}


def _evaluate(f: Field, domain: GridDomain, params: dict, strict=False) -> np.ndarray:
    if isinstance(f, ScalarExpr):
        out = f.evaluate(domain.bindings(params), strict=strict)
        return np.broadcast_to(np.asarray(out, dtype=float), domain.shape).copy()
    return np.asarray(f)


@dataclass(frozen=True)
class DiagonalMetric:
    """``sum_i G_ii (dR^i)^2`` on a grid domain."""

    G: tuple
    domain: GridDomain
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        G = tuple(g if isinstance(g, np.ndarray) else as_expr(g, self.params) for g in self.G)
        object.__setattr__(self, "G", G)
        if len(G) != self.domain.dim:
            raise ValueError(f"{len(G)} coefficients for a {self.domain.dim}-d domain")
        _is_symbolic(G)
        for g in G:
            if isinstance(g, np.ndarray) and g.shape != self.domain.shape:
                raise ValueError("tabulated coefficient does not match the grid")

    @property
    def n(self) -> int:
        return len(self.G)

    @property
    def symbolic(self) -> bool:
        return isinstance(self.G[0], ScalarExpr)

    def values(self, strict=False) -> list[np.ndarray]:
        return [_evaluate(g, self.domain, self.params, strict) for g in self.G]

    def validate(self):
        """Raise unless every coefficient is finite and positive on the grid."""
        for i, g in enumerate(self.values()):
            bad = ~(np.isfinite(g) & (g > 0))
            if bad.any():
                idx = np.argwhere(bad)[0]
                pt = [ax[k] for ax, k in zip(self.domain.axes, idx)]
                raise SingularMetric(f"G_{i + 1}{i + 1} not positive at R={pt}")
        return self


@dataclass(frozen=True)
class CodazziCoeffs:
    """Logarithmic derivatives ``chi[i, j] = d_j ln sqrt(G_ii)`` for i != j.

    For surfaces ``a = chi[0, 1]`` and ``b = chi[1, 0]``.
    """

    chi: dict
    n: int

    @property
    def a(self):
        return self.chi[(0, 1)]

    @property
    def b(self):
        return self.chi[(1, 0)]

    @property
    def symbolic(self) -> bool:
        return isinstance(next(iter(self.chi.values())), ScalarExpr)

    def evaluate(self, domain: GridDomain, params=None) -> dict:
        return {k: _evaluate(v, domain, params or {}) for k, v in self.chi.items()}

    @classmethod
    def from_surface(cls, a, b, names=()) -> CodazziCoeffs:
        return cls({(0, 1): as_expr(a, names), (1, 0): as_expr(b, names)}, 2)


def christoffel_ab(m: DiagonalMetric) -> CodazziCoeffs:
    """``a = -d_2 G^11 / (2 G^11)``, ``b = -d_1 G^22 / (2 G^22)`` (and the n-d analogue)."""
    chi = {}
    for i in range(m.n):
        for j in range(m.n):
            if i == j:
                continue
            if m.symbolic:
                chi[(i, j)] = m.G[i].diff(coord(j)) / (2 * m.G[i])
            else:
                g = m.G[i]
                chi[(i, j)] = d1(g, j, m.domain.spacing[j]) / (2 * g)
    return CodazziCoeffs(chi, m.n)


def lame_fields(m: DiagonalMetric):
    """Symbolic Lame coefficients ``sqrt(G_ii)`` and rotation coefficients.

    ``beta[(i, j)] = d_i H_j / H_i``, written through ``d_i ln H_j`` to keep
    the trees small.
    """
    if not m.symbolic:
        raise TypeError("lame_fields needs a symbolic metric")
    H = [g.apply("sqrt") for g in m.G]
    beta = {}
    for i in range(m.n):
        for j in range(m.n):
            if i != j:
                beta[(i, j)] = m.G[j].diff(coord(i)) / (2 * m.G[j]) * H[j] / H[i]
    return H, beta


def _gauss_expr(m: DiagonalMetric) -> ScalarExpr:
    H1, H2 = (g.apply("sqrt") for g in m.G)
    inner = (H2.diff("R1") / H1).diff("R1") + (H1.diff("R2") / H2).diff("R2")
    return -inner / (H1 * H2)


def gaussian_curvature(m: DiagonalMetric, pt: Sequence[float]) -> float:
    """Gaussian curvature at a single point of a symbolic 2-d metric."""
    if m.n != 2:
        raise ValueError("gaussian_curvature is defined for n = 2")
    if not m.symbolic:
        K = gaussian_curvature_field(m)
        idx = tuple(int(np.argmin(np.abs(ax - p))) for ax, p in zip(m.domain.axes, pt))
        return float(K[idx])
    env = dict(m.params)
    env.update({coord(i): float(p) for i, p in enumerate(pt)})
    for g in m.G:
        if not g.evaluate(env) > 0:
            raise SingularMetric(f"metric coefficient {g} not positive at {tuple(pt)}")
    return float(_gauss_expr(m).evaluate(env))


def gaussian_curvature_field(m: DiagonalMetric) -> np.ndarray:
    if m.symbolic:
        return _evaluate(_gauss_expr(m), m.domain, m.params)
    h = m.domain.spacing
    H1, H2 = (np.sqrt(g) for g in m.G)
    inner = d1(d1(H2, 0, h[0]) / H1, 0, h[0]) + d1(d1(H1, 1, h[1]) / H2, 1, h[1])
    return -inner / (H1 * H2)


def _curvature_one_terms(m: DiagonalMetric):
    c = christoffel_ab(m)
    a, b = c.a, c.b
    if m.symbolic:
        Ginv11, Ginv22 = 1 / m.G[0], 1 / m.G[1]
        expr = ((a.diff("R2") + a * a) * Ginv22 + a / 2 * Ginv22.diff("R2")
                + (b.diff("R1") + b * b) * Ginv11 + b / 2 * Ginv11.diff("R1") + 1)
        return _evaluate(expr, m.domain, m.params)
    h = m.domain.spacing
    Ginv11, Ginv22 = 1 / m.G[0], 1 / m.G[1]
    return ((d1(a, 1, h[1]) + a * a) * Ginv22 + a / 2 * d1(Ginv22, 1, h[1])
            + (d1(b, 0, h[0]) + b * b) * Ginv11 + b / 2 * d1(Ginv11, 0, h[0]) + 1)


def curvature_one_residual(m: DiagonalMetric, trim: int = 0) -> ResidualReport:
    """Residual of the constant-curvature-1 condition written through a, b.

    The condition is linear in ``G^11, G^22`` and is evaluated as is, so an
    indefinite metric (allowed for pencil members) is also accepted.
    Non-finite nodes are excluded and counted.  ``trim`` drops that many
    boundary layers (useful for tabulated metrics).
    """
    if m.n != 2:
        raise ValueError("curvature_one_residual is defined for n = 2")
    with np.errstate(all="ignore"):
        r = np.asarray(_curvature_one_terms(m), dtype=float)
    r = np.where(np.isfinite(r), r, np.nan)
    if trim:
        r = r[(slice(trim, -trim),) * 2]
    return ResidualReport.from_fields("curvature_one", {"K=1": r}, m.domain)


def constant_curvature_residual(m: DiagonalMetric, K: float = 1.0, trim: int = 0) -> ResidualReport:
    """Lame-form test that a diagonal metric has constant curvature ``K``.

    Residuals are ``d_k beta_ij - beta_ik beta_kj`` for distinct i, j, k and
    ``d_i beta_ij + d_j beta_ji + sum_k beta_ki beta_kj + K H_i H_j``.
    """
    n = m.n
    fields = {}
    with np.errstate(all="ignore"):
        if m.symbolic:
            H, beta = lame_fields(m)
            ev = lambda e: _evaluate(e, m.domain, m.params)  # noqa: E731
            for (i, j), bij in beta.items():
                for k in range(n):
                    if k not in (i, j):
                        fields[f"F1[{i + 1}{j + 1},{k + 1}]"] = ev(bij.diff(coord(k)) - beta[(i, k)] * beta[(k, j)])
            for i in range(n):
                for j in range(i + 1, n):
                    e = beta[(i, j)].diff(coord(i)) + beta[(j, i)].diff(coord(j)) + K * H[i] * H[j]
                    for k in range(n):
                        if k not in (i, j):
                            e = e + beta[(k, i)] * beta[(k, j)]
                    fields[f"F2[{i + 1}{j + 1}]"] = ev(e)
        else:
            H = [np.sqrt(g) for g in m.G]
            h = m.domain.spacing
            beta = {(i, j): d1(H[j], i, h[i]) / H[i] for i in range(n) for j in range(n) if i != j}
            fields = _flatness_fields(beta, h, n, extra=lambda i, j: K * H[i] * H[j])
    out = {}
    for k, v in fields.items():
        v = np.asarray(v, dtype=float)
        v = np.where(np.isfinite(v), v, np.nan)
        if trim:
            v = v[(slice(trim, -trim),) * n]
        out[k] = v
    name = "flatness" if K == 0 else f"constant_curvature({K:g})"
    return ResidualReport.from_fields(name, out, m.domain)


def _flatness_fields(beta: dict, h, n: int, extra=None) -> dict:
    fields = {}
    for (i, j), bij in beta.items():
        for k in range(n):
            if k not in (i, j):
                fields[f"F1[{i + 1}{j + 1},{k + 1}]"] = d1(bij, k, h[k]) - beta[(i, k)] * beta[(k, j)]
    for i in range(n):
        for j in range(i + 1, n):
            r = d1(beta[(i, j)], i, h[i]) + d1(beta[(j, i)], j, h[j])
            for k in range(n):
                if k not in (i, j):
                    r = r + beta[(k, i)] * beta[(k, j)]
            if extra is not None:
                r = r + extra(i, j)
            fields[f"F2[{i + 1}{j + 1}]"] = r
    return fields


def flatness_residual(rd, trim: int = 0) -> ResidualReport:
    """Zero-curvature conditions of ``sum H_i^2 (dR^i)^2`` from tabulated rotation coefficients."""
    fields = _flatness_fields(rd.beta, rd.domain.spacing, rd.n)
    if trim:
        fields = {k: v[(slice(trim, -trim),) * rd.n] for k, v in fields.items()}
    return ResidualReport.from_fields("flatness", fields, rd.domain)


@dataclass(frozen=True)
class MetricPencil:
    """The family ``G_ii(lambda) = H_i^2 / (lambda + eta_i)``.

    ``H`` holds Lame fields (symbolic or tabulated on ``domain``); each
    ``eta_i`` is an expression in ``R^i`` alone.
    """

    H: tuple
    eta: tuple
    domain: GridDomain
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        H = tuple(h if isinstance(h, np.ndarray) else as_expr(h, self.params) for h in self.H)
        eta = tuple(as_expr(e, self.params) for e in self.eta)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "eta", eta)
        _is_symbolic(H)
        for i, e in enumerate(eta):
            for j in range(len(eta)):
                if j != i and e.depends_on(coord(j)):
                    raise PencilError(f"eta_{i + 1} = {e} depends on {coord(j)}")

    @property
    def n(self) -> int:
        return len(self.H)

    def eta_values(self) -> list[np.ndarray]:
        return [_evaluate(e, self.domain, self.params) for e in self.eta]

    def check_lambda(self, lam: float, allow_indefinite: bool = False):
        """Reject ``lambda`` if some ``lambda + eta_i <= 0`` (only ``== 0`` with
        ``allow_indefinite``, which admits sign-indefinite pencil members)."""
        for i, e in enumerate(self.eta_values()):
            s = lam + e
            bad = (s == 0) if allow_indefinite else (s <= 0)
            if np.any(bad):
                idx = np.unravel_index(int(np.argmax(bad)), s.shape)
                pt = [float(ax[k]) for ax, k in zip(self.domain.axes, idx)]
                raise PencilError(f"lambda={lam}: lambda + eta_{i + 1} <= 0 at R={pt}")

    def admissible_interval(self) -> tuple[float, float]:
        low = max(float(np.max(-e)) for e in self.eta_values())
        return (low, np.inf)

    def evaluate(self, lam: float, allow_indefinite: bool = False) -> DiagonalMetric:
        self.check_lambda(lam, allow_indefinite)
        if isinstance(self.H[0], ScalarExpr):
            G = tuple(h * h / (const(lam) + e) for h, e in zip(self.H, self.eta))
        else:
            G = tuple(h * h / (lam + e) for h, e in zip(self.H, self.eta_values()))
        return DiagonalMetric(G, self.domain, self.params)


def pencil_curvature_scan(p: MetricPencil, lambdas, trim: int = 0,
                          allow_indefinite: bool = False) -> list[ResidualReport]:
    reports = []
    for lam in lambdas:
        r = curvature_one_residual(p.evaluate(lam, allow_indefinite), trim=trim)
        r.name = f"curvature_one(lambda={lam:g})"
        reports.append(r)
    return reports
