"""Rotation coefficients of orthogonal nets and their integrable reductions.

Fields are tabulated on a :class:`GridDomain`: Lame coefficients ``H_i`` and
rotation coefficients ``beta[(i, j)] = d_i H_j / H_i`` (0-based keys).  The
functions ``eta_i(R^i)`` of the metric pencil stay symbolic.

Surfaces (n = 2) are governed by system

    d_1 H_2 = b12 H_1,  d_2 H_1 = b21 H_2,  d_1 b12 + d_2 b21 = 0,
    eta_1 d_1 b12 + eta_2 d_2 b21 + eta_1' b12 / 2 + eta_2' b21 / 2 + H_1 H_2 = 0,

and n-orthogonal systems (n >= 3) by the Darboux-type system solved for
``d_i beta_ij``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import ScalarExpr, as_expr
from .goursat import GoursatBlowup, GoursatProblem, solve_goursat
from .grid import GridDomain, ResidualReport, d1
from .metric import coord

__all__ = [
    "RotationData",
    "ConstEtaData",
    "ResidualReport",
    "LameError",
    "spectral_roots",
    "system4_residual",
    "lax_matrices",
    "lax_zero_curvature_residual",
    "darboux_residual",
    "integrate_darboux",
    "const_eta_integrals",
    "mu_constants",
    "solve_goursat_ex8",
    "ex8_residuals",
    "ex8_boundary",
    "solve_triple_s2",
    "triple_residuals",
    "triple_boundary",
    "gauge_residual",
    "perturbed",
    "EX8_ETA",
]

EX8_ETA = ("-1/2", "1/2")


class LameError(ValueError):
    def __init__(self, message, locus=None):
        super().__init__(message)
        self.locus = locus


@dataclass
class RotationData:
    H: tuple
    beta: dict
    eta: tuple
    domain: GridDomain
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.H = tuple(np.asarray(h) for h in self.H)
        self.eta = tuple(as_expr(e) for e in self.eta)
        n = len(self.H)
        if len(self.eta) != n or self.domain.dim != n:
            raise ValueError("H, eta and domain dimensions differ")
        for i, e in enumerate(self.eta):
            for j in range(n):
                if j != i and e.depends_on(coord(j)):
                    raise LameError(f"eta_{i + 1} = {e} depends on {coord(j)}")
        missing = [(i, j) for i in range(n) for j in range(n) if i != j and (i, j) not in self.beta]
        if missing:
            raise ValueError(f"missing rotation coefficients {missing}")

    @property
    def n(self) -> int:
        return len(self.H)

    def _grid(self, e: ScalarExpr) -> np.ndarray:
        v = e.evaluate(self.domain.bindings(), strict=False)
        return np.broadcast_to(np.asarray(v, dtype=float), self.domain.shape).copy()

    def eta_values(self) -> list[np.ndarray]:
        return [self._grid(e) for e in self.eta]

    def eta_prime_values(self) -> list[np.ndarray]:
        return [self._grid(e.diff(coord(i))) for i, e in enumerate(self.eta)]

    def constant_eta(self) -> tuple | None:
        if any(e.coordinates for e in self.eta):
            return None
        return tuple(float(e.evaluate()) for e in self.eta)

    def lame_check(self, trim: int = 0) -> ResidualReport:
        """``d_i H_j - beta_ij H_i`` by 4th-order differences."""
        h = self.domain.spacing
        f = {}
        for (i, j), b in self.beta.items():
            r = d1(self.H[j], i, h[i]) - b * self.H[i]
            f[f"H[{i + 1}{j + 1}]"] = _trim(r, trim)
        return ResidualReport.from_fields("lame", f, self.domain)


@dataclass
class ConstEtaData:
    c: tuple
    P: list
    variation: list
    angles: dict = field(default_factory=dict)
    mu: tuple = ()
    rd: RotationData | None = None
    meta: dict = field(default_factory=dict)

    def integrals_report(self) -> ResidualReport:
        f = {f"dP{i + 1}": v for i, v in enumerate(self.variation)}
        return ResidualReport.from_fields("integrals", f, self.rd.domain if self.rd else None,
                                          keep_fields=False)


def _trim(a, trim):
    if not trim:
        return a
    return a[(slice(trim, -trim),) * a.ndim]


def spectral_roots(eta_vals, lam: float, allow_complex: bool = True):
    """``sqrt(lambda + eta_i)`` on the grid.

    Where ``lambda + eta_i < 0`` the principal complex root is used (the
    connection matrices are polynomial in these roots and their ratios, so
    zero-curvature identities hold for every branch).  A vanishing value is
    an error.
    """
    out = []
    cplx = False
    for i, e in enumerate(eta_vals):
        s = lam + np.asarray(e, dtype=float)
        if np.any(s == 0):
            raise LameError(f"lambda = {lam} makes lambda + eta_{i + 1} vanish")
        if np.any(s < 0):
            if not allow_complex:
                raise LameError(f"lambda = {lam} outside the admissible interval (eta_{i + 1})")
            cplx = True
        out.append(s)
    if cplx:
        return [np.sqrt(s.astype(complex)) for s in out], True
    return [np.sqrt(s) for s in out], False


# --------------------------------------------------------------------------
# n = 2


def system4_residual(rd: RotationData, trim: int = 0) -> ResidualReport:
    if rd.n != 2:
        raise ValueError("system4_residual needs n = 2")
    h = rd.domain.spacing
    H1, H2 = rd.H
    b12, b21 = rd.beta[(0, 1)], rd.beta[(1, 0)]
    e1, e2 = rd.eta_values()
    p1, p2 = rd.eta_prime_values()
    db12 = d1(b12, 0, h[0])
    db21 = d1(b21, 1, h[1])
    f = {
        "d1H2": d1(H2, 0, h[0]) - b12 * H1,
        "d2H1": d1(H1, 1, h[1]) - b21 * H2,
        "flat": db12 + db21,
        "eta": e1 * db12 + e2 * db21 + 0.5 * p1 * b12 + 0.5 * p2 * b21 + H1 * H2,
    }
    return ResidualReport.from_fields("system4", {k: _trim(v, trim) for k, v in f.items()}, rd.domain)


def lax_matrices(rd: RotationData, lam: float, form: str = "3x3"):
    """Connection matrices ``A_d`` with ``d_d psi = A_d psi``, shape ``(n, m, m, *grid)``."""
    s, _ = spectral_roots(rd.eta_values(), lam)
    shape = rd.domain.shape
    n = rd.n
    if form == "3x3":
        if n != 2:
            raise ValueError("3x3 form is for n = 2")
        H1, H2 = rd.H
        b12, b21 = rd.beta[(0, 1)], rd.beta[(1, 0)]
        U = np.zeros((3, 3) + shape, dtype=complex)
        V = np.zeros_like(U)
        U[0, 1] = -(s[1] / s[0]) * b21
        U[1, 0] = -U[0, 1]
        U[0, 2] = H1 / s[0]
        U[2, 0] = -U[0, 2]
        V[0, 1] = (s[0] / s[1]) * b12
        V[1, 0] = -V[0, 1]
        V[1, 2] = H2 / s[1]
        V[2, 1] = -V[1, 2]
        return np.stack([U, V])
    if form == "2x2":
        if n != 2:
            raise ValueError("2x2 form is for n = 2")
        H1, H2 = rd.H
        b12, b21 = rd.beta[(0, 1)], rd.beta[(1, 0)]
        U = np.zeros((2, 2) + shape, dtype=complex)
        V = np.zeros_like(U)
        U[0, 0] = 1j * s[1] * b21
        U[0, 1] = H1
        U[1, 0] = -H1
        U[1, 1] = -1j * s[1] * b21
        U /= 2 * s[0]
        V[0, 0] = -s[0] * b12
        V[0, 1] = H2
        V[1, 0] = H2
        V[1, 1] = s[0] * b12
        V *= 1j / (2 * s[1])
        return np.stack([U, V])
    if form == "ndim":
        if n < 3:
            raise ValueError("ndim form is for n >= 3 (n = 2 data live on the sphere)")
        A = np.zeros((n, n, n) + shape, dtype=complex)
        for d in range(n):
            for i in range(n):
                if i == d:
                    continue
                A[d, i, d] = (s[i] / s[d]) * rd.beta[(i, d)]
                A[d, d, i] = -(s[i] / s[d]) * rd.beta[(i, d)]
        return A
    raise ValueError(f"unknown Lax form {form!r}")


def lax_zero_curvature_residual(rd: RotationData, lam: float, form: str = "3x3",
                                trim: int = 0) -> ResidualReport:
    """Max-entry norm of ``d_j A_i - d_i A_j + [A_i, A_j]`` for all pairs."""
    A = lax_matrices(rd, lam, form)
    h = rd.domain.spacing
    f = {}
    for i, j in itertools.combinations(range(rd.n), 2):
        Ai, Aj = A[i], A[j]
        comm = np.einsum("ab...,bc...->ac...", Ai, Aj) - np.einsum("ab...,bc...->ac...", Aj, Ai)
        R = d1(Ai, j + 2, h[j]) - d1(Aj, i + 2, h[i]) + comm
        f[f"F[{i + 1}{j + 1}]"] = _trim(np.abs(R).max(axis=(0, 1)), trim)
    _, cplx = spectral_roots(rd.eta_values(), lam)
    notes = [f"form={form}", f"lambda={lam:g}"]
    if cplx:
        notes.append("lambda + eta_i < 0 somewhere: principal complex roots used")
    return ResidualReport.from_fields(f"lax_{form}", f, rd.domain, notes=notes)


# --------------------------------------------------------------------------
# n >= 3


def darboux_residual(rd: RotationData, trim: int = 0, eta_tol: float = 1e-12) -> ResidualReport:
    """Residuals of both families of the Darboux-type system (and of d_i H_j).

    Nodes where two eta values coincide are excluded and counted.
    """
    n = rd.n
    if n == 2:
        rep = system4_residual(rd, trim)
        rep.name = "darboux(n=2)"
        return rep
    h = rd.domain.spacing
    eta = rd.eta_values()
    etap = rd.eta_prime_values()
    b = rd.beta
    f = {}
    with np.errstate(all="ignore"):
        for (i, j), bij in b.items():
            for k in range(n):
                if k not in (i, j):
                    f[f"S1[{i + 1}{j + 1},{k + 1}]"] = d1(bij, k, h[k]) - b[(i, k)] * b[(k, j)]
            den = eta[j] - eta[i]
            rhs = 0.5 * etap[i] / den * bij + 0.5 * etap[j] / den * b[(j, i)]
            for k in range(n):
                if k not in (i, j):
                    rhs = rhs + (eta[k] - eta[j]) / den * b[(k, i)] * b[(k, j)]
            r = d1(bij, i, h[i]) - rhs
            f[f"S2[{i + 1}{j + 1}]"] = np.where(np.abs(den) < eta_tol, np.nan, r)
            f[f"H[{i + 1}{j + 1}]"] = d1(rd.H[j], i, h[i]) - bij * rd.H[i]
    f = {k: _trim(v, trim) for k, v in f.items()}
    return ResidualReport.from_fields("darboux", f, rd.domain)


def _eta_funcs(eta):
    eta = [as_expr(e) for e in eta]
    etap = [e.diff(coord(i)) for i, e in enumerate(eta)]

    def ev(e, x):
        v = e.evaluate({coord(0): x, coord(1): x, coord(2): x, coord(3): x}, strict=False)
        return np.broadcast_to(np.asarray(v, dtype=float), np.shape(x))

    return eta, etap, ev


def _as_line_fn(v, axis):
    """Boundary data: number, expression in R^(axis+1), or callable."""
    if callable(v) and not isinstance(v, ScalarExpr):
        return lambda x: np.asarray(v(x), dtype=float)
    e = as_expr(v)
    other = e.coordinates - {coord(axis)}
    if other:
        raise LameError(f"boundary {e} must depend on {coord(axis)} only")

    def f(x):
        return np.broadcast_to(np.asarray(e.evaluate({coord(axis): x}, strict=False), dtype=float), x.shape)

    return f


def integrate_darboux(eta, boundary: dict, domain: GridDomain, H_boundary=None,
                      richardson: bool = True, **kw) -> RotationData:
    """Goursat solve of the rotation-coefficient system from line data.

    ``boundary[(i, j)]`` is ``beta_ij`` along the ``R^j`` axis through the
    lower corner (missing keys mean zero).  ``H_boundary[j]`` gives ``H_j``
    along the ``R^j`` axis (default 1).  For n = 2 the surface system is
    integrated, for n = 3 the Darboux-type system together with
    ``d_i H_j = beta_ij H_i``.
    """
    n = domain.dim
    if n not in (2, 3):
        raise ValueError("integrate_darboux supports n = 2 and n = 3")
    eta_e, etap_e, ev = _eta_funcs(eta)
    if len(eta_e) != n:
        raise ValueError("need one eta per coordinate")
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    nb = len(pairs)
    slot = {p: t for t, p in enumerate(pairs)}
    for key in boundary:
        if key not in slot:
            raise ValueError(f"bad boundary key {key}")
    data = [_as_line_fn(boundary.get(p, 0.0), p[1]) for p in pairs]
    Hb = list(H_boundary) if H_boundary is not None else [1.0] * n
    data += [_as_line_fn(Hb[j], j) for j in range(n)]
    free = [p[1] for p in pairs] + list(range(n))

    def rhs(d, U, X):
        out = np.zeros_like(U)
        B = {p: U[slot[p]] for p in pairs}
        H = U[nb:]
        et = [ev(eta_e[t], X[t]) for t in range(n)]
        if n == 2:
            # d_1 b12 = -d_2 b21 = (eta_1' b12/2 + eta_2' b21/2 + H_1 H_2) / (eta_2 - eta_1)
            x = (0.5 * ev(etap_e[0], X[0]) * B[(0, 1)] + 0.5 * ev(etap_e[1], X[1]) * B[(1, 0)]
                 + H[0] * H[1]) / (et[1] - et[0])
            out[slot[(0, 1)] if d == 0 else slot[(1, 0)]] = x if d == 0 else -x
        else:
            for (i, j), t in slot.items():
                if d == j:
                    continue
                if d == i:
                    den = et[j] - et[i]
                    r = (0.5 * ev(etap_e[i], X[i]) * B[(i, j)]
                         + 0.5 * ev(etap_e[j], X[j]) * B[(j, i)])
                    for k in range(n):
                        if k not in (i, j):
                            r = r + (et[k] - et[j]) * B[(k, i)] * B[(k, j)]
                    out[t] = r / den
                else:
                    out[t] = B[(i, d)] * B[(d, j)]
        for j in range(n):
            if d != j:
                out[nb + j] = B[(d, j)] * H[d]
        return out

    names = tuple(f"b{i + 1}{j + 1}" for i, j in pairs) + tuple(f"H{j + 1}" for j in range(n))
    prob = GoursatProblem(free, data, rhs, names)
    try:
        res = solve_goursat(prob, domain, richardson=richardson, **kw)
    except GoursatBlowup as exc:
        raise LameError(f"blow-up: {exc}", exc.locus) from None
    U = res.fields
    beta = {p: U[slot[p]] for p in pairs}
    H = tuple(U[nb + j] for j in range(n))
    return RotationData(H, beta, tuple(eta_e), domain,
                        meta={"error_ratio": res.error_ratio, "error_estimate": res.error_estimate,
                              "solver": "integrate_darboux"})


# --------------------------------------------------------------------------
# constant eta


def mu_constants(c) -> tuple:
    c1, c2, c3 = (float(x) for x in c)
    if not c3 > c2 > c1:
        raise ValueError("need c_3 > c_2 > c_1")
    return (math.sqrt((c3 - c2) / ((c2 - c1) * (c3 - c1))),
            math.sqrt((c3 - c1) / ((c2 - c1) * (c3 - c2))),
            math.sqrt((c2 - c1) / ((c3 - c1) * (c3 - c2))))


def const_eta_integrals(rd: RotationData) -> ConstEtaData:
    """First integrals for constant ``eta_i = c_i``.

    n >= 3: ``P_i = sum_k (c_k - c_i) beta_ki^2``.  n = 2 (surface system):
    ``P_1 = (c_2 - c_1) b21^2 + H_1^2`` and ``P_2 = (c_1 - c_2) b12^2 + H_2^2``.
    Each ``P_i`` should depend on ``R^i`` only; ``variation[i]`` is the
    largest spread of ``P_i`` along any other coordinate line.
    """
    c = rd.constant_eta()
    if c is None:
        raise LameError("const_eta_integrals needs constant eta")
    n = rd.n
    P = []
    for i in range(n):
        Pi = sum((c[k] - c[i]) * rd.beta[(k, i)] ** 2 for k in range(n) if k != i)
        if n == 2:
            Pi = Pi + rd.H[i] ** 2
        P.append(np.asarray(Pi, dtype=float))
    variation = []
    for i, Pi in enumerate(P):
        v = np.zeros(Pi.shape)
        for j in range(n):
            if j != i:
                spread = Pi.max(axis=j, keepdims=True) - Pi.min(axis=j, keepdims=True)
                v = np.maximum(v, np.broadcast_to(spread, Pi.shape))
        variation.append(v)
    mu = mu_constants(c) if n == 3 and c[2] > c[1] > c[0] else ()
    return ConstEtaData(tuple(c), P, variation, {}, mu, rd)


def gauge_residual(rd: RotationData, s) -> ResidualReport:
    """Check the reparametrization symmetry of the constant-eta systems.

    With ``R~^i = s_i(R^i)``, ``beta~_ki = beta_ki / s_i'`` and
    ``H~_i = H_i / s_i'``, derivatives in the new coordinates are
    ``d~_i = d_i / s_i'``; the residuals of the transformed fields are
    returned.
    """
    n = rd.n
    dom = rd.domain
    h = dom.spacing
    sp = []
    for i, si in enumerate(s):
        e = as_expr(si).diff(coord(i))
        sp.append(np.broadcast_to(np.asarray(e.evaluate(dom.bindings(), strict=False), float), dom.shape))
    B = {(k, i): b / sp[i] for (k, i), b in rd.beta.items()}
    H = [Hi / sp[i] for i, Hi in enumerate(rd.H)]

    def D(f, i):
        return d1(f, i, h[i]) / sp[i]

    c = rd.constant_eta()
    if c is None:
        raise LameError("gauge symmetry holds for constant eta")
    f = {}
    for (i, j), bij in B.items():
        f[f"H[{i + 1}{j + 1}]"] = D(H[j], i) - bij * H[i]
        for k in range(n):
            if k not in (i, j):
                f[f"S1[{i + 1}{j + 1},{k + 1}]"] = D(bij, k) - B[(i, k)] * B[(k, j)]
        r = D(bij, i)
        if n == 2:
            sgn = 1.0 if i == 0 else -1.0
            r = r - sgn * H[0] * H[1] / (c[1] - c[0])
        else:
            for k in range(n):
                if k not in (i, j):
                    r = r - (c[k] - c[j]) / (c[j] - c[i]) * B[(k, i)] * B[(k, j)]
        f[f"S2[{i + 1}{j + 1}]"] = r
    return ResidualReport.from_fields("gauge", f, dom)


def perturbed(rd: RotationData, key, eps: float = 1e-3, seed: int = 0) -> RotationData:
    """Copy of ``rd`` with smooth noise of size ``eps`` added to one field.

    ``key`` is ``("H", i)`` or ``("beta", (i, j))``.
    """
    rng = np.random.default_rng(seed)
    X = rd.domain.mesh()
    bump = np.ones(rd.domain.shape)
    for x in X:
        bump = bump * np.sin(rng.uniform(2, 5) * x + rng.uniform(0, 2 * np.pi))
    H = list(rd.H)
    beta = dict(rd.beta)
    kind, idx = key
    if kind == "H":
        H[idx] = H[idx] + eps * bump
    else:
        beta[idx] = beta[idx] + eps * bump
    return RotationData(tuple(H), beta, rd.eta, rd.domain, dict(rd.meta, perturbed=str(key)))


# --------------------------------------------------------------------------
# constant eta, n = 2: eta = (-1/2, 1/2)


def solve_goursat_ex8(phi0, psi0, domain: GridDomain, richardson: bool = True, **kw) -> RotationData:
    """Solve ``d_1 phi = sin psi``, ``d_2 psi = sinh phi``.

    ``phi0`` is given along the ``R^2`` axis, ``psi0`` along the ``R^1``
    axis.  The returned fields are ``H_1 = sin psi``, ``H_2 = sinh phi``,
    ``b12 = cosh phi``, ``b21 = cos psi`` with ``eta = (-1/2, 1/2)``; the
    angles are kept in ``meta``.
    """
    if domain.dim != 2:
        raise ValueError("Example 8 lives on a 2-d grid")

    def rhs(d, U, X):
        out = np.zeros_like(U)
        if d == 0:
            out[0] = np.sin(U[1])
        else:
            out[1] = np.sinh(U[0])
        return out

    prob = GoursatProblem((1, 0), [_as_line_fn(phi0, 1), _as_line_fn(psi0, 0)], rhs, ("phi", "psi"))
    try:
        res = solve_goursat(prob, domain, richardson=richardson, **kw)
    except GoursatBlowup as exc:
        raise LameError(str(exc), exc.locus) from None
    phi, psi = res.fields
    H = (np.sin(psi), np.sinh(phi))
    beta = {(0, 1): np.cosh(phi), (1, 0): np.cos(psi)}
    return RotationData(H, beta, EX8_ETA, domain,
                        meta={"phi": phi, "psi": psi, "error_ratio": res.error_ratio,
                              "error_estimate": res.error_estimate, "solver": "ex8"})


def ex8_boundary(phi0, psi0):
    """Line data for :func:`integrate_darboux` matching :func:`solve_goursat_ex8`."""
    phi = as_expr(phi0)
    psi = as_expr(psi0)
    boundary = {(0, 1): phi.apply("cosh"), (1, 0): psi.apply("cos")}
    H = [psi.apply("sin"), phi.apply("sinh")]
    return boundary, H


def ex8_residuals(rd: RotationData, chart_tol: float = 1e-6) -> ResidualReport:
    """First-order system and Monge-Ampere residuals for the angle fields.

    The first Monge-Ampere equation uses ``sqrt(1 - (d_1 phi)^2)`` which
    equals ``cos psi`` only on the chart ``cos psi >= 0``; nodes outside it
    or with radicand below ``chart_tol`` are excluded and counted.
    """
    phi, psi = rd.meta["phi"], rd.meta["psi"]
    h = rd.domain.spacing
    p1 = d1(phi, 0, h[0])
    q2 = d1(psi, 1, h[1])
    rad = 1.0 - p1 ** 2
    chart = (rad >= chart_tol) & (np.cos(psi) >= 0)
    with np.errstate(invalid="ignore"):
        ma1 = d1(p1, 1, h[1]) - np.sinh(phi) * np.sqrt(rad)
    f = {
        "d1phi": p1 - np.sin(psi),
        "d2psi": q2 - np.sinh(phi),
        "MA_phi": np.where(chart, ma1, np.nan),
        "MA_psi": d1(q2, 0, h[0]) - np.sin(psi) * np.sqrt(1.0 + q2 ** 2),
    }
    notes = [f"off-chart nodes: {int((~chart).sum())}"]
    return ResidualReport.from_fields("ex8", f, rd.domain, notes=notes)


# --------------------------------------------------------------------------
# constant eta, n = 3: the (p, q, r) triple


def _triple_rhs_hat(mu, c):
    """Right-hand sides in rescaled coordinates, fields (p, q, r, H1, H2, H3)."""
    def rhs(d, U, X):
        p, q, r = U[0], U[1], U[2]
        H = U[3:]
        out = np.zeros_like(U)
        if d == 0:
            out[1] = np.cos(p)
            out[2] = -np.sin(p)
        elif d == 1:
            out[0] = -np.cosh(q)
            out[2] = np.sinh(q)
        else:
            out[0] = np.cos(r)
            out[1] = np.sin(r)
        B = _triple_beta(p, q, r, c)
        for j in range(3):
            if j != d:
                out[3 + j] = B[(d, j)] * H[d] / mu[d]
        return out
    return rhs


def _triple_beta(p, q, r, c):
    """Rotation coefficients (original coordinates) from the angles."""
    c1, c2, c3 = c
    return {
        (1, 0): np.sin(p) / math.sqrt(c2 - c1), (2, 0): np.cos(p) / math.sqrt(c3 - c1),
        (0, 1): np.sinh(q) / math.sqrt(c2 - c1), (2, 1): np.cosh(q) / math.sqrt(c3 - c2),
        (0, 2): np.sin(r) / math.sqrt(c3 - c1), (1, 2): np.cos(r) / math.sqrt(c3 - c2),
    }


def solve_triple_s2(p0, q0, r0, domain: GridDomain, c=(0.0, 1.0, 3.0), richardson: bool = True,
                    **kw) -> ConstEtaData:
    """Solve the rescaled (p, q, r) system and map it to rotation coefficients.

    ``domain`` is in the rescaled coordinates ``R^i_hat = mu_i R^i``; ``p0``,
    ``q0``, ``r0`` are given along the first, second and third axis
    respectively.  The rotation data are returned in the original
    coordinates (grid ``R^i = R^i_hat / mu_i``) with ``eta = c`` and Lame
    coefficients integrated from unit values on their own axes.
    """
    if domain.dim != 3:
        raise ValueError("the triple needs a 3-d grid")
    c = tuple(float(x) for x in c)
    mu = mu_constants(c)
    try:
        prob = GoursatProblem((0, 1, 2, 0, 1, 2),
                              [_as_line_fn(p0, 0), _as_line_fn(q0, 1), _as_line_fn(r0, 2),
                               lambda x: np.ones_like(x), lambda x: np.ones_like(x),
                               lambda x: np.ones_like(x)],
                              _triple_rhs_hat(mu, c), ("p", "q", "r", "H1", "H2", "H3"))
        res = solve_goursat(prob, domain, richardson=richardson, **kw)
    except GoursatBlowup as exc:
        raise LameError(str(exc), exc.locus) from None
    p, q, r = res.fields[:3]
    H = tuple(res.fields[3:])
    beta = _triple_beta(p, q, r, c)
    orig = GridDomain(tuple(a / m for a, m in zip(domain.start, mu)),
                      tuple(b / m for b, m in zip(domain.stop, mu)), domain.N)
    rd = RotationData(H, beta, tuple(str(x) for x in c), orig,
                      meta={"error_ratio": res.error_ratio, "error_estimate": res.error_estimate,
                            "solver": "triple", "hat_domain": domain})
    data = const_eta_integrals(rd)
    data.angles = {"p": p, "q": q, "r": r}
    data.meta = dict(rd.meta)
    return data


def triple_boundary(p0: float, q0: float, r0: float, c=(0.0, 1.0, 3.0)):
    """Exact axis data of the triple for constant corner data.

    Returns ``(boundary, domain_scale)`` for :func:`integrate_darboux` in
    the original coordinates: ``beta_ij`` along the ``R^j`` axis.
    """
    c1, c2, c3 = (float(x) for x in c)
    mu = mu_constants(c)
    x1, x2, x3 = (as_expr(f"{m!r}*R{i + 1}") for i, m in enumerate(mu))
    p0, q0, r0 = float(p0), float(q0), float(r0)
    p_on1 = as_expr(p0) + 0 * x1
    q_on2 = as_expr(q0) + 0 * x2
    r_on3 = as_expr(r0) + 0 * x3
    a21 = math.sqrt(c2 - c1)
    a31 = math.sqrt(c3 - c1)
    a32 = math.sqrt(c3 - c2)
    boundary = {
        (1, 0): p_on1.apply("sin") / a21, (2, 0): p_on1.apply("cos") / a31,
        (0, 1): q_on2.apply("sinh") / a21, (2, 1): q_on2.apply("cosh") / a32,
        (0, 2): r_on3.apply("sin") / a31, (1, 2): r_on3.apply("cos") / a32,
    }
    return boundary


def triple_residuals(data: ConstEtaData, chart_tol: float = 1e-6) -> ResidualReport:
    """First-order, Monge-Ampere and commutativity residuals (rescaled grid).

    The Monge-Ampere forms hold on the chart ``sin p >= 0``, ``cos r >= 0``;
    other nodes are excluded and counted.
    """
    p, q, r = data.angles["p"], data.angles["q"], data.angles["r"]
    dom = data.rd.meta["hat_domain"]
    h = dom.spacing

    def D(f, i):
        return d1(f, i, h[i])

    q1, q3 = D(q, 0), D(q, 2)
    rad1 = 1 - q1 ** 2
    rad3 = 1 - q3 ** 2
    chart = (np.sin(p) >= 0) & (np.cos(r) >= 0) & (rad1 >= chart_tol) & (rad3 >= chart_tol)
    with np.errstate(invalid="ignore"):
        s1, s3 = np.sqrt(rad1), np.sqrt(rad3)
        f = {
            "d1q": q1 - np.cos(p), "d1r": D(r, 0) + np.sin(p),
            "d2p": D(p, 1) + np.cosh(q), "d2r": D(r, 1) - np.sinh(q),
            "d3p": D(p, 2) - np.cos(r), "d3q": q3 - np.sin(r),
            "MA12": np.where(chart, D(q1, 1) - np.cosh(q) * s1, np.nan),
            "MA13": np.where(chart, D(q1, 2) + s1 * s3, np.nan),
            "MA23": np.where(chart, D(q3, 1) - np.sinh(q) * s3, np.nan),
            "comm_p": D(-np.cosh(q), 2) - D(np.cos(r), 1),
            "comm_q": D(np.cos(p), 2) - D(np.sin(r), 0),
            "comm_r": D(-np.sin(p), 1) - D(np.sinh(q), 0),
        }
    return ResidualReport.from_fields("triple", f, dom, notes=[f"off-chart nodes: {int((~chart).sum())}"])
