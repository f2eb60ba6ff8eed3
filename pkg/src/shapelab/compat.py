"""Compatibility of two Hamiltonian operators of hydrodynamic type.

Given flat contravariant metrics ``g`` and ``g~`` with affinor
``r^i_j = g~^{is} g_{sj}``, the operators are compatible iff

* the Nijenhuis tensor of ``r`` vanishes, and
* ``nabla^i nabla^j r^{kl} + nabla^k nabla^l r^{ij}
  - nabla^i nabla^k r^{jl} - nabla^j nabla^l r^{ik} = 0``,

and then the coefficients ``b~^{ij}_k`` of the second operator are
``2 b~^{ij}_k = nabla^i r^j_k - nabla^j r^i_k + nabla_k r^{ij} + 2 b^{sj}_k r^i_s``.

Every derivative is taken symbolically (metric coefficients and ``r`` are
:class:`ScalarExpr`); the tensors are then evaluated on grid nodes and
contracted numerically.  Index layout: tensor indices first, grid last.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .expr import ScalarExpr, as_expr, const
from .grid import GridDomain, ResidualReport
from .metric import DiagonalMetric, coord

__all__ = [
    "OperatorField",
    "nijenhuis",
    "nijenhuis_field",
    "nabla_condition_residual",
    "btilde_coeffs",
    "direct_b",
    "riemann_field",
    "flatness_check",
    "theorem1_report",
    "VERDICT_TOL",
]

VERDICT_TOL = 1e-6
_ZERO = const(0.0)


def _grid_eval(e: ScalarExpr, env: dict, shape) -> np.ndarray:
    if e.is_zero():
        return np.zeros(shape)
    return np.broadcast_to(np.asarray(e.evaluate(env, strict=False), dtype=float), shape)


def _christoffel(gl) -> list:
    """Symbolic ``Gamma[i][j][k] = Gamma^i_{jk}`` of the diagonal metric ``gl`` (covariant)."""
    n = len(gl)
    d = [[g.diff(coord(a)) for g in gl] for a in range(n)]  # d[a][i] = d_a g_ii
    Gam = [[[_ZERO] * n for _ in range(n)] for _ in range(n)]
    for i, j, k in itertools.product(range(n), repeat=3):
        t = _ZERO
        if k == i:
            t = t + d[j][i]
        if j == i:
            t = t + d[k][i]
        if j == k:
            t = t - d[i][j]
        if not t.is_zero():
            Gam[i][j][k] = 0.5 * t / gl[i]
    return Gam


@dataclass
class OperatorField:
    """Affinor ``r[i][j] = r^i_j`` and diagonal contravariant metric ``g[i] = g^{ii}``."""

    r: tuple
    g: tuple
    domain: GridDomain
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.g)
        self.g = tuple(as_expr(x, self.params) for x in self.g)
        self.r = tuple(tuple(as_expr(x, self.params) for x in row) for row in self.r)
        if len(self.r) != n or any(len(row) != n for row in self.r) or self.domain.dim != n:
            raise ValueError("r must be n x n, with n the dimension of g and the domain")

    @property
    def n(self) -> int:
        return len(self.g)

    @classmethod
    def from_metrics(cls, g: DiagonalMetric, gt: DiagonalMetric, domain: GridDomain | None = None,
                     scale: float = 1.0) -> OperatorField:
        """``r = scale * g~^{is} g_{sj}`` from two covariant diagonal metrics."""
        n = g.n
        r = [[_ZERO] * n for _ in range(n)]
        for i in range(n):
            r[i][i] = scale * g.G[i] / gt.G[i]
        params = dict(g.params)
        params.update(gt.params)
        return cls(tuple(map(tuple, r)), tuple(1 / x for x in g.G), domain or g.domain, params)

    # -- symbolic pieces ------------------------------------------------
    @cached_property
    def gamma(self):
        return _christoffel([1 / x for x in self.g])

    def _env(self, domain=None):
        dom = domain or self.domain
        return dom.bindings(self.params), dom.shape

    def tensors(self, domain: GridDomain | None = None, env=None, shape=None) -> dict:
        """All evaluated tensors needed by the conditions (grid axes last)."""
        if env is None:
            env, shape = self._env(domain)
        n = self.n
        R = [coord(a) for a in range(n)]
        ev = lambda e: _grid_eval(e, env, shape)
        out = {}
        out["gu"] = np.array([ev(x) for x in self.g])
        out["dgu"] = np.array([[ev(x.diff(R[a])) for x in self.g] for a in range(n)])
        out["ddgu"] = np.array([[[ev(x.diff(R[a]).diff(R[b])) for x in self.g] for b in range(n)]
                                for a in range(n)])
        out["r"] = np.array([[ev(x) for x in row] for row in self.r])
        dr = [[[x.diff(R[a]) for x in row] for row in self.r] for a in range(n)]
        out["dr"] = np.array([[[ev(x) for x in row] for row in m] for m in dr])
        out["ddr"] = np.array([[[[ev(x.diff(R[b])) for x in row] for row in dr[a]] for b in range(n)]
                               for a in range(n)])
        G = self.gamma
        out["Gam"] = np.array([[[ev(G[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)])
        out["dGam"] = np.array([[[[ev(G[i][j][k].diff(R[a])) for k in range(n)] for j in range(n)]
                                 for i in range(n)] for a in range(n)])
        return out

    def symmetry_residual(self, domain: GridDomain | None = None) -> float:
        """``max |r^i_s g^{sj} - r^j_s g^{si}|``."""
        t = self.tensors(domain)
        T = t["r"] * t["gu"][None]
        return float(np.abs(T - np.swapaxes(T, 0, 1)).max())


# --------------------------------------------------------------------------
# the conditions


def _nijenhuis_from(t) -> np.ndarray:
    r, dr = t["r"], t["dr"]
    # N^i_{jk} = r^s_j d_s r^i_k - r^s_k d_s r^i_j - r^i_s (d_j r^s_k - d_k r^s_j)
    a = np.einsum("sj...,sik...->ijk...", r, dr)
    x = np.einsum("is...,jsk...->ijk...", r, dr)
    return a - np.swapaxes(a, 1, 2) - (x - np.swapaxes(x, 1, 2))


def nijenhuis(op: OperatorField, pt) -> np.ndarray:
    """``N[i, j, k] = N^i_{jk}`` at a single point."""
    env = dict(op.params)
    env.update({coord(a): float(x) for a, x in enumerate(pt)})
    t = op.tensors(env=env, shape=())
    return _nijenhuis_from(t)


def nijenhuis_field(op: OperatorField, domain: GridDomain | None = None) -> np.ndarray:
    return _nijenhuis_from(op.tensors(domain))


def _nabla_T(t):
    """``T^{kl} = r^k_s g^{sl}``, ``D1[b,k,l] = nabla_b T^{kl}`` and ``D2[a,b,k,l] = nabla_a nabla_b T^{kl}``."""
    gu, dgu, ddgu = t["gu"], t["dgu"], t["ddgu"]
    r, dr, ddr = t["r"], t["dr"], t["ddr"]
    Gam, dGam = t["Gam"], t["dGam"]
    T = r * gu[None]
    dT = dr * gu[None, None] + r[None] * dgu[:, None]
    ddT = (ddr * gu[None, None, None] + dr[:, None] * dgu[None, :, None]
           + dr[None] * dgu[:, None, None] + r[None, None] * ddgu[:, :, None])
    D1 = (dT + np.einsum("kbm...,ml...->bkl...", Gam, T) + np.einsum("lbm...,km...->bkl...", Gam, T))
    dD1 = (ddT
           + np.einsum("akbm...,ml...->abkl...", dGam, T) + np.einsum("kbm...,aml...->abkl...", Gam, dT)
           + np.einsum("albm...,km...->abkl...", dGam, T) + np.einsum("lbm...,akm...->abkl...", Gam, dT))
    D2 = (dD1 - np.einsum("mab...,mkl...->abkl...", Gam, D1)
          + np.einsum("kam...,bml...->abkl...", Gam, D1) + np.einsum("lam...,bkm...->abkl...", Gam, D1))
    return T, D1, D2


def _nabla_condition_from(t) -> np.ndarray:
    _, _, D2 = _nabla_T(t)
    gu = t["gu"]
    U = D2 * gu[:, None, None, None] * gu[None, :, None, None]   # nabla^i nabla^j r^{kl}
    return (U + np.einsum("klij...->ijkl...", U) - np.einsum("ikjl...->ijkl...", U)
            - np.einsum("jlik...->ijkl...", U))


def nabla_condition_residual(op: OperatorField, domain: GridDomain | None = None) -> ResidualReport:
    """Largest violation of the second-covariant-derivative condition."""
    dom = domain or op.domain
    res = _nabla_condition_from(op.tensors(dom))
    return ResidualReport.from_fields("nabla_condition", {"nabla": np.abs(res).max(axis=(0, 1, 2, 3))}, dom)


def _btilde_from(t) -> np.ndarray:
    gu, r, dr, Gam = t["gu"], t["r"], t["dr"], t["Gam"]
    _, D1, _ = _nabla_T(t)
    # nabla_a r^j_k
    Dr = dr + np.einsum("jam...,mk...->ajk...", Gam, r) - np.einsum("mak...,jm...->ajk...", Gam, r)
    b = -gu[:, None, None] * np.einsum("jsk...->sjk...", Gam)   # b^{sj}_k = -g^{ss} Gamma^j_{sk}
    two = (gu[:, None, None] * Dr - np.einsum("jik...->ijk...", gu[:, None, None] * Dr)
           + np.einsum("kij...->ijk...", D1) + 2 * np.einsum("sjk...,is...->ijk...", b, r))
    return 0.5 * two


def btilde_coeffs(op: OperatorField, domain: GridDomain | None = None, nijenhuis_tol: float = 1e-8):
    """``(bt, warnings)`` with ``bt[i, j, k] = b~^{ij}_k`` on the grid.

    The formula assumes a vanishing Nijenhuis tensor; a warning is
    attached when it exceeds ``nijenhuis_tol``.
    """
    t = op.tensors(domain)
    warnings = []
    N = float(np.abs(_nijenhuis_from(t)).max())
    if N > nijenhuis_tol:
        warnings.append(f"Nijenhuis tensor does not vanish (max {N:.3e}); formula not applicable")
    return _btilde_from(t), warnings


def direct_b(gt_up, domain: GridDomain, params=None) -> np.ndarray:
    """``-g^{is} Gamma^j_{sk}`` computed straight from a diagonal contravariant metric."""
    gt_up = [as_expr(x, params or {}) for x in gt_up]
    n = len(gt_up)
    Gam = _christoffel([1 / x for x in gt_up])
    env, shape = domain.bindings(params or {}), domain.shape
    out = np.zeros((n, n, n) + shape)
    for i, j, k in itertools.product(range(n), repeat=3):
        out[i, j, k] = -_grid_eval(gt_up[i], env, shape) * _grid_eval(Gam[j][i][k], env, shape)
    return out


def riemann_field(gl, domain: GridDomain, params=None) -> np.ndarray:
    """``R[i, j, k, l] = R^i_{jkl}`` of a diagonal covariant metric, on the grid."""
    gl = [as_expr(x, params or {}) for x in gl]
    n = len(gl)
    G = _christoffel(gl)
    env, shape = domain.bindings(params or {}), domain.shape
    Gam = np.array([[[_grid_eval(G[i][j][k], env, shape) for k in range(n)] for j in range(n)]
                    for i in range(n)])
    dGam = np.array([[[[_grid_eval(G[i][j][k].diff(coord(a)), env, shape) for k in range(n)]
                       for j in range(n)] for i in range(n)] for a in range(n)])
    # R^i_{jkl} = d_k Gamma^i_{lj} - d_l Gamma^i_{kj} + Gamma^i_{km} Gamma^m_{lj} - Gamma^i_{lm} Gamma^m_{kj}
    a = np.einsum("kilj...->ijkl...", dGam)
    q = np.einsum("ikm...,mlj...->ijkl...", Gam, Gam)
    return a - np.swapaxes(a, 2, 3) + q - np.swapaxes(q, 2, 3)


def flatness_check(m: DiagonalMetric, domain: GridDomain | None = None) -> ResidualReport:
    dom = domain or m.domain
    R = riemann_field(m.G, dom, m.params)
    return ResidualReport.from_fields("flatness", {"riemann": np.abs(R).max(axis=(0, 1, 2, 3))}, dom)


def _multiplicity(r: np.ndarray, tol=1e-9) -> int:
    """Number of nodes where two eigenvalues of ``r`` coincide."""
    n = r.shape[0]
    M = np.moveaxis(r.reshape(n, n, -1), -1, 0)
    ev = np.sort(np.linalg.eigvals(M).real, axis=1)
    gaps = np.diff(ev, axis=1)
    return int((gaps < tol * np.maximum(1.0, np.abs(ev[:, 1:]))).any(axis=1).sum())


def theorem1_report(g: DiagonalMetric, gt: DiagonalMetric, domain: GridDomain | None = None,
                    tol: float = VERDICT_TOL) -> dict:
    """Verdict on the compatibility of the operators defined by ``g`` and ``g~``.

    Both metrics are covariant diagonal expression metrics.  Non-flat
    inputs are rejected before the conditions are evaluated.  ``r`` is
    rescaled so that its largest entry on the grid is 1.
    """
    dom = domain or g.domain
    out = {"n": g.n, "grid": dom.meta(), "tol": tol}
    flat = {"g": flatness_check(g, dom).max_residual, "g~": flatness_check(gt, dom).max_residual}
    out["flatness"] = flat
    if max(flat.values()) > tol:
        out.update(verdict="rejected", passes=False,
                   reason="input metric not flat", residual=max(flat.values()))
        return out
    op0 = OperatorField.from_metrics(g, gt, dom)
    t0 = op0.tensors(dom)
    scale = 1.0 / float(np.abs(t0["r"]).max())
    op = OperatorField.from_metrics(g, gt, dom, scale=scale)
    t = op.tensors(dom)
    N = np.abs(_nijenhuis_from(t)).max()
    nab = np.abs(_nabla_condition_from(t)).max()
    bt = _btilde_from(t)
    gt_up = [scale / x for x in gt.G]
    params = dict(g.params)
    params.update(gt.params)
    bd = direct_b(gt_up, dom, params)
    cons = np.abs(bt - bd).max()
    res = {"nijenhuis": float(N), "nabla": float(nab), "btilde": float(cons)}
    worst = max(res.values())
    out.update(scale=scale, conditions=res, residual=worst,
               multiple_spectrum_nodes=_multiplicity(t["r"]),
               passes=bool(worst <= tol), verdict="compatible" if worst <= tol else "not compatible")
    return out
