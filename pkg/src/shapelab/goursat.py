"""Characteristic (Goursat) marching for first-order systems on a box.

Each unknown ``u_f`` has one *free* axis: its values are prescribed on the
coordinate line through the lower corner along that axis, and a derivative
equation ``d_d u_f = F_{f,d}(R, u)`` is supplied for every other axis.
Nodes are swept by anti-diagonal wavefronts; a node value is obtained from
its backward neighbour along the lowest usable axis with an implicit
trapezoidal step, solved by fixed-point iteration.  All nodes of a
wavefront are updated together.

The step is symmetric, so the error expands in even powers of h and two
Richardson passes over refinement factors 1, 2, 4 are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import GridDomain

__all__ = ["GoursatProblem", "GoursatResult", "GoursatBlowup", "solve_goursat", "march"]

BLOWUP = 1e6


class GoursatBlowup(FloatingPointError):
    def __init__(self, message, locus):
        super().__init__(message)
        self.locus = locus


@dataclass
class GoursatProblem:
    """``rhs(d, U, X)`` returns the ``(F, m)`` array of ``d_d u`` at ``m`` nodes.

    ``U`` is ``(F, m)`` and ``X`` a list of coordinate arrays.  Rows of
    fields whose free axis is ``d`` are ignored.  ``data[f]`` maps the
    free-axis coordinate to the prescribed values of field ``f``.
    """

    free_axis: Sequence[int]
    data: Sequence[Callable[[np.ndarray], np.ndarray]]
    rhs: Callable
    names: Sequence[str] = ()
    dtype: type = float

    @property
    def nfields(self) -> int:
        return len(self.free_axis)


@dataclass
class GoursatResult:
    domain: GridDomain
    fields: np.ndarray  # (F, *shape), extrapolated
    names: tuple
    levels: list = field(default_factory=list, repr=False)
    error_ratio: float = float("nan")
    error_estimate: float = float("nan")

    def __getitem__(self, key):
        if isinstance(key, str):
            key = self.names.index(key)
        return self.fields[key]


def _wavefronts(shape):
    n = len(shape)
    idx = np.indices(shape).reshape(n, -1)
    s = idx.sum(0)
    order = np.argsort(s, kind="stable")
    cuts = np.searchsorted(s[order], np.arange(sum(shape) - n + 2))
    return idx, order, cuts


def march(prob: GoursatProblem, dom: GridDomain, maxit: int = 60, tol: float = 1e-14,
          order: str = "wavefront", prefer: str = "lowest") -> np.ndarray:
    """Solve on the nodes of ``dom`` without extrapolation.

    ``order`` selects how nodes are visited: ``"wavefront"`` (vectorized)
    or one node at a time in ``"row"`` / ``"column"`` major order.  Every
    node only reads its backward neighbours, so the visiting order does
    not change the discrete solution.  ``prefer`` picks the step axis
    among the usable ones (``"lowest"`` or ``"highest"``); that does change
    the discretization when a field has more than one derivative equation.
    """
    shape = dom.shape
    n = dom.dim
    F = prob.nfields
    axes = dom.axes
    h = dom.spacing
    strides = np.array([int(np.prod(shape[d + 1:])) for d in range(n)])
    U = np.full((F, int(np.prod(shape))), np.nan, dtype=prob.dtype)
    idx, front_order, cuts = _wavefronts(shape)
    X = [axes[d][idx[d]] for d in range(n)]

    for f, a in enumerate(prob.free_axis):
        flat = np.arange(shape[a]) * strides[a]
        vals = np.asarray(prob.data[f](axes[a]), dtype=prob.dtype)
        U[f, flat] = np.broadcast_to(vals, (shape[a],))

    # direction of the step for each field at each node: lowest non-free
    # axis whose index is positive (-1 means "on the data line")
    direc = np.full((F, idx.shape[1]), -1, dtype=int)
    sweep = reversed(range(n)) if prefer == "lowest" else range(n)
    for d in sweep:
        for f, a in enumerate(prob.free_axis):
            if d != a:
                direc[f, idx[d] > 0] = d

    if order != "wavefront":
        _march_sequential(prob, U, X, direc, strides, h, shape, order, maxit, tol)
        return U.reshape((F,) + shape)

    for s in range(1, len(cuts) - 1):
        cur = front_order[cuts[s]:cuts[s + 1]]
        if cur.size == 0:
            continue
        Xc = [x[cur] for x in X]
        plan = []
        for d in range(n):
            use = np.zeros(cur.size, dtype=bool)
            rows = []
            for f in range(F):
                sel = direc[f, cur] == d
                rows.append(sel)
                use |= sel
            if not use.any():
                continue
            pos = np.nonzero(use)[0]
            back = cur[pos] - strides[d]
            Xb = [x[back] for x in X]
            rb = np.asarray(prob.rhs(d, U[:, back], Xb), dtype=prob.dtype)
            Xd = [x[pos] for x in Xc]
            sub = [np.nonzero(r[pos])[0] for r in rows]
            plan.append((d, pos, back, rb, Xd, sub))
        # explicit Euler predictor
        for d, pos, back, rb, Xd, sub in plan:
            for f in range(F):
                q = sub[f]
                if q.size:
                    U[f, cur[pos[q]]] = U[f, back[q]] + h[d] * rb[f, q]
        for _ in range(maxit):
            change = 0.0
            new = {}
            for d, pos, back, rb, Xd, sub in plan:
                rc = np.asarray(prob.rhs(d, U[:, cur[pos]], Xd), dtype=prob.dtype)
                for f in range(F):
                    q = sub[f]
                    if q.size:
                        new[(f, d)] = (cur[pos[q]], U[f, back[q]] + 0.5 * h[d] * (rb[f, q] + rc[f, q]))
            for (f, d), (where, val) in new.items():
                old = U[f, where]
                scale = 1.0 + np.abs(val)
                with np.errstate(invalid="ignore"):
                    change = max(change, float(np.nanmax(np.abs(val - old) / scale)) if val.size else 0.0)
                U[f, where] = val
            if change < tol:
                break
        front = U[:, cur]
        bad = ~np.isfinite(front) | (np.abs(front) > BLOWUP)
        if bad.any():
            k = np.nonzero(bad.any(0))[0][0]
            locus = [float(x[k]) for x in Xc]
            raise GoursatBlowup(f"solution left |u| <= {BLOWUP:g} on wavefront {s} at R={locus}", locus)
    return U.reshape((F,) + shape)


def _march_sequential(prob, U, X, direc, strides, h, shape, order, maxit, tol):
    n = len(shape)
    F = prob.nfields
    if order == "row":
        perm = list(range(n))
    elif order == "column":
        perm = list(reversed(range(n)))
    else:
        raise ValueError(f"unknown marching order {order!r}")
    for tup in np.ndindex(*[shape[p] for p in perm]):
        node = [0] * n
        for p, t in zip(perm, tup):
            node[p] = t
        k = int(np.dot(node, strides))
        todo = [(f, int(direc[f, k])) for f in range(F) if direc[f, k] >= 0]
        if not todo:
            continue
        xk = [x[k:k + 1] for x in X]
        rb = {}
        for d in {d for _, d in todo}:
            b = k - strides[d]
            rb[d] = prob.rhs(d, U[:, b:b + 1], [x[b:b + 1] for x in X])[:, 0]
        for f, d in todo:
            U[f, k] = U[f, k - strides[d]] + h[d] * rb[d][f]
        for _ in range(maxit):
            change = 0.0
            rc = {d: prob.rhs(d, U[:, k:k + 1], xk)[:, 0] for d in rb}
            for f, d in todo:
                val = U[f, k - strides[d]] + 0.5 * h[d] * (rb[d][f] + rc[d][f])
                change = max(change, abs(val - U[f, k]) / (1.0 + abs(val)))
                U[f, k] = val
            if change < tol:
                break
        if not np.all(np.isfinite(U[:, k])) or np.any(np.abs(U[:, k]) > BLOWUP):
            locus = [float(x[k]) for x in X]
            raise GoursatBlowup(f"solution left |u| <= {BLOWUP:g} at R={locus}", locus)


def solve_goursat(prob: GoursatProblem, dom: GridDomain, richardson: bool = True,
                  factors=(1, 2, 4), **kw) -> GoursatResult:
    """March on ``dom`` and (by default) on two refinements, then extrapolate.

    ``error_ratio`` is ``max|u_1 - u_2| / max|u_2 - u_4|`` on the common
    nodes; it is close to 4 for a second-order scheme.
    """
    names = tuple(prob.names) or tuple(f"u{i}" for i in range(prob.nfields))
    base = GridDomain(dom.start, dom.stop, dom.N)
    if not richardson:
        U = march(prob, base, **kw)
        return GoursatResult(dom, U, names, [U])
    levels = []
    for k in factors:
        U = march(prob, base.refined(k), **kw)
        sl = (slice(None),) + (slice(None, None, k),) * dom.dim
        levels.append(U[sl])
    f1, f2, f4 = levels
    r1 = (4.0 * f2 - f1) / 3.0
    r2 = (4.0 * f4 - f2) / 3.0
    R = (16.0 * r2 - r1) / 15.0
    e12 = float(np.max(np.abs(f1 - f2)))
    e24 = float(np.max(np.abs(f2 - f4)))
    ratio = e12 / e24 if e24 > 0 else float("inf")
    est = float(np.max(np.abs(R - r2)))
    return GoursatResult(dom, R, names, levels, ratio, est)
