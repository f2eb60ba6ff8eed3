"""Moving frames of the lambda-deformed orthogonal nets.

For n >= 3 the rows of the frame matrix are the unit vectors along the
coordinate lines of an n-orthogonal system in E^n, transported by

    d_j phi_i = (s_i / s_j) b_ij phi_j,   d_i phi_i = -sum_k (s_k / s_i) b_ki phi_k,

with ``s_i = sqrt(lambda + eta_i)``, and ``d_i r = (H_i / s_i) phi_i``.
Surface data (n = 2) describe an orthogonal net on the unit sphere: the
frame is ``(phi_1, phi_2, nu)`` in E^3 and the position is the point
``nu`` itself, with ``d_i nu = (H_i / s_i) phi_i``.

When ``lambda + eta_i < 0`` somewhere the principal complex root is used and
the frame is complex orthogonal (``Phi Phi^T = I``, no conjugation).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .catalog import CurvatureField
from .grid import GridDomain, ResidualReport, d1, interp_mid
from .lame import RotationData, spectral_roots

__all__ = [
    "FrameField",
    "FrameError",
    "connection",
    "integrate_frame",
    "transport",
    "path_independence",
    "hypersurface_shape",
    "scaling_law_check",
]

DRIFT_ABORT = 1e-4


class FrameError(RuntimeError):
    def __init__(self, message, locus=None):
        super().__init__(message)
        self.locus = locus


def connection(rd: RotationData, lam: float):
    """``(A, c, s)``: ``A[d]`` of shape ``(*grid, m, m)`` with ``d_d Phi = A[d] Phi``,
    ``c[d] = H_d / s_d`` and the roots ``s``."""
    n = rd.n
    s, cplx = spectral_roots(rd.eta_values(), lam)
    dt = complex if cplx else float
    shape = rd.domain.shape
    m = n + 1 if n == 2 else n
    A = np.zeros((n,) + shape + (m, m), dtype=dt)
    for d in range(n):
        for i in range(n):
            if i == d:
                continue
            w = (s[i] / s[d]) * rd.beta[(i, d)]
            A[d][..., i, d] = w
            A[d][..., d, i] = -w
        if n == 2:
            A[d][..., d, 2] = -rd.H[d] / s[d]
            A[d][..., 2, d] = rd.H[d] / s[d]
    c = [rd.H[d] / s[d] for d in range(n)]
    return A, c, s


@dataclass
class FrameField:
    lam: float
    frame: np.ndarray      # (*grid, m, m), rows are the frame vectors
    position: np.ndarray   # (*grid, m)
    rd: RotationData = field(repr=False)
    path: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.rd.n

    @property
    def domain(self) -> GridDomain:
        return self.rd.domain

    def gram_drift(self) -> float:
        F = self.frame
        G = np.einsum("...ab,...cb->...ac", F, F)
        return float(np.abs(G - np.eye(F.shape[-1])).max())

    def metric_match(self, trim: int = 0) -> ResidualReport:
        """``(d_i r, d_j r) - delta_ij H_i^2 / (lambda + eta_i)`` by differences."""
        h = self.domain.spacing
        dr = [d1(self.position, i, h[i]) for i in range(self.n)]
        s, _ = spectral_roots(self.rd.eta_values(), self.lam)
        f = {}
        for i in range(self.n):
            for j in range(i, self.n):
                g = np.einsum("...a,...a->...", dr[i], dr[j])
                if i == j:
                    g = g - self.rd.H[i] ** 2 / s[i] ** 2
                f[f"g[{i + 1}{j + 1}]"] = _trim(np.abs(g), trim)
        return ResidualReport.from_fields("metric_match", f, self.domain)

    def mixed_partials(self, trim: int = 0) -> ResidualReport:
        """``d_j (c_i phi_i) - d_i (c_j phi_j)``: compatibility of the position equations."""
        h = self.domain.spacing
        _, c, _ = connection(self.rd, self.lam)
        f = {}
        for i, j in itertools.combinations(range(self.n), 2):
            a = d1(c[i][..., None] * self.frame[..., i, :], j, h[j])
            b = d1(c[j][..., None] * self.frame[..., j, :], i, h[i])
            f[f"r[{i + 1}{j + 1}]"] = _trim(np.abs(a - b).max(axis=-1), trim)
        return ResidualReport.from_fields("mixed_partials", f, self.domain)


def _trim(a, trim):
    if not trim:
        return a
    return a[(slice(trim, -trim),) * a.ndim]


def _mm(A, Y):
    return np.einsum("...ab,...bc->...ac", A, Y)


def transport(A, c, domain: GridDomain, F0, r0, path=None, reorthonormalize: bool = False):
    """RK4 transport of ``d_d Phi = A[d] Phi``, ``d_d r = c[d] Phi[d]`` from the lower corner.

    ``A[d]`` has shape ``(*grid, m, m)`` and ``c[d]`` the grid shape.  Axes
    are swept in ``path`` order (default ``0, 1, ...``): first along the
    first axis from the corner, then every node reached so far is
    continued along the second axis, and so on.  Coefficients at
    half-steps use cubic interpolation of the tabulated fields.  Returns
    ``(Phi, r)``.
    """
    n = domain.dim
    shape = domain.shape
    h = domain.spacing
    m = A[0].shape[-1]
    dt = np.result_type(*(a.dtype for a in A), *(np.asarray(x).dtype for x in c))
    path = tuple(range(n)) if path is None else tuple(path)
    if sorted(path) != list(range(n)):
        raise ValueError(f"bad path {path}")
    Phi = np.full(shape + (m, m), np.nan, dtype=dt)
    R = np.full(shape + (len(r0),), np.nan, dtype=dt)
    Phi[(0,) * n] = F0
    R[(0,) * n] = r0
    eye = np.eye(m)

    done = set()
    for d in path:
        Ad = A[d]
        Amid = interp_mid(Ad, d)
        cd = np.asarray(c[d])
        cmid = interp_mid(cd, d)

        def index(k):
            return tuple(k if e == d else slice(None) if e in done else 0 for e in range(n))

        hh = h[d]
        for k in range(shape[d] - 1):
            i0, i1 = index(k), index(k + 1)
            Y, r = Phi[i0], R[i0]
            A0, Am, A1 = Ad[i0], Amid[i0], Ad[i1]
            c0, cm, c1 = cd[i0][..., None], cmid[i0][..., None], cd[i1][..., None]
            k1 = _mm(A0, Y)
            q1 = c0 * Y[..., d, :]
            Y2 = Y + 0.5 * hh * k1
            k2 = _mm(Am, Y2)
            q2 = cm * Y2[..., d, :]
            Y3 = Y + 0.5 * hh * k2
            k3 = _mm(Am, Y3)
            q3 = cm * Y3[..., d, :]
            Y4 = Y + hh * k3
            k4 = _mm(A1, Y4)
            q4 = c1 * Y4[..., d, :]
            Yn = Y + hh / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            rn = r + hh / 6.0 * (q1 + 2 * q2 + 2 * q3 + q4)
            if reorthonormalize:
                Yn = _orthonormalize(Yn)
            Phi[i1] = Yn
            R[i1] = rn
            G = np.einsum("...ab,...cb->...ac", Yn, Yn)
            drift = np.abs(G - eye).max(axis=(-1, -2))
            bad = ~np.isfinite(drift) | (drift > DRIFT_ABORT) | ~np.all(np.isfinite(rn), axis=-1)
            if bad.any():
                sub = np.argwhere(np.atleast_1d(bad))[0] if np.ndim(bad) else []
                node, it = [], iter(sub)
                for e in range(n):
                    node.append(k + 1 if e == d else int(next(it)) if e in done else 0)
                locus = [float(domain.axes[e][node[e]]) for e in range(n)]
                raise FrameError(f"frame drift {float(np.nanmax(drift)):.2e} (or non-finite values) "
                                 f"stepping along axis {d + 1} near R={locus}", locus)
        done.add(d)
    return Phi, R


def integrate_frame(rd: RotationData, lam: float, base=None, frame0=None, path=None,
                    reorthonormalize: bool = False) -> FrameField:
    """Frame and position of the deformed net at ``lam``, starting from the lower corner.

    ``frame0`` defaults to the identity and ``base`` to the origin (for
    n = 2 the position is the third frame row, so ``base`` is ignored).
    ``path`` is the order in which axes are swept; see :func:`transport`.
    """
    n = rd.n
    A, c, _ = connection(rd, lam)
    m = A.shape[-1]
    F0 = np.eye(m) if frame0 is None else np.asarray(frame0, dtype=float)
    if F0.shape != (m, m) or np.abs(F0 @ F0.T - np.eye(m)).max() > 1e-12:
        raise FrameError(f"initial frame must be a {m}x{m} orthonormal matrix (to 1e-12)")
    if n == 2:
        r0 = F0[2].copy()
    else:
        r0 = np.zeros(m) if base is None else np.asarray(base, dtype=float)
    path = tuple(range(n)) if path is None else tuple(path)
    Phi, R = transport(A, c, rd.domain, F0, r0, path, reorthonormalize)
    if n == 2:
        R = Phi[..., 2, :].copy()
    ff = FrameField(lam, Phi, R, rd, path)
    ff.meta["gram_drift"] = ff.gram_drift()
    ff.meta["complex"] = bool(np.iscomplexobj(Phi))
    return ff


def _orthonormalize(Y):
    if np.iscomplexobj(Y):
        # symmetric (complex-orthogonal) polar projection: Y (Y^T Y)^(-1/2)
        G = np.einsum("...ab,...cb->...ac", Y, Y)
        w, V = np.linalg.eig(G)
        inv_sqrt = np.einsum("...ab,...b,...cb->...ac", V, 1 / np.sqrt(w), V)
        return _mm(inv_sqrt, Y)
    Q, Rm = np.linalg.qr(np.swapaxes(Y, -1, -2))
    sgn = np.sign(np.diagonal(Rm, axis1=-2, axis2=-1))
    return np.swapaxes(Q * sgn[..., None, :], -1, -2)


def path_independence(rd: RotationData, lam: float, nodes=None, seed: int = 0, count: int = 3):
    """Largest frame/position difference between two sweep orders.

    Compares the default order with its reverse at ``nodes`` (random
    interior nodes plus the far corner when not given).
    """
    n = rd.n
    a = integrate_frame(rd, lam)
    b = integrate_frame(rd, lam, path=tuple(reversed(range(n))))
    shape = rd.domain.shape
    if nodes is None:
        rng = np.random.default_rng(seed)
        nodes = [tuple(int(rng.integers(1, s)) for s in shape) for _ in range(count)]
        nodes.append(tuple(s - 1 for s in shape))
    diff = 0.0
    for nd in nodes:
        diff = max(diff, float(np.abs(a.frame[nd] - b.frame[nd]).max()),
                   float(np.abs(a.position[nd] - b.position[nd]).max()))
    return diff, nodes


def _slice(arr, axis, level, n):
    ix = [slice(None)] * n
    ix[axis] = level
    return arr[tuple(ix)]


def hypersurface_shape(ff: FrameField, axis: int, level: int, h_tol: float = 1e-10) -> CurvatureField:
    """Principal curvatures of the coordinate hypersurface ``R^(axis+1) = const``.

    ``k[i] = beta_(axis,i) / H_i * sqrt(lambda + eta_axis)`` for i != axis
    (principal curvatures, not radii).  ``meta["weingarten"]`` holds the
    quotients ``(d_i phi_axis . d_i r) / (d_i r . d_i r)`` from the integrated
    fields, ``meta["cross_check"]`` their largest deviation from the
    formula, and ``meta["principal"]`` the largest component of
    ``d_i phi_axis - k^i d_i r`` (zero iff the coordinate directions are
    principal).  Nodes with ``|H_i| < h_tol`` are excluded.
    """
    rd = ff.rd
    n = rd.n
    if not 0 <= axis < n:
        raise ValueError("axis out of range")
    if not 0 <= level < rd.domain.shape[axis]:
        raise ValueError("level outside the grid")
    s, _ = spectral_roots(rd.eta_values(), ff.lam)
    h = rd.domain.spacing
    others = [i for i in range(n) if i != axis]
    ks, wq, dev, prin = [], [], 0.0, 0.0
    nu = ff.frame[..., axis, :]
    for i in others:
        Hi = rd.H[i]
        with np.errstate(all="ignore"):
            k = rd.beta[(axis, i)] / Hi * s[axis]
        k = np.where(np.abs(Hi) < h_tol, np.nan, k)
        dnu = d1(nu, i, h[i])
        dr = d1(ff.position, i, h[i])
        with np.errstate(all="ignore"):
            q = np.einsum("...a,...a->...", dnu, dr) / np.einsum("...a,...a->...", dr, dr)
            res = np.abs(dnu - k[..., None] * dr).max(axis=-1)
        ksl = _slice(k, axis, level, n)
        qsl = _slice(q, axis, level, n)
        ks.append(np.real_if_close(ksl, tol=1e6))
        wq.append(np.real_if_close(qsl, tol=1e6))
        dev = max(dev, float(np.nanmax(np.abs(ksl - qsl))))
        prin = max(prin, float(np.nanmax(_slice(res, axis, level, n))))
    meta = {"axis": axis, "level": level, "lambda": ff.lam, "weingarten": wq,
            "cross_check": dev, "principal": prin, "quantity": "principal curvature",
            "others": others}
    return CurvatureField(tuple(np.asarray(k) for k in ks), None, meta=meta)


def scaling_law_check(rd: RotationData, lam1: float, lam2: float, axis: int, level: int,
                      floor: float = 1e-8) -> ResidualReport:
    """Compare the curvature ratio between two deformation parameters with
    ``sqrt((lam1 + eta_axis) / (lam2 + eta_axis))``.

    Curvatures are the Weingarten quotients of frames integrated at each
    lambda, so both the ratio and the shared principal directions are
    tested on integrated data.  Nodes with ``|k(lam2)| <= floor`` are
    skipped.
    """
    f1 = integrate_frame(rd, lam1)
    f2 = f1 if lam2 == lam1 else integrate_frame(rd, lam2)
    c1 = hypersurface_shape(f1, axis, level)
    c2 = hypersurface_shape(f2, axis, level)
    eta_n = _slice(rd.eta_values()[axis], axis, level, rd.n)
    with np.errstate(all="ignore"):
        expected = np.sqrt((lam1 + eta_n).astype(complex) / (lam2 + eta_n))
    expected = np.real_if_close(expected, tol=1e6)
    fields = {}
    for i, q1, q2 in zip(c1.meta["others"], c1.meta["weingarten"], c2.meta["weingarten"]):
        with np.errstate(all="ignore"):
            ratio = q1 / q2
        r = np.where(np.abs(q2) > floor, np.abs(ratio - expected), np.nan)
        fields[f"ratio[{i + 1}]"] = r
    fields["principal_dirs"] = np.array([c1.meta["principal"], c2.meta["principal"]])
    notes = [f"lambda=({lam1:g}, {lam2:g})", f"axis={axis + 1}", f"level={level}",
             f"factor={complex(np.ravel(expected)[0]).real:.15g}"]
    return ResidualReport.from_fields("scaling_law", fields, rd.domain, notes=notes)
