"""Surfaces in E^3 from their third fundamental form and curvature radii.

The Gauss image is rebuilt first: the orthonormal frame ``(e_1, e_2, n)``
of the sphere net with ``d_i n = H_i e_i`` (``H_i = sqrt(G_ii)`` of the
third form).  The surface then follows from Rodrigues' formula
``d_i r = k^i d_i n``.  Radii are signed: with the outward sphere normal a
sphere of radius rho has ``k = rho``; flipping the sign of both radii
mirrors the surface.

An independent finite-difference oracle (:func:`mesh_fundamental_forms`)
recovers fundamental forms and radii from the point cloud alone.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .catalog import CurvatureField, ExampleBundle, make_example
from .codazzi import codazzi_residual
from .frames import FrameError, connection, transport
from .grid import GridDomain, ResidualReport, d1
from .lame import RotationData
from .metric import DiagonalMetric, christoffel_ab, curvature_one_residual, lame_fields

__all__ = [
    "SurfaceMesh",
    "SurfaceError",
    "MeshForms",
    "reconstruct_surface",
    "deformation_family",
    "mesh_fundamental_forms",
    "export_obj",
    "load_obj",
    "fit_quadric",
    "sphere_mesh",
    "surface_domain",
    "bundle_surface",
    "oracle_report",
    "cylinder_mesh",
    "TOL_K1",
    "TOL_CODAZZI",
    "MIXED_TOL",
]

TOL_K1 = 1e-6          # curvature-one precondition on the third form
TOL_CODAZZI = 1e-5     # Codazzi precondition on the radii
MIXED_TOL = 1e-5       # mixed-partial gate on the reconstructed position
K_FLOOR = 1e-6         # radii must stay this far from zero


class SurfaceError(ValueError):
    def __init__(self, message, locus=None):
        super().__init__(message)
        self.locus = locus


@dataclass
class SurfaceMesh:
    positions: np.ndarray   # (N1, N2, 3)
    normals: np.ndarray     # (N1, N2, 3)
    domain: GridDomain | None   # None for bare point grids (export only)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        if self.positions.shape != self.normals.shape or self.positions.shape[-1] != 3:
            raise ValueError("positions and normals must both be (N1, N2, 3)")
        dev = np.abs(np.linalg.norm(self.normals, axis=-1) - 1.0).max()
        if dev > 1e-8:
            raise SurfaceError(f"normals deviate from unit length by {dev:.2e}")

    @property
    def shape(self):
        return self.positions.shape[:2]

    def faces(self) -> np.ndarray:
        """Zero-based triangles, two per grid quad, row-major."""
        n1, n2 = self.shape
        idx = np.arange(n1 * n2).reshape(n1, n2)
        a, b = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
        c, d = idx[1:, 1:].ravel(), idx[:-1, 1:].ravel()
        tri = np.empty((2 * a.size, 3), dtype=int)
        tri[0::2] = np.stack([a, b, c], axis=1)
        tri[1::2] = np.stack([a, c, d], axis=1)
        return tri


# --------------------------------------------------------------------------
# reconstruction


def _third_form_lame(m: DiagonalMetric):
    dom = m.domain
    if m.symbolic:
        H, beta = lame_fields(m)
        env = dom.bindings(m.params)
        ev = lambda e: np.broadcast_to(np.asarray(e.evaluate(env, strict=False), dtype=float), dom.shape)
        return [ev(h) for h in H], {k: ev(v) for k, v in beta.items()}
    G = m.values()
    H = [np.sqrt(g) for g in G]
    h = dom.spacing
    beta = {(i, j): d1(H[j], i, h[i]) / H[i] for i in range(2) for j in range(2) if i != j}
    return H, beta


def reconstruct_surface(m: DiagonalMetric, k: CurvatureField, base=None, origin=None,
                        provenance=None, check: bool = True) -> SurfaceMesh:
    """Integrate the Gauss-image frame of ``m`` and then Rodrigues' formula.

    ``base`` is the frame ``(e_1, e_2, n)`` (rows) at the lower grid corner,
    by default the identity, so ``n = (0, 0, 1)`` there; ``origin`` is the
    corner position (default ``0``).  With ``check`` the third form must
    have curvature 1 and the radii must satisfy the Codazzi equations of
    ``m``, be non-umbilic and stay away from zero.
    """
    if m.n != 2 or k.n != 2:
        raise SurfaceError("surfaces need 2-d data")
    dom = m.domain
    kv = k.values(dom)
    if check:
        rep = curvature_one_residual(m)
        if not rep.max_residual <= TOL_K1:
            raise SurfaceError(f"third form is not of curvature 1 (residual {rep.max_residual:.3e})")
        crep = codazzi_residual(k, christoffel_ab(m), dom)
        if not crep.max_residual <= TOL_CODAZZI:
            raise SurfaceError(f"radii violate the Codazzi equations (residual {crep.max_residual:.3e})")
        umb = k.umbilic_mask(dom)
        small = (np.abs(kv[0]) < K_FLOOR) | (np.abs(kv[1]) < K_FLOOR)
        for mask, what in ((umb, "umbilic node"), (small, "radius below 1e-6")):
            if mask.any():
                idx = np.argwhere(mask)[0]
                locus = [float(ax[t]) for ax, t in zip(dom.axes, idx)]
                raise SurfaceError(f"{what} at R={locus}", locus)
    H, beta = _third_form_lame(m)
    rd = RotationData(tuple(H), beta, ("0", "0"), dom)
    A, _, _ = connection(rd, 1.0)
    c = [kv[i] * H[i] for i in range(2)]
    F0 = np.eye(3) if base is None else np.asarray(base, dtype=float)
    if F0.shape != (3, 3) or np.abs(F0 @ F0.T - np.eye(3)).max() > 1e-12:
        raise SurfaceError("base frame must be a 3x3 orthonormal matrix (to 1e-12)")
    r0 = np.zeros(3) if origin is None else np.asarray(origin, dtype=float)
    try:
        Phi, R = transport(A, c, dom, F0, r0)
    except FrameError as exc:
        raise SurfaceError(str(exc), exc.locus) from None
    if check:
        h = dom.spacing
        a = d1(c[0][..., None] * Phi[..., 0, :], 1, h[1])
        b = d1(c[1][..., None] * Phi[..., 1, :], 0, h[0])
        gap = np.abs(a - b).max(axis=-1)[2:-2, 2:-2]
        if not gap.max() <= MIXED_TOL:
            idx = np.unravel_index(int(np.argmax(gap)), gap.shape)
            locus = [float(dom.axes[0][idx[0] + 2]), float(dom.axes[1][idx[1] + 2])]
            raise SurfaceError(f"mixed partials of r disagree by {gap.max():.3e}", locus)
    prov = dict(provenance or {})
    prov.setdefault("frame_drift", float(np.abs(np.einsum("...ab,...cb->...ac", Phi, Phi) - np.eye(3)).max()))
    return SurfaceMesh(R, Phi[..., 2, :], dom, prov)


# fraction of the catalog box trimmed on each side before reconstruction;
# the quadric and two_param third forms blow up like 1/sqrt(R - root) at
# the box edges
SURFACE_TRIM = {"quadric": 0.2, "two_param": 0.2}


def surface_domain(name: str, params=None, N=64) -> GridDomain:
    """Default reconstruction chart of a catalog example."""
    dom = make_example(name, params, validate=False).domain
    t = SURFACE_TRIM.get(name, 0.0)
    lo, hi = np.array(dom.start), np.array(dom.stop)
    w = hi - lo
    return GridDomain(tuple(lo + t * w), tuple(hi - t * w), N)


def bundle_surface(name: str, params=None, N=64, **kw) -> tuple:
    """``(bundle, mesh)`` for a catalog example on its reconstruction chart."""
    b = make_example(name, params, domain=surface_domain(name, params, N))
    return b, _bundle_surface(b, **kw)


def _bundle_surface(b: ExampleBundle, **kw) -> SurfaceMesh:
    if b.curvatures is None:
        raise SurfaceError(f"{b.name} has no closed-form radii")
    prov = {"bundle": b.name, "params": {k: v for k, v in b.params.items() if v is not None}}
    return reconstruct_surface(b.metric, b.curvatures, provenance=prov, **kw)


def _common_domain(doms):
    lo = np.max([d.start for d in doms], axis=0)
    hi = np.min([d.stop for d in doms], axis=0)
    if np.any(hi <= lo):
        raise SurfaceError("family members have no common parameter box")
    return GridDomain(tuple(lo), tuple(hi), doms[0].N)


def deformation_family(name: str, params_list=None, lambdas=None, domain: GridDomain | None = None,
                       N=None, tol: float = 1e-3):
    """Reconstruct members of an S-deformation family on a shared grid.

    Members come from ``params_list`` (parameter dicts) or, for families
    with a single scalar deformation parameter, from ``lambdas``.  All
    members must share the Codazzi coefficients; members failing the
    reconstruction preconditions are skipped and listed in the report.
    Returns ``(meshes, report)``; the report's ``shape_gap`` is the largest
    pairwise difference of oracle radii at matched nodes.
    """
    from .catalog import DEFORMATION_PARAMS

    if (params_list is None) == (lambdas is None):
        raise ValueError("give exactly one of params_list and lambdas")
    if lambdas is not None:
        keys = DEFORMATION_PARAMS[name]
        if len(keys) != 1:
            raise ValueError(f"{name} has deformation parameters {keys}; use params_list")
        params_list = [{keys[0]: float(x)} for x in lambdas]
    params_list = [dict(p or {}) for p in params_list]
    if domain is None:
        doms = [surface_domain(name, p) for p in params_list]
        domain = _common_domain(doms)
    if N is not None:
        domain = domain.with_nodes(N)
    meshes, skipped = [], []
    ref = None
    for p in params_list:
        try:
            b = make_example(name, p, domain=domain)
            chi = christoffel_ab(b.metric).evaluate(domain, b.metric.params)
            if ref is None:
                ref = chi
            gap = max(float(np.nanmax(np.abs(chi[key] - ref[key]))) for key in ref)
            if gap > 1e-8:
                raise SurfaceError(f"Codazzi coefficients differ by {gap:.2e}")
            meshes.append(_bundle_surface(b))
        except Exception as exc:  # noqa: BLE001 - reported, not raised
            skipped.append({"params": p, "reason": str(exc)})
    radii = [mesh_fundamental_forms(mh).radii for mh in meshes]
    shape_gap = 0.0
    for i in range(len(radii)):
        for j in range(i + 1, len(radii)):
            for a, b in zip(radii[i], radii[j]):
                shape_gap = max(shape_gap, float(np.nanmax(np.abs(a - b))))
    report = {"bundle": name, "members": len(meshes), "skipped": skipped,
              "shape_gap": shape_gap, "passes": shape_gap <= tol and not skipped,
              "grid": domain.meta()}
    return meshes, report


# --------------------------------------------------------------------------
# finite-difference oracle


@dataclass
class MeshForms:
    I: tuple        # (E, F, G)
    II: tuple       # (L, M, N)
    kappa: np.ndarray     # (2, N1, N2) principal curvatures, ascending
    radii: tuple    # per coordinate direction, -1/kappa (inf where kappa = 0)
    third: tuple    # third form 2H II - K I
    mean_curvature: np.ndarray
    normals: np.ndarray


def mesh_fundamental_forms(mesh: SurfaceMesh, flat_tol: float = 1e-12) -> MeshForms:
    """Second-order central differences of the point cloud on interior nodes.

    Normals are ``r_u x r_v`` normalized and oriented like ``mesh.normals``.
    The radius attached to coordinate direction i is ``-1/kappa`` for the
    principal curvature closest to the normal curvature along that
    direction, matching the sign convention of :func:`reconstruct_surface`.
    Boundary nodes are ``nan``; ``|kappa| < flat_tol`` gives an infinite radius.
    """
    r = mesh.positions
    h1, h2 = mesh.domain.spacing
    c = (slice(1, -1), slice(1, -1))
    ru = (r[2:, 1:-1] - r[:-2, 1:-1]) / (2 * h1)
    rv = (r[1:-1, 2:] - r[1:-1, :-2]) / (2 * h2)
    ruu = (r[2:, 1:-1] - 2 * r[c] + r[:-2, 1:-1]) / h1 ** 2
    rvv = (r[1:-1, 2:] - 2 * r[c] + r[1:-1, :-2]) / h2 ** 2
    ruv = (r[2:, 2:] - r[2:, :-2] - r[:-2, 2:] + r[:-2, :-2]) / (4 * h1 * h2)
    nrm = np.cross(ru, rv)
    ln = np.linalg.norm(nrm, axis=-1)
    if np.any(ln < 1e-14):
        idx = np.argwhere(ln < 1e-14)[0]
        raise SurfaceError(f"degenerate tangent plane at node {[int(i) + 1 for i in idx]}")
    nrm = nrm / ln[..., None]
    nrm *= np.sign(np.einsum("...a,...a->...", nrm, mesh.normals[c]))[..., None]
    dot = lambda a, b: np.einsum("...a,...a->...", a, b)
    E, F, G = dot(ru, ru), dot(ru, rv), dot(rv, rv)
    L, M, N = dot(ruu, nrm), dot(ruv, nrm), dot(rvv, nrm)
    det = E * G - F * F
    Hm = (E * N - 2 * F * M + G * L) / (2 * det)
    Km = (L * N - M * M) / det
    disc = np.sqrt(np.maximum(Hm * Hm - Km, 0.0))
    kap = np.stack([Hm - disc, Hm + disc])
    dirk = [L / E, N / G]
    radii = []
    for kn in dirk:
        pick = np.where(np.abs(kap[0] - kn) <= np.abs(kap[1] - kn), kap[0], kap[1])
        with np.errstate(divide="ignore"):
            radii.append(np.where(np.abs(pick) < flat_tol, np.inf, -1.0 / pick))
    # III = 2H II - K I, so the Gauss image needs no nested differences
    third = (2 * Hm * L - Km * E, 2 * Hm * M - Km * F, 2 * Hm * N - Km * G)

    return MeshForms(tuple(_pad(x, r.shape[:2]) for x in (E, F, G)),
                     tuple(_pad(x, r.shape[:2]) for x in (L, M, N)),
                     _pad(kap, (2,) + r.shape[:2], lead=1),
                     tuple(_pad(x, r.shape[:2]) for x in radii),
                     tuple(_pad(x, r.shape[:2]) for x in third),
                     _pad(Hm, r.shape[:2]), _pad(nrm, r.shape))


def _pad(a, shape, width=1, lead=0):
    """Embed an interior array back into the full grid, ``nan`` elsewhere.

    The grid axes are ``lead`` and ``lead + 1``.
    """
    out = np.full(shape, np.nan)
    ix = [slice(None)] * len(shape)
    for ax in (lead, lead + 1):
        ix[ax] = slice(width, -width)
    out[tuple(ix)] = a
    return out


def oracle_report(mesh: SurfaceMesh, k: CurvatureField, m: DiagonalMetric | None = None,
                  trim: int = 2) -> ResidualReport:
    """Oracle radii (and third form, if ``m`` is given) against the inputs."""
    forms = mesh_fundamental_forms(mesh)
    kv = k.values(mesh.domain)
    f = {}
    sl = (slice(trim, -trim),) * 2
    for i in range(2):
        f[f"k[{i + 1}]"] = np.abs(forms.radii[i] - kv[i])[sl]
    if m is not None:
        G = m.values()
        f["III[11]"] = np.abs(forms.third[0] - G[0])[sl]
        f["III[12]"] = np.abs(forms.third[1])[sl]
        f["III[22]"] = np.abs(forms.third[2] - G[1])[sl]
    return ResidualReport.from_fields("surface_oracle", f, mesh.domain)


# --------------------------------------------------------------------------
# analytic meshes for checking the oracle


def sphere_mesh(radius: float = 2.0, N: int = 64) -> SurfaceMesh:
    dom = GridDomain((0.4, 0.2), (2.4, 2.8), N)
    th, ph = dom.mesh()
    n = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
    return SurfaceMesh(radius * n, n, dom, {"analytic": "sphere", "radius": radius})


def cylinder_mesh(radius: float = 1.0, N: int = 64) -> SurfaceMesh:
    dom = GridDomain((0.0, -1.0), (2.0, 1.0), N)
    th, z = dom.mesh()
    n = np.stack([np.cos(th), np.sin(th), np.zeros_like(th)], axis=-1)
    r = radius * n + np.stack([0 * th, 0 * th, z], axis=-1)
    return SurfaceMesh(r, n, dom, {"analytic": "cylinder", "radius": radius})


# --------------------------------------------------------------------------
# quadric fit


def _monomials(x):
    X, Y, Z = x[:, 0], x[:, 1], x[:, 2]
    one = np.ones_like(X)
    return np.stack([X * X, Y * Y, Z * Z, X * Y, X * Z, Y * Z, X, Y, Z, one], axis=1)


def fit_quadric(points: np.ndarray):
    """Least-squares implicit quadric through a point cloud.

    Points are centred and scaled to unit size first.  Returns
    ``(coeffs, residual)``: the coefficient vector (normalized, on the
    scaled points) and the largest first-order geometric distance
    ``|f| / |grad f|`` relative to the cloud diameter.
    """
    x = np.asarray(points, dtype=float).reshape(-1, 3)
    x = x[np.all(np.isfinite(x), axis=1)]
    centre = x.mean(axis=0)
    scale = np.abs(x - centre).max()
    y = (x - centre) / scale
    D = _monomials(y)
    _, _, Vt = np.linalg.svd(D, full_matrices=False)
    q = Vt[-1]
    f = D @ q
    A = np.array([[2 * q[0], q[3], q[4]], [q[3], 2 * q[1], q[5]], [q[4], q[5], 2 * q[2]]])
    grad = y @ A + q[6:9]
    dist = np.abs(f) / np.linalg.norm(grad, axis=1)
    diam = np.linalg.norm(y.max(axis=0) - y.min(axis=0))
    return q, float(dist.max() / diam)


# --------------------------------------------------------------------------
# OBJ


def export_obj(mesh: SurfaceMesh, path) -> str:
    """Write ``v``/``vn``/``f`` records (9 significant digits), atomically."""
    lines = [f"# shapelab mesh {mesh.shape[0]}x{mesh.shape[1]}"]
    for key in sorted(mesh.provenance):
        if key in ("bundle", "lambda"):
            lines.append(f"# {key} {mesh.provenance[key]}")
    fmt = lambda tag, v: f"{tag} {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}"
    lines += [fmt("v", p) for p in mesh.positions.reshape(-1, 3)]
    lines += [fmt("vn", p) for p in mesh.normals.reshape(-1, 3)]
    lines += [f"f {a}//{a} {b}//{b} {c}//{c}" for a, b, c in mesh.faces() + 1]
    text = "\n".join(lines) + "\n"
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".obj")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_obj(path):
    """``(vertices, normals, faces)`` with zero-based triangle indices."""
    v, vn, f = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                v.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                vn.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                f.append([int(x.split("/")[0]) - 1 for x in parts[1:]])
    return np.array(v), np.array(vn), np.array(f, dtype=int)
