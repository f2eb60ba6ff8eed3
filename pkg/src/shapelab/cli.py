"""Command-line front end: ``shapelab <mode> --scene scene.json --out DIR``.

Every mode reads a JSON scene, runs the corresponding checks and writes
``summary.json`` (deterministic: sorted keys, no timestamps),
``gates.csv`` and mode-specific artifacts into ``--out``.  Exit status is
0 when every gate passes, 1 when a numerical gate fails and 2 when the
scene (or an expression inside it) is invalid.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .catalog import CatalogError, make_example, random_params
from .codazzi import CodazziError, codazzi_residual, integrate_codazzi
from .compat import theorem1_report
from .expr import DomainError, ExprSyntaxError, UnboundName
from .frames import FrameError, integrate_frame, scaling_law_check
from .grid import GridDomain
from .io import load_rotation, save_grid, save_rotation, write_csv, write_json
from .lame import (EX8_ETA, LameError, const_eta_integrals, darboux_residual, ex8_boundary,
                   ex8_residuals, integrate_darboux, lax_zero_curvature_residual,
                   solve_goursat_ex8, solve_triple_s2, system4_residual, triple_boundary,
                   triple_residuals)
from .metric import (DiagonalMetric, MetricPencil, PencilError, SingularMetric, christoffel_ab,
                     constant_curvature_residual, curvature_one_residual, pencil_curvature_scan)
from .surface import (SurfaceError, deformation_family, export_obj, fit_quadric,
                      mesh_fundamental_forms, oracle_report, surface_domain)

__all__ = ["main", "run", "DEFAULTS", "SceneError", "MODES"]


class SceneError(ValueError):
    """Invalid scene: unknown or missing keys, bad values, bad expressions."""


# One table for every numeric default.  ``N`` is nodes per axis (2-d / 3-d),
# ``tol`` the primary gate; secondary gates are listed per mode.
DEFAULTS = {
    "verify-curvature": {"N": (64, 24), "tol": 1e-6},
    "codazzi": {"N": (64, 24), "tol": 1e-8, "integrated_tol": 1e-6},
    "pencil-scan": {"N": (64, 24), "tol": 1e-6, "lambdas": [0.75, 1.0, 2.0, 5.0, 10.0]},
    "goursat": {"N": (64, 24), "tol": 1e-6, "ma_tol": 1e-5, "integral_tol": 1e-6,
                "lax_tol": 1e-5, "ratio_min": 3.5, "lambdas": [0.1, 1.0, 10.0],
                "domain": {"lo": [0.0, 0.0], "hi": [0.5, 0.5]}},
    "triple": {"N": (64, 24), "tol": 1e-6, "ma_tol": 1e-5, "integral_tol": 1e-5, "ratio_min": 3.5,
               "domain": {"lo": [0.0, 0.0, 0.0], "hi": [0.4, 0.4, 0.4]}},
    "darboux": {"N": (64, 24), "tol": 1e-4},
    "compat": {"N": (8, 8), "tol": 1e-6},
    "frames": {"N": (64, 24), "tol": 1e-4, "drift_tol": 1e-6, "metric_tol": 1e-5,
               "lambdas": [0.0, 1.0]},
    "reconstruct": {"N": (64, 64), "tol": 1e-3, "quadric_tol": 1e-4, "mean_tol": 1e-3},
    "family": {"N": (64, 64), "tol": 1e-3},
}
MODES = tuple(DEFAULTS)

_COMMON = {"mode", "grid", "tol"}
_KEYS = {
    "verify-curvature": ({"example", "params", "draws", "seed", "metric", "domain", "curvature"}, set()),
    "codazzi": ({"example", "params", "boundary"}, {"example"}),
    "pencil-scan": ({"H", "eta", "domain", "source", "lambdas", "allow_indefinite"}, set()),
    "goursat": ({"phi0", "psi0", "domain", "lambdas"}, {"phi0", "psi0"}),
    "triple": ({"p0", "q0", "r0", "c", "domain"}, {"p0", "q0", "r0"}),
    "darboux": ({"system", "phi0", "psi0", "p0", "q0", "r0", "c", "domain"}, {"system"}),
    "compat": ({"g", "gt", "domain"}, {"g", "gt", "domain"}),
    "frames": ({"input", "system", "phi0", "psi0", "p0", "q0", "r0", "c", "domain", "lambdas",
                "axis", "level"}, set()),
    "reconstruct": ({"example", "params"}, {"example"}),
    "family": ({"example", "params_list", "lambdas"}, {"example"}),
}


# --------------------------------------------------------------------------
# helpers


class _Run:
    def __init__(self, mode, scene, out, tol_override, grid, lambdas, workers):
        self.mode = mode
        self.scene = scene
        self.out = out
        self.tol_override = tol_override
        self.grid = grid
        self.lambdas_override = lambdas
        self.workers = workers
        self.gates = []
        self.results = {}
        self.artifacts = []

    def d(self, key):
        return DEFAULTS[self.mode][key]

    def tol(self, key="tol"):
        """``--tol`` beats the scene's ``tol`` (primary gate only), which beats the table."""
        if self.tol_override is not None:
            return self.tol_override
        if key == "tol" and "tol" in self.scene:
            return float(self.scene["tol"])
        return float(self.d(key))

    def gate(self, name, value, tol, kind="max"):
        value = float(value)
        ok = value <= tol if kind == "max" else value >= tol
        self.gates.append({"name": name, "value": value, "limit": float(tol), "kind": kind, "passes": bool(ok)})

    def nodes(self, dim):
        if self.grid is not None:
            if len(self.grid) != dim:
                raise SceneError(f"--grid has {len(self.grid)} axes, the problem has {dim}")
            return tuple(self.grid)
        g = self.scene.get("grid")
        if isinstance(g, int):
            return (g,) * dim
        if isinstance(g, list):
            if len(g) != dim:
                raise SceneError(f"grid has {len(g)} axes, the problem has {dim}")
            return tuple(int(x) for x in g)
        return (self.d("N")[0 if dim == 2 else 1],) * dim

    def domain(self, dim=None, default=None):
        d = self.scene.get("domain", default)
        if d is None:
            raise SceneError("missing 'domain'")
        try:
            lo, hi = list(d["lo"]), list(d["hi"])
        except (KeyError, TypeError):
            raise SceneError("domain needs 'lo' and 'hi' lists") from None
        extra = set(d) - {"lo", "hi", "margin"}
        if extra:
            raise SceneError(f"unknown domain keys {sorted(extra)}")
        if dim is not None and len(lo) != dim:
            raise SceneError(f"domain has dimension {len(lo)}, expected {dim}")
        try:
            return GridDomain(tuple(lo), tuple(hi), self.nodes(len(lo)), d.get("margin", 0.0))
        except ValueError as exc:
            raise SceneError(f"domain: {exc}") from None

    def lambdas(self, default):
        if self.lambdas_override is not None:
            return self.lambdas_override
        return [float(x) for x in self.scene.get("lambdas", default)]

    def path(self, name):
        self.artifacts.append(name)
        return os.path.join(self.out, name)

    def pmap(self, fn, items):
        items = list(items)
        if self.workers <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.workers) as ex:
            return list(ex.map(fn, items))


def _validate(mode, scene):
    if mode not in DEFAULTS:
        raise SceneError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    allowed, required = _KEYS[mode]
    unknown = set(scene) - allowed - _COMMON
    if unknown:
        raise SceneError(f"unknown keys for {mode}: {sorted(unknown)}")
    missing = required - set(scene)
    if missing:
        raise SceneError(f"{mode} requires {sorted(missing)}")
    if "tol" in scene and not isinstance(scene["tol"], (int, float)):
        raise SceneError("tol must be a number")


def _fmt_lam(x):
    return repr(float(x)).replace("-", "m").replace(".", "p")


# --------------------------------------------------------------------------
# modes


def _verify_curvature(r: _Run):
    s = r.scene
    tol = r.tol()
    rows = []
    if "metric" in s:
        G = s["metric"]
        dom = r.domain(len(G))
        m = DiagonalMetric(tuple(G), dom)
        m.validate()
        K = float(s.get("curvature", 1.0))
        rep = curvature_one_residual(m) if m.n == 2 and K == 1.0 else constant_curvature_residual(m, K)
        rows.append(("metric", rep.max_residual))
    else:
        if "example" not in s:
            raise SceneError("verify-curvature needs 'example' or 'metric'")
        name = s["example"]
        rng = np.random.default_rng(int(s.get("seed", 0)))
        sets = [s.get("params")] + [random_params(name, rng) for _ in range(int(s.get("draws", 0)))]
        for i, p in enumerate(sets):
            b = make_example(name, p)
            b = make_example(name, p, domain=b.domain.with_nodes(r.nodes(b.n)))
            rep = (curvature_one_residual(b.metric) if b.n == 2
                   else constant_curvature_residual(b.metric, 1.0))
            rows.append((f"{name}[{i}]", rep.max_residual))
            r.results.setdefault("params", []).append(b.params)
    for label, v in rows:
        r.gate(f"curvature:{label}", v, tol)
    r.results["residuals"] = {k: v for k, v in rows}


def _codazzi(r: _Run):
    s = r.scene
    name = s["example"]
    b0 = make_example(name, s.get("params"))
    b = make_example(name, s.get("params"), domain=b0.domain.with_nodes(r.nodes(b0.n)))
    tol = r.tol()
    c = christoffel_ab(b.metric).evaluate(b.domain, b.metric.params)
    p = b.codazzi.evaluate(b.domain)
    r.gate("christoffel_vs_catalog", max(float(np.nanmax(np.abs(c[k] - p[k]))) for k in p), tol)
    k_exact = b.curvatures
    if k_exact is not None:
        r.gate("codazzi_closed_form", codazzi_residual(k_exact, b.codazzi, b.domain).max_residual, tol)
    if "boundary" in s:
        kf = integrate_codazzi(b.codazzi, s["boundary"], b.domain, params=b.metric.params)
        save_grid(r.path("radii.grid"), {f"k{i + 1}": v for i, v in enumerate(kf.k)}, b.domain,
                  {"example": name, "boundary": list(s["boundary"])})
        r.results["error_ratio"] = kf.meta["error_ratio"]
        if k_exact is not None:
            ke = k_exact.values(b.domain)
            gap = max(float(np.abs(a - e).max()) for a, e in zip(kf.k, ke))
            r.gate("integrated_vs_closed_form", gap, r.tol("integrated_tol"))


def _ex8_source(r: _Run, cfg):
    dom = r.domain(2, DEFAULTS["goursat"]["domain"]) if "domain" not in cfg else None
    if dom is None:
        d = cfg["domain"]
        dom = GridDomain(tuple(d["lo"]), tuple(d["hi"]), r.nodes(2))
    return solve_goursat_ex8(cfg["phi0"], cfg["psi0"], dom)


def _pencil_scan(r: _Run):
    s = r.scene
    tol = r.tol()
    lams = r.lambdas(r.d("lambdas"))
    if "source" in s:
        src = s["source"]
        if not isinstance(src, dict) or set(src) - {"ex8"} or "ex8" not in src:
            raise SceneError("source must be {'ex8': {'phi0': ..., 'psi0': ...}}")
        cfg = src["ex8"]
        if set(cfg) - {"phi0", "psi0", "domain"} or not {"phi0", "psi0"} <= set(cfg):
            raise SceneError("ex8 source needs phi0 and psi0 (and optionally domain)")
        rd = _ex8_source(r, cfg)
        pencil = MetricPencil(rd.H, EX8_ETA, rd.domain)
    else:
        if "H" not in s or "eta" not in s:
            raise SceneError("pencil-scan needs 'H' and 'eta', or 'source'")
        dom = r.domain(len(s["H"]))
        pencil = MetricPencil(tuple(s["H"]), tuple(s["eta"]), dom)
    allow = bool(s.get("allow_indefinite", False))
    reps = r.pmap(lambda lam: pencil_curvature_scan(pencil, [lam], allow_indefinite=allow)[0], lams)
    for lam, rep in zip(lams, reps):
        r.gate(f"pencil[lambda={lam!r}]", rep.max_residual, tol)


def _goursat(r: _Run):
    s = r.scene
    dom = r.domain(2, r.d("domain"))
    rd = solve_goursat_ex8(s["phi0"], s["psi0"], dom)
    res = ex8_residuals(rd)
    first = max(res.max["d1phi"], res.max["d2psi"])
    ma = max(res.max["MA_phi"], res.max["MA_psi"])
    r.gate("first_order", first, r.tol())
    r.gate("monge_ampere", ma, r.tol("ma_tol"))
    r.gate("error_ratio", rd.meta["error_ratio"], r.d("ratio_min"), kind="min")
    r.gate("system4", system4_residual(rd).max_residual, r.tol())
    for lam in r.lambdas(r.d("lambdas")):
        for form in ("3x3", "2x2"):
            r.gate(f"lax_{form}[lambda={lam!r}]", lax_zero_curvature_residual(rd, lam, form).max_residual,
                   r.tol("lax_tol"))
    ce = const_eta_integrals(rd)
    r.gate("integral_P1", float(ce.variation[0].max()), r.tol("integral_tol"))
    r.gate("integral_P2", float(ce.variation[1].max()), r.tol("integral_tol"))
    r.results["off_chart"] = res.notes
    r.results["P_mean"] = [float(np.mean(P)) for P in ce.P]
    save_rotation(r.path("ex8.grid"), rd, {"phi0": str(s["phi0"]), "psi0": str(s["psi0"])})


def _triple(r: _Run):
    s = r.scene
    dom = r.domain(3, r.d("domain"))
    c = tuple(s.get("c", (0.0, 1.0, 3.0)))
    data = solve_triple_s2(s["p0"], s["q0"], s["r0"], dom, c=c)
    res = triple_residuals(data)
    first = max(v for k, v in res.max.items() if k.startswith("d"))
    ma = max(v for k, v in res.max.items() if k.startswith("MA"))
    r.gate("first_order", first, r.tol())
    r.gate("monge_ampere", ma, r.tol("ma_tol"))
    r.gate("error_ratio", data.meta["error_ratio"], r.d("ratio_min"), kind="min")
    # the rescaled coordinates normalize the integrals to (1, 1, -1)
    dev = max(float(np.abs(P - t).max()) for P, t in zip(data.P, (1.0, 1.0, -1.0)))
    r.results["P_mean"] = [float(np.mean(P)) for P in data.P]
    r.gate("integrals_P", dev, r.tol("integral_tol"))
    r.gate("darboux_system", darboux_residual(data.rd).max_residual, r.tol("ma_tol"))
    save_rotation(r.path("triple.grid"), data.rd, {"p0": s["p0"], "q0": s["q0"], "r0": s["r0"]})


def _darboux(r: _Run):
    s = r.scene
    system = s["system"]
    if system == "ex8":
        dom = r.domain(2, DEFAULTS["goursat"]["domain"])
        ref = solve_goursat_ex8(s["phi0"], s["psi0"], dom)
        bnd, H = ex8_boundary(s["phi0"], s["psi0"])
        got = integrate_darboux(EX8_ETA, bnd, dom, H_boundary=H)
    elif system == "triple":
        c = tuple(s.get("c", (0.0, 1.0, 3.0)))
        hat = r.domain(3, DEFAULTS["triple"]["domain"])
        for k in ("p0", "q0", "r0"):
            if not isinstance(s.get(k), (int, float)):
                raise SceneError("darboux triple needs numeric p0, q0, r0")
        ref = solve_triple_s2(s["p0"], s["q0"], s["r0"], hat, c=c).rd
        got = integrate_darboux(tuple(str(x) for x in c), triple_boundary(s["p0"], s["q0"], s["r0"], c),
                                ref.domain)
    else:
        raise SceneError("system must be 'ex8' or 'triple'")
    gap = max(float(np.abs(got.beta[k] - ref.beta[k]).max()) for k in ref.beta)
    gap = max(gap, max(float(np.abs(a - b).max()) for a, b in zip(got.H, ref.H)))
    r.gate("agreement_with_dedicated_solver", gap, r.tol())
    r.results["darboux_residual"] = darboux_residual(got).max_residual
    save_rotation(r.path("darboux.grid"), got, {"system": system})


def _compat(r: _Run):
    s = r.scene
    if len(s["g"]) != len(s["gt"]):
        raise SceneError("g and gt must have the same length")
    dom = r.domain(len(s["g"]))
    rep = theorem1_report(DiagonalMetric(tuple(s["g"]), dom), DiagonalMetric(tuple(s["gt"]), dom),
                          dom, tol=r.tol())
    r.results["report"] = rep
    r.gate("theorem1", rep["residual"], r.tol())


def _frames(r: _Run):
    s = r.scene
    if "input" in s:
        rd = load_rotation(s["input"])
    else:
        system = s.get("system", "ex8")
        if system == "ex8":
            rd = solve_goursat_ex8(s.get("phi0", 0.3), s.get("psi0", 0.2),
                                   r.domain(2, DEFAULTS["goursat"]["domain"]))
        elif system == "triple":
            rd = solve_triple_s2(s.get("p0", 1.0), s.get("q0", 0.2), s.get("r0", 0.1),
                                 r.domain(3, DEFAULTS["triple"]["domain"]),
                                 c=tuple(s.get("c", (0.0, 1.0, 3.0)))).rd
        else:
            raise SceneError("system must be 'ex8' or 'triple'")
    lams = r.lambdas(r.d("lambdas"))
    axis = int(s.get("axis", rd.n)) - 1
    level = int(s.get("level", rd.domain.shape[axis] // 2))

    def one(lam):
        return integrate_frame(rd, lam)

    ffs = r.pmap(one, lams)
    for lam, ff in zip(lams, ffs):
        r.gate(f"gram_drift[lambda={lam!r}]", ff.gram_drift(), r.tol("drift_tol"))
        r.gate(f"metric_match[lambda={lam!r}]", ff.metric_match().max_residual, r.tol("metric_tol"))
        fields = {"frame": ff.frame, "position": ff.position}
        save_grid(r.path(f"frames_{_fmt_lam(lam)}.grid"), fields, rd.domain, {"lambda": lam})
    if len(lams) >= 2:
        rep = scaling_law_check(rd, lams[0], lams[1], axis, level)
        r.gate(f"scaling_law[{lams[0]!r},{lams[1]!r}]", rep.max_residual, r.tol())
        r.results["scaling_notes"] = rep.notes


def _reconstruct(r: _Run):
    s = r.scene
    name = s["example"]
    N = r.nodes(2)
    dom = surface_domain(name, s.get("params")).with_nodes(N)
    b = make_example(name, s.get("params"), domain=dom)
    if b.curvatures is None:
        raise SceneError(f"{name} has no closed-form radii to reconstruct from")
    from .surface import reconstruct_surface

    mesh = reconstruct_surface(b.metric, b.curvatures, provenance={"bundle": name})
    export_obj(mesh, r.path("mesh.obj"))
    rep = oracle_report(mesh, b.curvatures)
    r.gate("oracle_radii", rep.max_residual, r.tol())
    forms = mesh_fundamental_forms(mesh)
    _, qres = fit_quadric(mesh.positions)
    r.results["quadric_fit"] = qres
    r.results["mean_curvature_max"] = float(np.nanmax(np.abs(forms.mean_curvature)))
    r.results["vertices"] = int(np.prod(mesh.shape))
    r.results["faces"] = int(mesh.faces().shape[0])
    if name == "quadric":
        r.gate("quadric_fit", qres, r.tol("quadric_tol"))
    kv = b.curvatures.values(dom)
    if np.allclose(kv[0], -kv[1], rtol=0, atol=1e-12):
        r.gate("mean_curvature", r.results["mean_curvature_max"], r.tol("mean_tol"))


def _family(r: _Run):
    s = r.scene
    if ("params_list" in s) == ("lambdas" in s) and r.lambdas_override is None:
        raise SceneError("family needs exactly one of params_list and lambdas")
    lams = r.lambdas_override if r.lambdas_override is not None else s.get("lambdas")
    kw = {"lambdas": lams} if lams is not None else {"params_list": s["params_list"]}
    meshes, rep = deformation_family(s["example"], N=r.nodes(2), tol=r.tol(), **kw)
    members = []
    for i, m in enumerate(meshes):
        fn = f"member_{i}.obj"
        export_obj(m, r.path(fn))
        members.append({"file": fn, "params": m.provenance.get("params")})
    manifest = {"bundle": s["example"], "members": members, "shape_gap": rep["shape_gap"],
                "skipped": rep["skipped"], "grid": rep["grid"]}
    write_json(r.path("family.json"), manifest)
    r.results["skipped"] = rep["skipped"]
    r.gate("shared_shape_operator", rep["shape_gap"], r.tol())
    r.gate("members_skipped", len(rep["skipped"]), 0.0)


_HANDLERS = {
    "verify-curvature": _verify_curvature,
    "codazzi": _codazzi,
    "pencil-scan": _pencil_scan,
    "goursat": _goursat,
    "triple": _triple,
    "darboux": _darboux,
    "compat": _compat,
    "frames": _frames,
    "reconstruct": _reconstruct,
    "family": _family,
}

_NUMERIC_ERRORS = (CodazziError, LameError, FrameError, SurfaceError, PencilError, SingularMetric,
                   DomainError)


def run(mode: str, scene: dict, out: str, tol=None, grid=None, lambdas=None, workers: int = 1) -> int:
    """Run one mode; returns the exit status and writes artifacts into ``out``."""
    scene = dict(scene)
    if scene.get("mode", mode) != mode:
        raise SceneError(f"scene is for mode {scene['mode']!r}, not {mode!r}")
    _validate(mode, scene)
    os.makedirs(out, exist_ok=True)
    r = _Run(mode, scene, out, tol, grid, lambdas, workers)
    error = None
    try:
        _HANDLERS[mode](r)
    except _NUMERIC_ERRORS as exc:
        error = {"type": type(exc).__name__, "message": str(exc),
                 "locus": getattr(exc, "locus", None)}
    passes = error is None and all(g["passes"] for g in r.gates)
    summary = {
        "mode": mode,
        "version": __version__,
        "scene": scene,
        "overrides": {"tol": tol, "grid": list(grid) if grid else None, "lambdas": lambdas},
        "gates": r.gates,
        "results": r.results,
        "error": error,
        "artifacts": sorted(r.artifacts + ["gates.csv", "summary.json"]),
        "passes": passes,
    }
    write_csv(os.path.join(out, "gates.csv"), ["gate", "value", "limit", "kind", "passes"],
              [(g["name"], g["value"], g["limit"], g["kind"], g["passes"]) for g in r.gates])
    write_json(os.path.join(out, "summary.json"), summary)
    return 0 if passes else 1


def _parse_grid(text):
    try:
        parts = tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; expected e.g. 64x64 or 24x24x24") from None
    if len(parts) not in (2, 3) or min(parts) < 8:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}; 2 or 3 axes with at least 8 nodes")
    return parts


def _parse_lambdas(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}") from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise argparse.ArgumentTypeError(f"bad lambda list {text!r}")
    return vals


def _workers():
    v = os.environ.get("SHAPELAB_THREADS", "1")
    try:
        return max(1, int(v))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="shapelab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"shapelab {__version__}")
    p.add_argument("mode", choices=MODES)
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--out", default="shapelab-out", help="output directory")
    p.add_argument("--tol", type=float, help="override every residual gate")
    p.add_argument("--grid", type=_parse_grid, help="nodes per axis, e.g. 64x64 or 24x24x24")
    p.add_argument("--lambda", dest="lambdas", type=_parse_lambdas, help="comma-separated lambda values")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code in (0, None) else 2
    try:
        with open(args.scene) as fh:
            scene = json.load(fh)
        if not isinstance(scene, dict):
            raise SceneError("scene must be a JSON object")
        status = run(args.mode, scene, args.out, args.tol, args.grid, args.lambdas, _workers())
    except ExprSyntaxError as exc:
        print(f"shapelab: expression error at byte {exc.offset}: {exc}", file=sys.stderr)
        return 2
    except (SceneError, CatalogError, UnboundName, OSError, json.JSONDecodeError, ValueError,
            TypeError, KeyError) as exc:
        print(f"shapelab: invalid scene: {exc}", file=sys.stderr)
        return 2
    if status:
        print(f"shapelab: {args.mode}: gate failed, see {os.path.join(args.out, 'summary.json')}",
              file=sys.stderr)
    else:
        print(f"shapelab: {args.mode}: all gates pass")
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
