"""Third fundamental forms of surfaces with nontrivial S-deformations.

Every example is a diagonal metric of curvature 1 together with the
Codazzi coefficients its curvature radii must satisfy, written out in
closed form so they can be compared against the ones recomputed from the
metric.  Where a classical surface is known, its radii are included.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import ScalarExpr, as_expr, const, var
from .grid import GridDomain
from .metric import CodazziCoeffs, DiagonalMetric, SingularMetric, coord

__all__ = [
    "NAMES",
    "CatalogError",
    "NoClosedForm",
    "FamilyDim",
    "CurvatureField",
    "ExampleBundle",
    "make_example",
    "closed_form_curvatures",
    "default_params",
    "random_params",
]

NAMES = ("monge", "moulding", "quadric", "dupin", "conf_revolution",
         "two_param", "one_param", "hyperquadric")

MARGIN = 0.05


class CatalogError(ValueError):
    pass


class NoClosedForm(LookupError):
    """Raised for examples whose radii are only known through an ODE."""

    def __init__(self, name: str, description: str):
        super().__init__(f"{name}: no closed-form radii; {description}")
        self.name = name
        self.description = description


@dataclass(frozen=True)
class FamilyDim:
    constants: int = 0
    functions: int = 0

    def __str__(self):
        parts = []
        if self.functions:
            parts.append(f"{self.functions} function{'s' * (self.functions > 1)}")
        if self.constants or not parts:
            parts.append(f"{self.constants} constant{'s' * (self.constants != 1)}")
        return " + ".join(parts)


@dataclass(frozen=True)
class CurvatureField:
    """Radii of principal curvature ``k^i`` (symbolic or tabulated)."""

    k: tuple
    domain: GridDomain | None = None
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        k = tuple(x if isinstance(x, np.ndarray) else as_expr(x, self.params) for x in self.k)
        object.__setattr__(self, "k", k)

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def symbolic(self) -> bool:
        return isinstance(self.k[0], ScalarExpr)

    def values(self, domain: GridDomain | None = None) -> list[np.ndarray]:
        dom = domain or self.domain
        out = []
        for x in self.k:
            if isinstance(x, ScalarExpr):
                v = x.evaluate(dom.bindings(self.params), strict=False)
                out.append(np.broadcast_to(np.asarray(v, dtype=float), dom.shape).copy())
            else:
                out.append(np.asarray(x))
        return out

    def umbilic_mask(self, domain: GridDomain | None = None, rel: float = 1e-9) -> np.ndarray:
        vals = self.values(domain)
        mask = np.zeros(vals[0].shape, dtype=bool)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                scale = np.maximum(1.0, np.maximum(np.abs(vals[i]), np.abs(vals[j])))
                mask |= np.abs(vals[i] - vals[j]) < rel * scale
        return mask

    def validate(self, domain: GridDomain | None = None):
        mask = self.umbilic_mask(domain)
        if mask.any():
            dom = domain or self.domain
            idx = np.argwhere(mask)[0]
            pt = [float(ax[t]) for ax, t in zip(dom.axes, idx)]
            raise CatalogError(f"umbilic node (k^i = k^j) at R={pt}")
        return self


@dataclass(frozen=True)
class ExampleBundle:
    name: str
    params: dict
    metric: DiagonalMetric
    codazzi: CodazziCoeffs
    curvatures: CurvatureField | None
    domain: GridDomain
    family_dim: FamilyDim
    description: str = ""

    @property
    def n(self) -> int:
        return self.metric.n


# --------------------------------------------------------------------------
# helpers

R1, R2 = var("R1"), var("R2")


def _fn(src, arg: str) -> ScalarExpr:
    e = as_expr(src)
    extra = e.coordinates - {arg}
    if extra:
        raise CatalogError(f"{e} must depend on {arg} only, found {sorted(extra)}")
    return e


def _cot(x: ScalarExpr) -> ScalarExpr:
    return x.apply("cos") / x.apply("sin")


def _box(lo, hi, N=None) -> GridDomain:
    n = len(lo)
    return GridDomain(lo, hi, N or (64 if n == 2 else 24), MARGIN)


def _real_roots(coeffs) -> np.ndarray:
    r = np.roots(coeffs)
    if np.any(np.abs(r.imag) > 1e-12):
        raise CatalogError(f"polynomial {list(coeffs)} has complex roots; pass a domain")
    return np.sort(r.real)


# --------------------------------------------------------------------------
# the examples
#
# Each builder returns (G, codazzi a/b or chi, curvatures or None, domain,
# family dim, description).  Parameters arrive already merged with defaults.


def _monge(p):
    c = float(p["c"])
    psi = _fn(p["psi"], "R2")
    G = (1 / (1 + c / R1.apply("cos") ** 2), R1.apply("sin") ** 2 / psi)
    chi = {(0, 1): const(0.0), (1, 0): _cot(R1)}
    return G, chi, None, _box((0.3, 0.0), (1.3, 2.0)), FamilyDim(1, 1), (
        "d_2 k^1 = 0 and d_1 k^2 = cot(R1) (k^1 - k^2): k^1 = f(R1) is free, "
        "k^2 solves a linear ODE in R1 for every R2")


def _moulding(p):
    phi = _fn(p["phi"], "R2")
    psi = _fn(p["psi"], "R2")
    u = R1 + phi
    G = (const(1.0), u.apply("sin") ** 2 / psi)
    chi = {(0, 1): const(0.0), (1, 0): _cot(u)}
    return G, chi, None, _box((0.3, 0.0), (1.3, 2.0)), FamilyDim(0, 1), (
        "d_2 k^1 = 0 and d_1 k^2 = cot(R1 + phi(R2)) (k^1 - k^2): a linear ODE "
        "in R1 for k^2 with k^1 = f(R1) free")


def _cubic(p, x):
    return x ** 3 + float(p["a"]) * x ** 2 + float(p["b"]) * x + float(p["c"])


def _quadric(p):
    G = ((R2 - R1) / (4 * _cubic(p, R1)), -(R2 - R1) / (4 * _cubic(p, R2)))
    chi = {(0, 1): 1 / (2 * (R2 - R1)), (1, 0): 1 / (2 * (R1 - R2))}
    s = (R1 * R2).apply("sqrt")
    k = (1 / (R1 * s), 1 / (R2 * s))
    r = _real_roots([1.0, p["a"], p["b"], p["c"]])
    dom = _box((r[0], r[1]), (r[1], r[2]))
    return G, chi, k, dom, FamilyDim(3, 0), "quadrics in spherical-conical coordinates"


def _dupin(p):
    a, b, c = (float(p[x]) for x in "abc")
    d2 = (R1 - R2) ** 2
    G = (1 / (d2 * (a * R1 ** 2 + b * R1 + c)), -1 / (d2 * (a * R2 ** 2 + b * R2 + c + 1)))
    chi = {(0, 1): 1 / (R1 - R2), (1, 0): 1 / (R2 - R1)}
    k = (R2, R1)
    return G, chi, k, _box((2.0, 0.0), (3.0, 1.0)), FamilyDim(3, 0), "cyclides of Dupin"


def _conf_revolution(p):
    a, b, c = (float(p[x]) for x in "abc")
    P = _fn(p["p"], "R2")
    dP = P.diff("R2")
    w = P + dP * (R1 - R2)
    d2 = (R1 - R2) ** 2
    G = (P ** 2 / (d2 * (a * R1 ** 2 + b * R1 + c)), -(w ** 2) / (d2 * (a * R2 ** 2 + b * R2 + c + P ** 2)))
    chi = {(0, 1): 1 / (R1 - R2) + dP / P, (1, 0): 1 / (R2 - R1) + dP / w}
    q = p.get("q")
    if q is None:
        k = (1 / P, 1 / w)
    else:
        # k^1 = q forces k^2 = q + q'/a; this reduces to 1/w for q = 1/p
        q = _fn(q, "R2")
        k = (q, q + q.diff("R2") * P * (R1 - R2) / w)
    return G, chi, k, _box((0.0, 2.0), (1.0, 3.0)), FamilyDim(3, 0), (
        "conformal images of surfaces of revolution")


def _two_param(p):
    a, c = float(p["a"]), float(p["c"])
    s2 = (R1 + R2) ** 2
    G = ((R1 - R2) / (s2 * (a * R1 ** 2 - R1 + c)), -(R1 - R2) / (s2 * (a * R2 ** 2 - R2 + c)))
    chi = {(0, 1): 1 / (2 * (R2 - R1)) - 1 / (R1 + R2),
           (1, 0): 1 / (2 * (R1 - R2)) - 1 / (R1 + R2)}
    k = (s2 / (R1 ** 2.5 * R2 ** 1.5), s2 / (R1 ** 1.5 * R2 ** 2.5))
    if a == 0.0:
        x1 = c
        dom = _box((x1 - 1.0, x1 + 0.5), (x1 - 0.5, x1 + 1.5))
    else:
        x1, x2 = _real_roots([a, -1.0, c])
        dom = _box((x1, x2), (x2, x2 + 0.5 * (x2 - x1)))
    return G, chi, k, dom, FamilyDim(2, 0), "stereographic image of planar elliptic coordinates"


def _one_param(p):
    c = float(p["c"])
    s = R1 + R2
    w = 2 / s.apply("cosh") ** 2
    G = (w / (1 + c), w / (1 - c))
    t = -s.apply("tanh")
    k = (s.apply("cosh") ** 2, -(s.apply("cosh") ** 2))
    return G, {(0, 1): t, (1, 0): t}, k, _box((-0.5, -0.5), (0.5, 0.5)), FamilyDim(1, 0), (
        "the choice k^1 = -k^2 gives a minimal surface")


def _hyperquadric(p):
    roots = [float(x) for x in p["roots"]]
    n = len(roots) - 1
    if n < 2:
        raise CatalogError("hyperquadric needs at least 3 roots (n >= 2)")
    if sorted(roots) != roots or len(set(roots)) != len(roots):
        raise CatalogError("roots must be strictly increasing")
    R = [var(coord(i)) for i in range(n)]
    sign = (-1) ** n

    def P(x):
        out = const(float(sign))
        for a in roots:
            out = out * (x - a)
        return out

    G = []
    for i in range(n):
        num = const(1.0)
        for k in range(n):
            if k != i:
                num = num * (R[k] - R[i])
        G.append(num / (4 * P(R[i])))
    chi = {(i, j): 1 / (2 * (R[j] - R[i])) for i in range(n) for j in range(n) if i != j}
    prod = R[0]
    for x in R[1:]:
        prod = prod * x
    s = prod.apply("sqrt")
    k = tuple(1 / (x * s) for x in R)
    dom = _box(roots[:-1], roots[1:])
    return tuple(G), chi, k, dom, FamilyDim(n + 1, 0), f"hyperquadrics, n = {n}"


_BUILDERS: dict[str, Callable] = {
    "monge": _monge,
    "moulding": _moulding,
    "quadric": _quadric,
    "dupin": _dupin,
    "conf_revolution": _conf_revolution,
    "two_param": _two_param,
    "one_param": _one_param,
    "hyperquadric": _hyperquadric,
}

_DEFAULTS = {
    "monge": {"c": 0.3, "psi": "1 + 0.1*sin(R2)"},
    "moulding": {"phi": "0.1*sin(R2)", "psi": "1 + 0.1*cos(R2)"},
    "quadric": {"a": -6.0, "b": 11.0, "c": -6.0},
    "dupin": {"a": 1.0, "b": -1.0, "c": -1.5},
    "conf_revolution": {"a": -1.0, "b": 0.0, "c": 1.5, "p": "1 + 0.1*sin(R2)", "q": None},
    "two_param": {"a": 0.2, "c": 0.8},
    "one_param": {"c": 0.5},
    "hyperquadric": {"roots": [1.0, 2.0, 3.0, 4.0]},
}

# deformation parameters: the ones that do not enter the Codazzi coefficients
DEFORMATION_PARAMS = {
    "monge": ("c", "psi"),
    "moulding": ("psi",),
    "quadric": ("a", "b", "c"),
    "dupin": ("a", "b", "c"),
    "conf_revolution": ("a", "b", "c"),
    "two_param": ("a", "c"),
    "one_param": ("c",),
    "hyperquadric": ("roots",),
}


def default_params(name: str) -> dict:
    _check_name(name)
    return dict(_DEFAULTS[name])


def _check_name(name):
    if name not in _BUILDERS:
        raise CatalogError(f"unknown example {name!r}; expected one of {', '.join(NAMES)}")


def _merge(name, params):
    p = default_params(name)
    for key, v in (params or {}).items():
        if key not in p:
            raise CatalogError(f"{name}: unknown parameter {key!r}")
        p[key] = v
    return p


def make_example(name: str, params: dict | None = None, domain: GridDomain | None = None,
                 N=None, validate: bool = True) -> ExampleBundle:
    """Build the named example.

    ``params`` overrides the defaults; ``domain`` overrides the computed
    box.  With ``validate`` the metric must be positive on every node,
    otherwise :class:`CatalogError` reports where it fails.
    """
    _check_name(name)
    p = _merge(name, params)
    G, chi, k, dom, fam, desc = _BUILDERS[name](p)
    if domain is not None:
        dom = domain
    if N is not None:
        dom = dom.with_nodes(N)
    if len(G) != dom.dim:
        raise CatalogError(f"{name}: domain has dimension {dom.dim}, metric {len(G)}")
    metric = DiagonalMetric(tuple(G), dom)
    if validate:
        try:
            metric.validate()
        except SingularMetric as exc:
            raise CatalogError(f"{name}: {exc}") from None
    curv = CurvatureField(k, dom) if k is not None else None
    return ExampleBundle(name, p, metric, CodazziCoeffs(chi, len(G)), curv, dom, fam, desc)


def closed_form_curvatures(name: str, params: dict | None = None) -> CurvatureField:
    b = make_example(name, params, validate=False)
    if b.curvatures is None:
        raise NoClosedForm(name, b.description)
    return b.curvatures


# --------------------------------------------------------------------------
# random parameter draws (rejection on positivity of the default box)


def _draw(name, rng):
    u = rng.uniform
    if name == "monge":
        return {"c": u(0.0, 1.0), "psi": f"1 + {u(0, 0.5):.6f}*sin({u(0.5, 2):.6f}*R2)"}
    if name == "moulding":
        return {"phi": f"{u(-0.2, 0.2):.6f}*sin({u(0.5, 2):.6f}*R2)",
                "psi": f"1 + {u(0, 0.5):.6f}*cos({u(0.5, 2):.6f}*R2)"}
    if name == "quadric":
        r1 = u(0.5, 1.5)
        r2 = r1 + u(0.8, 1.5)
        r3 = r2 + u(0.8, 1.5)
        return {"a": -(r1 + r2 + r3), "b": r1 * r2 + r1 * r3 + r2 * r3, "c": -r1 * r2 * r3}
    if name == "dupin":
        return {"a": u(0.9, 1.1), "b": u(-1.1, -0.9), "c": u(-1.6, -1.4)}
    if name == "conf_revolution":
        return {"a": u(-1.1, -0.9), "b": u(-0.1, 0.1), "c": u(1.3, 1.7),
                "p": f"1 + {u(0.05, 0.15):.6f}*sin(R2)"}
    if name == "two_param":
        return {"a": u(0.1, 0.2), "c": u(0.5, 0.9)}
    if name == "one_param":
        return {"c": u(-0.8, 0.8)}
    if name == "hyperquadric":
        roots = np.cumsum(np.r_[u(0.5, 1.5), u(0.8, 1.5, size=3)])
        return {"roots": [float(x) for x in roots]}
    raise CatalogError(name)


def random_params(name: str, rng: np.random.Generator, tries: int = 100) -> dict:
    """A parameter set whose metric is positive on the default box."""
    _check_name(name)
    for _ in range(tries):
        p = _draw(name, rng)
        try:
            make_example(name, p, N=8)
        except CatalogError:
            continue
        return p
    raise CatalogError(f"{name}: no admissible draw in {tries} tries")
