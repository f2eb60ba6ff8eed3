"""Uniform coordinate boxes, 4th-order differences and residual reports."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = ["GridDomain", "d1", "d2", "ResidualReport", "interp_mid"]


@dataclass(frozen=True)
class GridDomain:
    """A box ``[lo_i, hi_i]`` sampled at ``N_i`` nodes per axis.

    ``margin`` is a fraction of each axis width removed at both ends before
    sampling, so nodes never touch a singular boundary of the box.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    N: tuple[int, ...]
    margin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(float(x) for x in self.hi))
        if isinstance(self.N, (int, np.integer)):
            object.__setattr__(self, "N", (int(self.N),) * len(self.lo))
        object.__setattr__(self, "N", tuple(int(x) for x in self.N))
        if not (len(self.lo) == len(self.hi) == len(self.N)):
            raise ValueError("lo, hi and N must have the same length")
        for a, b, n in zip(self.start, self.stop, self.N):
            if not a < b:
                raise ValueError(f"empty interval after margin: [{a}, {b}]")
            if n < 8:
                raise ValueError(f"need at least 8 nodes per axis, got {n}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def start(self) -> tuple[float, ...]:
        return tuple(a + self.margin * (b - a) for a, b in zip(self.lo, self.hi))

    @property
    def stop(self) -> tuple[float, ...]:
        return tuple(b - self.margin * (b - a) for a, b in zip(self.lo, self.hi))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.N

    @property
    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, n) for a, b, n in zip(self.start, self.stop, self.N)]

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple((b - a) / (n - 1) for a, b, n in zip(self.start, self.stop, self.N))

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes, indexing="ij")

    def bindings(self, params=None) -> dict:
        env = {f"R{i + 1}": X for i, X in enumerate(self.mesh())}
        if params:
            env.update(params)
        return env

    def refined(self, factor: int) -> GridDomain:
        """Same sampled box with ``factor`` times more intervals per axis."""
        return GridDomain(self.start, self.stop, tuple(factor * (n - 1) + 1 for n in self.N))

    def with_nodes(self, N) -> GridDomain:
        return GridDomain(self.lo, self.hi, N, self.margin)

    def meta(self) -> dict:
        return {
            "start": list(self.start),
            "stop": list(self.stop),
            "N": list(self.N),
            "spacing": list(self.spacing),
        }

    @classmethod
    def from_dict(cls, d: dict, default_N=None) -> GridDomain:
        lo, hi = d["lo"], d["hi"]
        N = d.get("N", default_N)
        if N is None:
            N = 64 if len(lo) == 2 else 24
        return cls(tuple(lo), tuple(hi), N, d.get("margin", 0.0))


def _weights(offsets) -> np.ndarray:
    """First-derivative finite-difference weights on integer ``offsets`` (exact)."""
    m = len(offsets)
    A = [[Fraction(o) ** k for o in offsets] + [Fraction(int(k == 1))] for k in range(m)]
    for c in range(m):
        piv = next(r for r in range(c, m) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        for r in range(m):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return np.array([float(A[r][m] / A[r][r]) for r in range(m)])


def _stencils(order: int):
    half = order // 2
    central = _weights(range(-half, half + 1))
    edge = [_weights(range(-k, order + 1 - k)) for k in range(half)]
    return central, edge


# Tabulated fields are differentiated with 6th-order stencils by default:
# centred in the interior, one-sided of the same order on the first and last
# three nodes.  order=4 is kept for comparison.
DEFAULT_ORDER = 6
_STENCILS = {4: _stencils(4), 6: _stencils(6)}


def d1(f: np.ndarray, axis: int, h: float, order: int | None = None) -> np.ndarray:
    """First derivative of tabulated ``f`` along ``axis``."""
    order = order or DEFAULT_ORDER
    central, edge = _STENCILS[order]
    half = order // 2
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    if n < order + 1:
        raise ValueError(f"need at least {order + 1} nodes for order-{order} differences")
    out = np.zeros_like(f)
    for k, w in enumerate(central):
        if w != 0.0:
            out[half:n - half] += w * f[k:n - 2 * half + k]
    rev = f[::-1]
    for k, w in enumerate(edge):
        out[k] = np.tensordot(w, f[:order + 1], axes=1)
        out[n - 1 - k] = -np.tensordot(w, rev[:order + 1], axes=1)
    return np.moveaxis(out / h, 0, axis)


def d2(f: np.ndarray, axes: tuple[int, int], spacing: Sequence[float]) -> np.ndarray:
    i, j = axes
    return d1(d1(f, i, spacing[i]), j, spacing[j])


def interp_mid(f: np.ndarray, axis: int) -> np.ndarray:
    """Cubic (4-point Lagrange) values halfway between consecutive nodes."""
    f = np.moveaxis(np.asarray(f), axis, 0)
    n = f.shape[0]
    out = np.empty((n - 1,) + f.shape[1:], dtype=f.dtype)
    out[1:-1] = (-f[:-3] + 9.0 * f[1:-2] + 9.0 * f[2:-1] - f[3:]) / 16.0
    out[0] = (5.0 * f[0] + 15.0 * f[1] - 5.0 * f[2] + f[3]) / 16.0
    out[-1] = (5.0 * f[-1] + 15.0 * f[-2] - 5.0 * f[-3] + f[-4]) / 16.0
    return np.moveaxis(out, 0, axis)


@dataclass
class ResidualReport:
    """Max/mean of several residual fields over a grid.

    Nodes where a residual is ``nan`` are treated as excluded (singular,
    umbilic, off-chart) and counted rather than averaged.
    """

    name: str
    max: dict[str, float]
    mean: dict[str, float]
    excluded: int = 0
    grid: dict = field(default_factory=dict)
    fields: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    notes: list[str] = field(default_factory=list)

    @classmethod
    def from_fields(cls, name: str, fields: dict, grid: GridDomain | None = None,
                    keep_fields: bool = True, notes=None) -> ResidualReport:
        mx, mn = {}, {}
        bad = None
        kept = {}
        for key, arr in fields.items():
            a = np.abs(np.asarray(arr, dtype=complex if np.iscomplexobj(arr) else float))
            a = np.real(a)
            mask = np.isnan(a)
            bad = mask if bad is None else (bad | mask) if bad.shape == mask.shape else bad
            vals = a[~mask]
            mx[key] = float(vals.max()) if vals.size else 0.0
            mn[key] = float(vals.mean()) if vals.size else 0.0
            if keep_fields:
                kept[key] = a
        excluded = int(bad.sum()) if bad is not None else 0
        return cls(name, mx, mn, excluded, grid.meta() if grid is not None else {},
                   kept, list(notes or []))

    @property
    def max_residual(self) -> float:
        return max(self.max.values(), default=0.0)

    @property
    def mean_residual(self) -> float:
        return max(self.mean.values(), default=0.0)

    def passes(self, tol: float) -> bool:
        return self.max_residual <= tol

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "max": {k: self.max[k] for k in sorted(self.max)},
            "mean": {k: self.mean[k] for k in sorted(self.mean)},
            "max_residual": self.max_residual,
            "excluded": self.excluded,
            "grid": self.grid,
            "notes": list(self.notes),
        }

    def __str__(self):
        return f"{self.name}: max={self.max_residual:.3e} excluded={self.excluded}"
