import math

import numpy as np
import pytest

from shapelab.catalog import make_example
from shapelab.expr import parse
from shapelab.grid import GridDomain
from shapelab.lame import EX8_ETA, RotationData
from shapelab.metric import (DiagonalMetric, MetricPencil, PencilError, SingularMetric, christoffel_ab,
                             constant_curvature_residual, curvature_one_residual, flatness_residual,
                             gaussian_curvature, gaussian_curvature_field, lame_fields,
                             pencil_curvature_scan)

D2 = GridDomain((0.3, 0.2), (1.3, 1.2), 16)


def _values(c, dom, params=None):
    return c.evaluate(dom, params)


def test_christoffel_sphere():
    c = christoffel_ab(DiagonalMetric(("1", "sin(R1)^2"), D2))
    v = _values(c, D2)
    R1 = D2.mesh()[0]
    assert np.abs(v[(0, 1)]).max() == 0.0
    assert np.abs(v[(1, 0)] - np.cos(R1) / np.sin(R1)).max() < 1e-13


def test_christoffel_constant():
    v = _values(christoffel_ab(DiagonalMetric(("1", "1"), D2)), D2)
    assert all(np.abs(x).max() == 0.0 for x in v.values())


def test_christoffel_quadric():
    b = make_example("quadric")
    v = christoffel_ab(b.metric).evaluate(b.domain)
    R1, R2 = b.domain.mesh()
    assert np.abs(v[(0, 1)] - 1 / (2 * (R2 - R1))).max() < 1e-10
    assert np.abs(v[(1, 0)] - 1 / (2 * (R1 - R2))).max() < 1e-10


def test_christoffel_matches_log_derivative_tabulated():
    # symbolic a, b against differences of ln sqrt(G_ii) on a dense grid
    dom = GridDomain((0.3, 0.2), (1.3, 1.2), 129)
    m = DiagonalMetric(("1/(1 + 0.3/cos(R1)^2)", "sin(R1)^2/(1 + R2^2)"), dom)
    sym = christoffel_ab(m).evaluate(dom)
    tab = christoffel_ab(DiagonalMetric(tuple(m.values()), dom)).evaluate(dom)
    for k in sym:
        assert np.abs(sym[k] - tab[k]).max() < 1e-10


def test_gaussian_curvature_examples():
    assert gaussian_curvature(DiagonalMetric(("1", "sin(R1)^2"), D2), (math.pi / 3, 0.5)) == pytest.approx(1.0, abs=1e-12)
    assert gaussian_curvature(DiagonalMetric(("1", "1"), D2), (0.5, 0.5)) == 0.0
    assert gaussian_curvature(DiagonalMetric(("1", "exp(2*R1)"), D2), (0.5, 0.7)) == pytest.approx(-1.0, abs=1e-12)


def test_gaussian_curvature_hyperbolic_fd_oracle():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 129)
    tab = DiagonalMetric(tuple(DiagonalMetric(("1", "exp(2*R1)"), dom).values()), dom)
    K = gaussian_curvature_field(tab)
    assert np.abs(K[8:-8, 8:-8] + 1).max() < 1e-8


def test_gaussian_curvature_rejects_nonpositive():
    with pytest.raises(SingularMetric):
        gaussian_curvature(DiagonalMetric(("R1", "1"), D2), (-1.0, 0.0))


def test_curvature_one_monge():
    m = DiagonalMetric(("1/(1 + 0.3/cos(R1)^2)", "sin(R1)^2/(1 + R2^2)"), D2)
    assert curvature_one_residual(m).max_residual <= 1e-8


def test_curvature_one_two_param_indefinite():
    # a = 0.2, c = 1.5: a R^2 - R + c has no real roots, the form is indefinite
    dom = GridDomain((1.0, 2.5), (2.0, 3.5), 32)
    a, c = 0.2, 1.5
    g1 = f"(R1 - R2)/((R1 + R2)^2*({a}*R1^2 - R1 + {c}))"
    g2 = f"-(R1 - R2)/((R1 + R2)^2*({a}*R2^2 - R2 + {c}))"
    assert curvature_one_residual(DiagonalMetric((g1, g2), dom)).max_residual <= 1e-8


def test_curvature_one_euclidean_is_one():
    r = curvature_one_residual(DiagonalMetric(("1", "1"), D2))
    assert np.all(r.fields["K=1"] == 1.0)


def test_metric_validate():
    DiagonalMetric(("1", "1 + R1^2"), D2).validate()
    with pytest.raises(SingularMetric):
        DiagonalMetric(("1", "R1 - 1"), D2).validate()


def test_metric_rejects_mixed_fields():
    with pytest.raises(TypeError):
        DiagonalMetric(("1", np.ones(D2.shape)), D2)


def test_lame_fields_sphere():
    H, beta = lame_fields(DiagonalMetric(("1", "sin(R1)^2"), D2))
    env = {"R1": 0.7, "R2": 0.3}
    assert H[1].evaluate(env) == pytest.approx(math.sin(0.7))
    assert beta[(0, 1)].evaluate(env) == pytest.approx(math.cos(0.7))
    assert beta[(1, 0)].evaluate(env) == 0.0


# ---------------------------------------------------------------------------
# pencils


def test_pencil_ex8_scan(ex8):
    p = MetricPencil(ex8.H, EX8_ETA, ex8.domain)
    reps = pencil_curvature_scan(p, [0.75, 1.0, 2.0, 5.0, 10.0])
    assert max(r.max_residual for r in reps) <= 1e-6
    spread = max(r.max_residual for r in reps) - min(r.max_residual for r in reps)
    assert spread <= 1e-6


def test_pencil_ex8_lambda_zero_indefinite(ex8):
    p = MetricPencil(ex8.H, EX8_ETA, ex8.domain)
    with pytest.raises(PencilError):
        p.evaluate(0.0)
    (r,) = pencil_curvature_scan(p, [0.0], allow_indefinite=True)
    assert r.max_residual <= 1e-6


def test_pencil_ex8_perturbed(ex8):
    noise = 1e-3 * np.random.default_rng(0).standard_normal(ex8.domain.shape)
    p = MetricPencil((ex8.H[0] + noise, ex8.H[1]), EX8_ETA, ex8.domain)
    (r,) = pencil_curvature_scan(p, [1.0])
    assert r.max_residual > 1e-4


def test_pencil_eta_must_be_separated():
    with pytest.raises(PencilError):
        MetricPencil(("1", "1"), ("R2", "0"), D2)


def test_pencil_symbolic_evaluate():
    p = MetricPencil(("1", "R1"), ("2", "1 + 0.3*sin(R2)"), D2)
    m = p.evaluate(0.5)
    g = m.values()
    assert np.allclose(g[0], 1 / 2.5)
    assert p.admissible_interval()[0] < 0


# ---------------------------------------------------------------------------
# flatness


def _rotation(H, dom):
    H = [np.broadcast_to(np.asarray(h, dtype=float), dom.shape).copy() for h in H]
    h = dom.spacing
    from shapelab.grid import d1
    n = dom.dim
    beta = {(i, j): d1(H[j], i, h[i]) / H[i] for i in range(n) for j in range(n) if i != j}
    return RotationData(tuple(H), beta, tuple("0" for _ in range(n)), dom)


def test_flatness_cartesian():
    dom = GridDomain((0, 0, 0), (1, 1, 1), 10)
    rd = RotationData((np.ones(dom.shape),) * 3, {(i, j): np.zeros(dom.shape) for i in range(3)
                                                  for j in range(3) if i != j}, ("0", "0", "0"), dom)
    assert flatness_residual(rd).max_residual == 0.0


def test_flatness_spherical():
    # exact rotation coefficients of spherical coordinates
    dom = GridDomain((1.0, 0.5, 0.0), (2.0, 1.5, 1.0), 24)
    R1, R2, _ = dom.mesh()
    H = (np.ones(dom.shape), R1, R1 * np.sin(R2))
    z = np.zeros(dom.shape)
    beta = {(0, 1): np.ones(dom.shape), (0, 2): np.sin(R2), (1, 2): np.cos(R2),
            (1, 0): z, (2, 0): z, (2, 1): z}
    rd = RotationData(H, beta, ("0", "0", "0"), dom)
    assert flatness_residual(rd).max_residual <= 1e-8
    assert rd.lame_check().max_residual <= 1e-8


def test_flatness_detects_curvature():
    dom = GridDomain((0.5, 0.5, 0.5), (1.0, 1.0, 1.0), 16)
    R1, R2, R3 = dom.mesh()
    rd = _rotation((1 + R2 * R3, 1 + R1 ** 2, np.ones(dom.shape)), dom)
    assert flatness_residual(rd).max_residual > 1e-2


def test_constant_curvature_sphere3():
    dom = GridDomain((0.3, 0.3, 0.0), (1.3, 1.3, 1.0), 8)
    m = DiagonalMetric(("1", "sin(R1)^2", "sin(R1)^2*sin(R2)^2"), dom)
    assert constant_curvature_residual(m, 1.0).max_residual < 1e-12
    flat = DiagonalMetric(("1", "R1^2", "R1^2*sin(R2)^2"), dom)
    assert constant_curvature_residual(flat, 0.0).max_residual < 1e-12
    assert constant_curvature_residual(flat, 1.0).max_residual > 0.1


def test_parse_names_forwarded():
    m = DiagonalMetric(("1", "c*R1"), D2, {"c": 2.0})
    assert np.allclose(m.values()[1], 2.0 * D2.mesh()[0])
    assert parse("c*R1", ["c"]).evaluate(c=2.0, R1=1.0) == 2.0
