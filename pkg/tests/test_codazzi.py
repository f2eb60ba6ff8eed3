import numpy as np
import pytest

from shapelab.catalog import CurvatureField, make_example
from shapelab.codazzi import CodazziError, codazzi_residual, integrate_codazzi, mix_metrics, sdeform_span_check
from shapelab.expr import parse
from shapelab.grid import GridDomain
from shapelab.lame import EX8_ETA
from shapelab.metric import CodazziCoeffs, MetricPencil, christoffel_ab, curvature_one_residual

ZERO = CodazziCoeffs.from_surface("0", "0")


def quadric_params(r1, r2, r3):
    return {"a": -(r1 + r2 + r3), "b": r1 * r2 + r1 * r3 + r2 * r3, "c": -r1 * r2 * r3}


def axis_data(k: CurvatureField, dom):
    st = dom.start
    return [k.k[i].subs({f"R{j + 1}": st[j] for j in range(k.n) if j != i}) for i in range(k.n)]


@pytest.mark.parametrize("name", ["quadric", "one_param", "dupin", "conf_revolution", "two_param", "hyperquadric"])
def test_closed_form_residual(name):
    b = make_example(name)
    assert codazzi_residual(b.curvatures, b.codazzi).max_residual <= 1e-8


def test_separated_radii_with_zero_coefficients():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 16)
    k = CurvatureField(("exp(R1)", "3 + sin(R2)"), dom)
    assert codazzi_residual(k, ZERO).max_residual == 0.0


def test_umbilic_nodes_excluded():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 9)
    k = CurvatureField(("R1", "R2"), dom)
    rep = codazzi_residual(k, ZERO)
    assert "umbilic nodes: 9" in rep.notes
    assert rep.excluded == 9


@pytest.mark.parametrize("name", ["quadric", "dupin", "one_param", "conf_revolution"])
def test_integrate_reproduces_closed_form(name):
    b = make_example(name)
    k = integrate_codazzi(b.codazzi, axis_data(b.curvatures, b.domain), b.domain)
    err = max(np.abs(x - y).max() for x, y in zip(k.values(), b.curvatures.values()))
    assert err <= 1e-5
    assert codazzi_residual(k, b.codazzi).max_residual <= 1e-5


def test_integrate_example5_q_family():
    b = make_example("conf_revolution", {"q": "2 + 0.3*cos(R2)"})
    k = integrate_codazzi(b.codazzi, axis_data(b.curvatures, b.domain), b.domain)
    err = max(np.abs(x - y).max() for x, y in zip(k.values(), b.curvatures.values()))
    assert err <= 1e-5


def test_integrate_zero_coefficients_product_extension():
    dom = GridDomain((0.0, 0.0), (0.5, 0.5), 16)
    k = integrate_codazzi(ZERO, ["1 + R1", "2 + R2"], dom)
    R1, R2 = dom.mesh()
    assert np.abs(k.values()[0] - (1 + R1)).max() < 1e-13
    assert np.abs(k.values()[1] - (2 + R2)).max() < 1e-13


def test_integrate_detects_crossing():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 16)
    with pytest.raises(CodazziError) as exc:
        integrate_codazzi(ZERO, ["R1", "0.5"], dom)
    assert exc.value.locus is not None


def test_integrate_rejects_umbilic_corner():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 16)
    with pytest.raises(CodazziError):
        integrate_codazzi(ZERO, ["1 + R1", "1"], dom)


def test_boundary_must_live_on_its_axis():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 16)
    with pytest.raises(ValueError):
        integrate_codazzi(ZERO, ["1 + R2", "2"], dom)


def test_marching_order_independent():
    b = make_example("quadric", N=12)
    data = axis_data(b.curvatures, b.domain)
    runs = [integrate_codazzi(b.codazzi, data, b.domain, richardson=False, order=o).values()
            for o in ("wavefront", "row", "column")]
    for other in runs[1:]:
        assert max(np.abs(x - y).max() for x, y in zip(runs[0], other)) <= 1e-6


def test_richardson_ratio():
    # Dupin radii are linear and marched exactly, so use the quadric
    b = make_example("quadric")
    k = integrate_codazzi(b.codazzi, axis_data(b.curvatures, b.domain), b.domain)
    assert k.meta["error_ratio"] >= 3.5


# ---------------------------------------------------------------------------
# S-deformation span


def test_span_two_pencil_slices(ex8):
    p = MetricPencil(ex8.H, EX8_ETA, ex8.domain)
    rep = sdeform_span_check(p.evaluate(1.0), p.evaluate(3.0), 0.3)
    assert rep.max_residual <= 1e-6


def test_span_identity():
    b = make_example("one_param")
    own = curvature_one_residual(b.metric).max_residual
    for lam in (-0.5, 0.3, 2.0):
        assert sdeform_span_check(b.metric, b.metric, lam).max_residual == pytest.approx(own, abs=1e-14)


def test_span_quadric_parameter_sets():
    b1 = make_example("quadric")
    b2 = make_example("quadric", quadric_params(1.01, 2.0, 3.05), domain=b1.domain)
    assert sdeform_span_check(b1.metric, b2.metric, 0.5).max_residual <= 1e-6


def test_span_rejects_non_partners():
    q = make_example("quadric")
    other = make_example("one_param", domain=q.domain, validate=False)
    with pytest.raises(CodazziError):
        sdeform_span_check(q.metric, other.metric, 0.5)


def test_mix_metrics_inverse_combination():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 8)
    from shapelab.metric import DiagonalMetric
    m = mix_metrics(DiagonalMetric(("1", "2"), dom), DiagonalMetric(("4", "2"), dom), 0.25)
    g = m.values()
    assert np.allclose(g[0], 1 / (0.25 + 0.75 / 4))
    assert np.allclose(g[1], 2.0)


def test_coefficients_recomputed_close_the_loop():
    # metric -> (a, b) -> radii
    for name in ("quadric", "dupin", "two_param", "one_param", "conf_revolution"):
        b = make_example(name)
        assert codazzi_residual(b.curvatures, christoffel_ab(b.metric)).max_residual <= 1e-8
    assert parse("R1").evaluate(R1=1.0) == 1.0
