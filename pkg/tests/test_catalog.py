import numpy as np
import pytest

from shapelab.catalog import (DEFORMATION_PARAMS, NAMES, CatalogError, CurvatureField, NoClosedForm, closed_form_curvatures,
                              default_params, make_example, random_params)
from shapelab.codazzi import codazzi_residual
from shapelab.expr import parse
from shapelab.grid import GridDomain
from shapelab.metric import christoffel_ab, constant_curvature_residual, curvature_one_residual


def _chi_gap(c1, c2, dom):
    a, b = c1.evaluate(dom), c2.evaluate(dom)
    return max(float(np.nanmax(np.abs(a[k] - b[k]))) for k in a)


def test_quadric_metric_and_coefficients():
    b = make_example("quadric", {"a": -6, "b": 11, "c": -6})
    R1, R2 = b.domain.mesh()
    P = lambda x: (x - 1) * (x - 2) * (x - 3)
    G = b.metric.values()
    assert np.abs(G[0] - (R2 - R1) / (4 * P(R1))).max() < 1e-12
    assert np.abs(G[1] + (R2 - R1) / (4 * P(R2))).max() < 1e-12
    chi = b.codazzi.evaluate(b.domain)
    assert np.abs(chi[(0, 1)] - 1 / (2 * (R2 - R1))).max() < 1e-12
    assert np.abs(chi[(1, 0)] - 1 / (2 * (R1 - R2))).max() < 1e-12


def test_dupin_coefficients():
    b = make_example("dupin")
    R1, R2 = b.domain.mesh()
    chi = b.codazzi.evaluate(b.domain)
    assert np.abs(chi[(0, 1)] - 1 / (R1 - R2)).max() < 1e-12
    assert np.abs(chi[(1, 0)] - 1 / (R2 - R1)).max() < 1e-12


def test_one_param_coefficients():
    b = make_example("one_param", {"c": 0.5})
    R1, R2 = b.domain.mesh()
    chi = b.codazzi.evaluate(b.domain)
    for key in chi:
        assert np.abs(chi[key] + np.tanh(R1 + R2)).max() < 1e-12
    G = b.metric.values()
    assert np.abs(G[0] - 2 / np.cosh(R1 + R2) ** 2 / 1.5).max() < 1e-12


def test_closed_form_quadric_values():
    k = closed_form_curvatures("quadric")
    env = {"R1": 4.0, "R2": 9.0}
    assert k.k[0].evaluate(env) == pytest.approx(1 / 24, rel=1e-14)
    assert k.k[1].evaluate(env) == pytest.approx(1 / 54, rel=1e-14)


def test_closed_form_dupin():
    k = closed_form_curvatures("dupin")
    assert str(k.k[0]) == "R2" and str(k.k[1]) == "R1"


def test_example5_q_family_reduces_to_revolution():
    p = "1 + 0.1*sin(R2)"
    base = make_example("conf_revolution", {"p": p})
    q_choice = make_example("conf_revolution", {"p": p, "q": f"1/({p})"})
    for a, b in zip(base.curvatures.values(), q_choice.curvatures.values()):
        assert np.abs(a - b).max() < 1e-12


@pytest.mark.parametrize("q", ["2 + 0.3*cos(R2)", "exp(R2)", "1/(1 + 0.1*sin(R2))"])
def test_example5_q_family_solves_codazzi(q):
    b = make_example("conf_revolution", {"q": q})
    assert codazzi_residual(b.curvatures, b.codazzi).max_residual <= 1e-8


def test_no_closed_form_for_ode_examples():
    for name in ("monge", "moulding"):
        with pytest.raises(NoClosedForm) as exc:
            closed_form_curvatures(name)
        assert "ODE" in exc.value.description


def test_family_dims():
    dims = {name: make_example(name).family_dim for name in NAMES}
    assert (dims["monge"].functions, dims["monge"].constants) == (1, 1)
    assert (dims["moulding"].functions, dims["moulding"].constants) == (1, 0)
    for name in ("quadric", "dupin", "conf_revolution"):
        assert dims[name].constants == 3
    assert dims["two_param"].constants == 2
    assert dims["one_param"].constants == 1
    assert dims["hyperquadric"].constants == 4  # n = 3


@pytest.mark.parametrize("name", NAMES)
def test_codazzi_fields_match_christoffel(name):
    b = make_example(name)
    assert _chi_gap(christoffel_ab(b.metric), b.codazzi, b.domain) <= 1e-8


@pytest.mark.parametrize("name", ["quadric", "dupin", "conf_revolution", "two_param", "one_param"])
def test_codazzi_fields_do_not_depend_on_deformation(name):
    rng = np.random.default_rng(3)
    b0 = make_example(name)
    draw = random_params(name, rng)
    deform = {k: draw[k] for k in DEFORMATION_PARAMS[name]}
    b1 = make_example(name, deform, domain=b0.domain, validate=False)
    assert _chi_gap(christoffel_ab(b0.metric), christoffel_ab(b1.metric), b0.domain) <= 1e-8


@pytest.mark.parametrize("name", [n for n in NAMES if n != "hyperquadric"])
def test_random_draws_have_curvature_one(name):
    rng = np.random.default_rng(11)
    for _ in range(3):
        b = make_example(name, random_params(name, rng))
        assert curvature_one_residual(b.metric).max_residual <= 1e-6


def test_hyperquadric_constant_curvature():
    b = make_example("hyperquadric", N=12)
    assert constant_curvature_residual(b.metric, 1.0).max_residual <= 1e-6


def test_hyperquadric_n2_is_quadric():
    h = make_example("hyperquadric", {"roots": [1.0, 2.0, 3.0]})
    q = make_example("quadric", domain=h.domain)
    assert _chi_gap(h.codazzi, q.codazzi, h.domain) == 0.0
    for a, c in zip(h.metric.values(), q.metric.values()):
        assert np.abs(a - c).max() < 1e-12


def test_conf_revolution_inversion_gives_dupin():
    # p = R2, then R^i -> 1/R^i: chi'_ij(S) = -(R^j)^2 chi_ij(R) at R = 1/S
    b = make_example("conf_revolution", {"p": "R2"}, validate=False)
    d = make_example("dupin", validate=False)
    rng = np.random.default_rng(5)
    S = rng.uniform([2.0, 0.1], [3.0, 1.0], size=(20, 2))
    for s1, s2 in S:
        env = {"R1": 1 / s1, "R2": 1 / s2}
        denv = {"R1": s1, "R2": s2}
        for (i, j), e in b.codazzi.chi.items():
            transformed = -(env[f"R{j + 1}"] ** 2) * e.evaluate(env)
            assert transformed == pytest.approx(d.codazzi.chi[(i, j)].evaluate(denv), rel=1e-12, abs=1e-12)


def test_bad_domain_rejected_with_locus():
    with pytest.raises(CatalogError) as exc:
        make_example("quadric", domain=GridDomain((0.5, 1.5), (1.5, 2.5), 16))
    assert "R=" in str(exc.value)


def test_unknown_name_and_param():
    with pytest.raises(CatalogError):
        make_example("torus")
    with pytest.raises(CatalogError):
        make_example("quadric", {"d": 1.0})


def test_defaults_are_copies():
    p = default_params("quadric")
    p["a"] = 0.0
    assert default_params("quadric")["a"] == -6.0


def test_umbilic_validation():
    dom = GridDomain((0.0, 0.0), (1.0, 1.0), 8)
    with pytest.raises(CatalogError):
        CurvatureField(("R1", "R2"), dom).validate()
    CurvatureField(("R1", "R2 + 2"), dom).validate()
    assert parse("R1").evaluate(R1=2.0) == 2.0
