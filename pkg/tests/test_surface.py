import numpy as np
import pytest

from shapelab.catalog import make_example
from shapelab.grid import GridDomain
from shapelab.metric import DiagonalMetric
from shapelab.surface import (SurfaceError, SurfaceMesh, bundle_surface, cylinder_mesh, deformation_family,
                              export_obj, fit_quadric, load_obj, mesh_fundamental_forms, oracle_report,
                              reconstruct_surface, sphere_mesh)


def quadric_params(r1, r2, r3):
    return {"a": -(r1 + r2 + r3), "b": r1 * r2 + r1 * r3 + r2 * r3, "c": -r1 * r2 * r3}


@pytest.fixture(scope="module")
def dupin():
    return bundle_surface("dupin")


def test_obj_two_by_two(tmp_path):
    p = np.array([[[0, 0, 0], [0, 1, 0]], [[1, 0, 0], [1, 1, 0.5]]], dtype=float)
    n = np.broadcast_to([0.0, 0.0, 1.0], p.shape)
    path = export_obj(SurfaceMesh(p, n, None), tmp_path / "m.obj")
    tags = [ln.split()[0] for ln in open(path) if ln.strip() and not ln.startswith("#")]
    assert (tags.count("v"), tags.count("vn"), tags.count("f")) == (4, 4, 2)
    _, _, f = load_obj(path)
    assert f.tolist() == [[0, 2, 3], [0, 3, 1]]


def test_obj_counts_and_round_trip(dupin, tmp_path):
    _, mesh = dupin
    path = export_obj(mesh, tmp_path / "d.obj")
    v, vn, f = load_obj(path)
    assert v.shape == (4096, 3) and vn.shape == (4096, 3) and f.shape == (7938, 3)
    assert np.abs(v - mesh.positions.reshape(-1, 3)).max() <= 1e-8 * (1 + np.abs(v).max())
    assert np.abs(vn - mesh.normals.reshape(-1, 3)).max() <= 1e-8
    assert f.min() == 0 and f.max() == 4095
    assert not list(tmp_path.glob(".tmp-*"))


def test_faces_are_consistently_oriented(dupin):
    _, mesh = dupin
    x = mesh.positions.reshape(-1, 3)
    tri = mesh.faces()
    fn = np.cross(x[tri[:, 1]] - x[tri[:, 0]], x[tri[:, 2]] - x[tri[:, 0]])
    s = np.sign(np.einsum("ij,ij->i", fn, mesh.normals.reshape(-1, 3)[tri[:, 0]]))
    assert abs(s.sum()) == len(s)


@pytest.mark.parametrize("name", ["dupin", "quadric", "one_param", "two_param", "conf_revolution"])
def test_oracle_closure(name):
    b, mesh = bundle_surface(name)
    rep = oracle_report(mesh, b.curvatures, b.metric)
    assert max(rep.max["k[1]"], rep.max["k[2]"]) <= 1e-3, rep.max
    # the third form goes through second differences of the mesh, so it gets a looser bound
    assert max(v for key, v in rep.max.items() if key.startswith("III")) <= 2e-3, rep.max
    assert mesh.provenance["frame_drift"] <= 1e-8
    assert mesh.positions.shape == (64, 64, 3)


def test_one_param_is_minimal():
    _, mesh = bundle_surface("one_param")
    H = mesh_fundamental_forms(mesh).mean_curvature
    assert np.nanmax(np.abs(H[2:-2, 2:-2])) <= 1e-3


def test_quadric_bundle_lies_on_a_quadric(dupin):
    _, mesh = bundle_surface("quadric")
    assert fit_quadric(mesh.positions)[1] <= 1e-8
    # a cyclide is quartic, so the fit leaves a visible residual
    assert fit_quadric(dupin[1].positions)[1] > 1e-4


def test_oracle_on_sphere_and_cylinder():
    f = mesh_fundamental_forms(sphere_mesh(2.0))
    for r in f.radii:
        assert np.nanmax(np.abs(np.abs(r) - 2.0)) <= 1e-3
    f = mesh_fundamental_forms(cylinder_mesh(1.0))
    assert np.nanmax(np.abs(np.abs(f.radii[0]) - 1.0)) <= 1e-3
    assert np.isinf(f.radii[1][1:-1, 1:-1]).all()
    assert np.isnan(f.radii[0][0]).all()


def test_rigid_motion(dupin):
    b, mesh = dupin
    q, r = np.linalg.qr(np.random.default_rng(5).normal(size=(3, 3)))
    Q = q * np.sign(np.diag(r))
    t = np.array([1.0, -2.0, 0.5])
    moved = reconstruct_surface(b.metric, b.curvatures, base=Q, origin=t)
    assert np.abs(moved.positions - (mesh.positions @ Q + t)).max() <= 1e-8
    assert np.abs(moved.normals - mesh.normals @ Q).max() <= 1e-8


def test_quadric_family():
    ps = [quadric_params(1, 2, 3), quadric_params(0.9, 2.1, 3.2), quadric_params(1.1, 1.95, 2.9)]
    meshes, rep = deformation_family("quadric", ps)
    assert rep["passes"] and rep["members"] == 3 and rep["shape_gap"] <= 1e-3
    assert np.abs(meshes[0].positions - meshes[1].positions).max() > 1e-3


def test_one_param_family():
    meshes, rep = deformation_family("one_param", lambdas=[-0.5, 0.0, 0.5])
    assert rep["passes"] and rep["shape_gap"] <= 1e-3 and len(meshes) == 3


def test_single_member_family():
    meshes, rep = deformation_family("dupin", [{}])
    assert rep["members"] == 1 and rep["shape_gap"] == 0.0 and rep["passes"]


def test_family_argument_errors():
    with pytest.raises(ValueError):
        deformation_family("dupin")
    with pytest.raises(ValueError):
        deformation_family("quadric", lambdas=[0.0, 1.0])


def test_umbilic_radii_rejected():
    b = make_example("dupin")
    k = type(b.curvatures)((b.curvatures.k[0], b.curvatures.k[0]))
    with pytest.raises(SurfaceError):
        reconstruct_surface(b.metric, k)


def test_third_form_not_curvature_one():
    dom = GridDomain((1, 1), (2, 2), 16)
    b = make_example("dupin")
    with pytest.raises(SurfaceError, match="curvature 1"):
        reconstruct_surface(DiagonalMetric(("1", "1"), dom), b.curvatures)


def test_bad_base_frame(dupin):
    b, _ = dupin
    with pytest.raises(SurfaceError):
        reconstruct_surface(b.metric, b.curvatures, base=2 * np.eye(3))


def test_non_unit_normals_rejected():
    p = np.zeros((2, 2, 3))
    with pytest.raises(SurfaceError):
        SurfaceMesh(p, p, None)
