import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapelab.frames import (FrameError, connection, hypersurface_shape, integrate_frame,
                             path_independence, scaling_law_check)
from shapelab.grid import GridDomain
from shapelab.lame import RotationData, solve_goursat_ex8


def flat_data(n=3, N=9, H=1.0, eta=("0", "1", "3")):
    dom = GridDomain((0,) * n, (1,) * n, N)
    z = np.zeros(dom.shape)
    beta = {(i, j): z for i in range(n) for j in range(n) if i != j}
    return RotationData(tuple(np.full(dom.shape, H) for _ in range(n)), beta, eta[:n], dom)


def random_rotation(seed, m):
    q, r = np.linalg.qr(np.random.default_rng(seed).normal(size=(m, m)))
    return q * np.sign(np.diag(r))


@pytest.fixture(scope="module")
def ex8_small():
    return solve_goursat_ex8(0.3, 0.2, GridDomain((0, 0), (0.5, 0.5), 24))


def test_zero_rotation_gives_constant_frame_and_affine_position():
    rd = flat_data()
    ff = integrate_frame(rd, 1.0)
    assert np.abs(ff.frame - np.eye(3)).max() == 0.0
    s = np.sqrt(1.0 + np.array([0.0, 1.0, 3.0]))
    R = np.stack(rd.domain.mesh(), axis=-1)
    assert np.abs(ff.position - R / s).max() < 1e-13


def test_connection_is_antisymmetric(ex8):
    A, c, s = connection(ex8, 1.0)
    assert np.abs(A + np.swapaxes(A, -1, -2)).max() == 0.0
    assert np.allclose([x.flat[0] for x in s], [np.sqrt(0.5), np.sqrt(1.5)])


def test_ex8_frame_quality(ex8):
    ff = integrate_frame(ex8, 1.0)
    assert ff.gram_drift() <= 1e-6
    assert ff.metric_match().max_residual <= 1e-5
    assert ff.mixed_partials(trim=2).max_residual <= 1e-5
    # the n = 2 position is a point of the unit sphere
    assert np.abs(np.linalg.norm(ff.position, axis=-1) - 1).max() <= 1e-6


def test_ex8_complex_branch(ex8):
    ff = integrate_frame(ex8, 0.0)
    assert ff.meta["complex"]
    assert ff.gram_drift() <= 1e-6
    assert ff.metric_match().max_residual <= 1e-5


def test_path_independence_n2(ex8):
    diff, nodes = path_independence(ex8, 1.0)
    assert diff <= 1e-5 and len(nodes) == 4


def test_path_independence_n3(triple):
    assert path_independence(triple.rd, 0.2)[0] <= 1e-5


def test_triple_frames(triple):
    ff = integrate_frame(triple.rd, 2.0)
    assert ff.gram_drift() <= 1e-6
    assert ff.metric_match().max_residual <= 1e-5
    assert ff.mixed_partials(trim=2).max_residual <= 1e-4


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_rotation_equivariance(ex8_small, seed):
    Q = random_rotation(seed, 3)
    a = integrate_frame(ex8_small, 1.0)
    b = integrate_frame(ex8_small, 1.0, frame0=Q)
    assert np.abs(b.frame - a.frame @ Q).max() <= 1e-10
    assert np.abs(b.position - a.position @ Q).max() <= 1e-10


def test_rotation_equivariance_n3_with_base():
    rd = flat_data(N=8)
    Q = random_rotation(1, 3)
    base = np.array([0.5, -1.0, 2.0])
    a = integrate_frame(rd, 0.5)
    b = integrate_frame(rd, 0.5, frame0=Q, base=base)
    assert np.abs(b.position - (a.position @ Q + base)).max() <= 1e-12


def test_non_orthonormal_frame_rejected(ex8_small):
    with pytest.raises(FrameError):
        integrate_frame(ex8_small, 1.0, frame0=np.diag([1.0, 2.0, 1.0]))
    with pytest.raises(FrameError):
        integrate_frame(ex8_small, 1.0, frame0=np.eye(2))


def test_hypersurface_flat_has_zero_curvature():
    cf = hypersurface_shape(integrate_frame(flat_data(), 1.0), 2, 4)
    assert all(np.abs(k).max() == 0.0 for k in cf.k)
    assert cf.meta["quantity"] == "principal curvature"


def test_hypersurface_cross_check(ex8, triple):
    cf = hypersurface_shape(integrate_frame(ex8, 1.0), 1, 32)
    assert cf.meta["cross_check"] <= 1e-5 and cf.meta["principal"] <= 1e-5
    cf3 = hypersurface_shape(integrate_frame(triple.rd, 2.0), 2, 12)
    assert cf3.meta["cross_check"] <= 1e-4 and len(cf3.k) == 2


def test_hypersurface_bad_arguments(ex8_small):
    ff = integrate_frame(ex8_small, 1.0)
    with pytest.raises(ValueError):
        hypersurface_shape(ff, 2, 0)
    with pytest.raises(ValueError):
        hypersurface_shape(ff, 0, 24)


def test_scaling_equal_lambdas(ex8):
    rep = scaling_law_check(ex8, 1.0, 1.0, 1, 32)
    assert rep.max["ratio[1]"] == 0.0
    assert rep.max["principal_dirs"] <= 1e-8


def test_scaling_ex8(ex8):
    rep = scaling_law_check(ex8, 0.0, 1.0, 1, 32)
    assert rep.max_residual <= 1e-5
    factor = float(next(n for n in rep.notes if n.startswith("factor=")).split("=")[1])
    assert abs(factor - 1 / np.sqrt(3)) < 1e-14


def test_scaling_triple(triple_shifted):
    for l1, l2 in ((0.0, 1.0), (0.2, 2.0)):
        assert scaling_law_check(triple_shifted.rd, l1, l2, 2, 12).max_residual <= 1e-4
