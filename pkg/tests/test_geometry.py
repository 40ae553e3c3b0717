import numpy as np
import pytest
from hypothesis import given, strategies as st

from surgibench.geometry import (
    Pose,
    look_at,
    pose_from_xyz,
    quat_conjugate,
    quat_from_axis_angle,
    quat_from_matrix,
    quat_multiply,
    quat_normalize,
    quat_rotate,
    quat_to_matrix,
)

unit_floats = st.floats(-1.0, 1.0)
quats = st.tuples(unit_floats, unit_floats, unit_floats, unit_floats).filter(
    lambda q: np.linalg.norm(q) > 1e-3
).map(lambda q: quat_normalize(np.array(q)))
vecs = st.tuples(
    st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)
).map(np.array)


@given(quats)
def test_quat_normalize_unit(q):
    assert abs(np.linalg.norm(q) - 1.0) < 1e-12


@given(quats, vecs)
def test_rotation_preserves_length(q, v):
    assert np.linalg.norm(quat_rotate(q, v)) == pytest.approx(np.linalg.norm(v), abs=1e-9)


@given(quats, vecs)
def test_conjugate_inverts_rotation(q, v):
    back = quat_rotate(quat_conjugate(q), quat_rotate(q, v))
    np.testing.assert_allclose(back, v, atol=1e-9)


@given(quats)
def test_matrix_round_trip(q):
    q2 = quat_from_matrix(quat_to_matrix(q))
    # q and -q encode the same rotation.
    assert min(np.linalg.norm(q2 - q), np.linalg.norm(q2 + q)) < 1e-9


@given(quats, quats, vecs)
def test_multiply_composes(q1, q2, v):
    lhs = quat_rotate(quat_multiply(q1, q2), v)
    rhs = quat_rotate(q1, quat_rotate(q2, v))
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_axis_angle_quarter_turn():
    q = quat_from_axis_angle(np.array([0.0, 0.0, np.pi / 2]))
    np.testing.assert_allclose(quat_rotate(q, np.array([1.0, 0, 0])), [0, 1, 0], atol=1e-12)


def test_pose_compose_inverse_identity():
    p = Pose(np.array([0.1, -0.2, 0.3]), quat_from_axis_angle(np.array([0.3, 0.2, 0.1])))
    ident = p.compose(p.inverse())
    np.testing.assert_allclose(ident.position, 0.0, atol=1e-12)
    assert abs(abs(ident.orientation[0]) - 1.0) < 1e-12


def test_pose_transform_points_matches_compose():
    p = pose_from_xyz(0.01, 0.02, 0.03)
    pts = np.array([[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]])
    out = p.transform_points(pts)
    np.testing.assert_allclose(out, pts + np.array([0.01, 0.02, 0.03]), atol=1e-12)


def test_pose_rejects_non_unit_quaternion():
    with pytest.raises(ValueError):
        Pose(np.zeros(3), np.array([1.0, 1.0, 0.0, 0.0]))


def test_look_at_points_camera_z_at_target():
    eye = np.array([0.0, 0.0, 0.2])
    target = np.zeros(3)
    pose = look_at(eye, target)
    # Camera +z (forward) maps to the world direction toward the target.
    forward = quat_rotate(pose.orientation, np.array([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(forward, [0, 0, -1], atol=1e-9)
    np.testing.assert_allclose(pose.position, eye, atol=1e-12)
