import numpy as np
import pytest

from surgibench.geometry import Pose, look_at, quat_rotate
from surgibench.rendering.camera import (
    CameraModel,
    CameraRig,
    default_rig,
    perturb_camera,
    sample_perturbation,
    swap_view,
)
from surgibench.rendering.render import (
    BACKGROUND_ID,
    _ray_spheres,
    dump_frames,
    instance_ids,
    render,
)
from surgibench.sim.env import reset_task, step
from surgibench.sim.tasks import get_task_spec
from surgibench.sim.types import Action


def _simple_camera(width=512, height=512, f=256.0):
    return CameraModel(
        fx=f, fy=f, cx=width / 2, cy=height / 2, width=width, height=height,
        pose=Pose(np.zeros(3)), id="test",
    )


def test_ray_sphere_center_depth_analytic():
    # Unit sphere on the optical axis at z = 2: the center ray hits at depth 1.
    dirs = np.array([[0.0, 0.0, 1.0]])
    t_buf = np.full(1, np.inf)
    id_buf = np.full(1, BACKGROUND_ID, dtype=np.int32)
    n_buf = np.zeros((1, 3))
    color_buf = np.zeros((1, 3))
    _ray_spheres(
        np.zeros(3), dirs, [np.array([0.0, 0.0, 2.0])], [1.0], [7],
        t_buf, id_buf, n_buf, color_buf, [np.array([1.0, 0.0, 0.0])],
    )
    assert t_buf[0] == pytest.approx(1.0, abs=1e-6)
    assert id_buf[0] == 7
    np.testing.assert_allclose(n_buf[0], [0, 0, -1], atol=1e-9)


def test_camera_model_invariants():
    with pytest.raises(ValueError):
        CameraModel(fx=-1, fy=1, cx=0, cy=0, width=8, height=8,
                    pose=Pose(np.zeros(3)), id="bad")
    with pytest.raises(ValueError):
        CameraModel(fx=1, fy=1, cx=99, cy=0, width=8, height=8,
                    pose=Pose(np.zeros(3)), id="bad")


def test_render_frame_shapes_and_coherence(task_spec):
    state = reset_task(task_spec, 0)
    rig = default_rig(task_spec)
    fr = render(task_spec, state, rig.primary)
    h, w = rig.primary.height, rig.primary.width
    assert fr.rgb.shape == (h, w, 3) and fr.rgb.dtype == np.uint8
    assert fr.depth.shape == (h, w) and fr.seg.shape == (h, w)
    assert np.all(fr.depth >= 0)
    np.testing.assert_array_equal(fr.seg == BACKGROUND_ID, fr.depth == 0.0)
    valid_ids = set(instance_ids(task_spec, state).values()) | {BACKGROUND_ID}
    assert set(np.unique(fr.seg)) <= valid_ids


def test_render_deterministic(needle_lift_spec):
    state = reset_task(needle_lift_spec, 5)
    cam = default_rig(needle_lift_spec).primary
    a = render(needle_lift_spec, state, cam)
    b = render(needle_lift_spec, state, cam)
    assert a.rgb.tobytes() == b.rgb.tobytes()
    assert a.depth.tobytes() == b.depth.tobytes()
    assert a.seg.tobytes() == b.seg.tobytes()


def test_occlusion_keeps_nearer_instance(needle_lift_spec):
    # The needle rests on the organ; from the top camera, needle pixels must
    # be strictly nearer than organ surface behind them.
    spec = needle_lift_spec
    state = reset_task(spec, 0)
    cam = default_rig(spec).primary
    fr = render(spec, state, cam)
    ids = instance_ids(spec, state)
    needle_px = fr.seg == ids["needle"]
    assert needle_px.any()
    organ_depths = fr.depth[fr.seg == ids["organ"]]
    assert fr.depth[needle_px].min() < organ_depths.max()


def test_default_rig_primary_assignment():
    assert default_rig(get_task_spec("needle_lift")).primary.id == "top"
    assert default_rig(get_task_spec("tissue_retraction")).primary.id == "top"
    assert default_rig(get_task_spec("block_transfer")).primary.id == "side"
    assert default_rig(get_task_spec("suture_pad")).primary.id == "side"
    assert len(default_rig(get_task_spec("needle_handover")).wrists) == 2


def test_wrist_camera_follows_arm(needle_lift_spec):
    spec = needle_lift_spec
    state = reset_task(spec, 0)
    rig = default_rig(spec)
    wrist = rig.wrists[0]
    before = wrist.world_pose(state).position
    delta = np.array([0.004, 0.0, 0.0])
    state2 = step(spec, state, Action(delta[None], np.zeros((1, 3)), np.zeros(1)))
    after = wrist.world_pose(state2).position
    np.testing.assert_allclose(after - before, delta, atol=1e-12)


def test_perturb_bounds_sweep():
    for seed in range(1000):
        dt, angles = sample_perturbation(seed, 0.01, 5.0)
        assert np.all(np.abs(dt) <= 0.01)
        assert np.all(np.abs(np.degrees(angles)) <= 5.0)


def test_perturb_zero_range_identity():
    cam = _simple_camera()
    assert perturb_camera(cam, seed=3, trans_range=0.0, rot_range_deg=0.0) is cam


def test_perturb_distinct_seeds_distinct_poses():
    cam = _simple_camera()
    poses = {
        perturb_camera(cam, seed=s).pose.position.tobytes() for s in range(100)
    }
    assert len(poses) == 100


def test_perturb_keeps_intrinsics():
    cam = _simple_camera()
    p = perturb_camera(cam, seed=1)
    assert (p.fx, p.fy, p.cx, p.cy, p.width, p.height) == (
        cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height
    )


def test_swap_view_involution_and_wrists(needle_lift_spec):
    rig = default_rig(needle_lift_spec)
    swapped = swap_view(rig)
    assert swapped.primary.id == rig.alternate.id
    assert swap_view(swapped).to_dict() == rig.to_dict()
    assert [w.to_dict() for w in swapped.wrists] == [w.to_dict() for w in rig.wrists]


def test_rig_serialization_round_trip(task_spec):
    rig = default_rig(task_spec)
    assert CameraRig.from_dict(rig.to_dict()).to_dict() == rig.to_dict()


def test_dump_frames_png(tmp_path, needle_lift_spec):
    from PIL import Image

    state = reset_task(needle_lift_spec, 0)
    cam = default_rig(needle_lift_spec).primary
    fr = render(needle_lift_spec, state, cam)
    rgb_path, depth_path = dump_frames(fr, tmp_path, "frame0")
    rgb = np.asarray(Image.open(rgb_path))
    np.testing.assert_array_equal(rgb, fr.rgb)
    depth_mm = np.asarray(Image.open(depth_path))
    assert depth_mm.dtype == np.uint16
    np.testing.assert_allclose(depth_mm / 1000.0, fr.depth, atol=5e-4)
