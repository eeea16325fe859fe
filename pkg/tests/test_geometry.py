import math
import random

import pytest
from hypothesis import given, strategies as st

from admc.geometry import (
    Frame,
    Pose,
    Rotation,
    Vec3,
    Vec7,
    ZERO7,
    ZeroDirection,
    ZeroVector,
    cosine_similarity,
    difference,
    rotation_from_forward,
    to_gripper_frame,
    to_world_frame,
)


def random_rotation(rng: random.Random) -> Rotation:
    return Rotation.from_components(
        rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)
    )


def random_vec3(rng: random.Random, lo: float = -2.0, hi: float = 2.0) -> Vec3:
    return Vec3(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi))


finite7 = st.tuples(*([st.floats(-10, 10)] * 7)).map(lambda t: Vec7(*t))


class TestRotationFromForward:
    def test_forward_is_identity(self):
        q = rotation_from_forward(Vec3(1, 0, 0))
        assert q.angle() < 1e-12

    def test_left_is_quarter_yaw(self):
        q = rotation_from_forward(Vec3(0, 1, 0))
        expected = Rotation.from_axis_angle(Vec3(0, 0, 1), math.pi / 2)
        assert q.angle_to(expected) < 1e-12

    def test_diagonal_is_45_deg_yaw(self):
        # Oracle: apply the result to the forward axis and compare directions.
        d = Vec3(1, 1, 0).normalized()
        q = rotation_from_forward(d)
        got = q.apply(Vec3(1, 0, 0))
        assert (got - d).norm() < 1e-9
        assert abs(q.angle() - math.pi / 4) < 1e-12

    def test_aims_any_direction(self):
        rng = random.Random(7)
        for _ in range(200):
            d = random_vec3(rng)
            if d.norm() < 1e-3:
                continue
            q = rotation_from_forward(d)
            got = q.apply(Vec3(1, 0, 0))
            assert (got - d.normalized()).norm() < 1e-9

    def test_zero_roll_convention(self):
        # The rotated Y axis must stay horizontal: no roll about the view axis.
        rng = random.Random(11)
        for _ in range(100):
            d = random_vec3(rng)
            if d.norm_xy() < 1e-3:
                continue
            q = rotation_from_forward(d)
            ey = q.apply(Vec3(0, 1, 0))
            assert abs(ey.z) < 1e-9

    def test_zero_direction_rejected(self):
        with pytest.raises(ZeroDirection):
            rotation_from_forward(Vec3(0, 0, 1e-12))


class TestFrames:
    def test_identity_frame(self):
        assert to_gripper_frame(Vec3(0, 0, 1), Rotation.identity()) == Vec3(0, 0, 1)

    def test_quarter_yaw(self):
        # Frozen from the quaternion oracle: Rz(-90deg) applied to +X.
        g = Rotation.from_axis_angle(Vec3(0, 0, 1), math.pi / 2)
        v = to_gripper_frame(Vec3(1, 0, 0), g)
        assert (v - Vec3(0, -1, 0)).norm() < 1e-12

    def test_round_trip(self):
        rng = random.Random(3)
        for _ in range(300):
            g = random_rotation(rng)
            v = random_vec3(rng)
            back = to_world_frame(to_gripper_frame(v, g), g)
            assert (back - v).norm() < 1e-12

    def test_pose_compose_relative_round_trip(self):
        rng = random.Random(5)
        for _ in range(100):
            parent = Pose(random_vec3(rng), random_rotation(rng))
            child = Pose(random_vec3(rng), random_rotation(rng))
            rel = child.relative_to(parent)
            assert rel.frame is Frame.GRIPPER
            again = parent.compose(rel)
            assert (again.position - child.position).norm() < 1e-12
            assert again.orientation.angle_to(child.orientation) < 1e-9


class TestSimilarity:
    def test_identical(self):
        v = Vec7(1, 0, 0, 0, 0, 0, 0)
        assert cosine_similarity(v, v) == 1.0
        assert difference(v, v) == 0.0

    def test_opposed(self):
        v = Vec7(1, 0, 0, 0, 0, 0, 0)
        assert cosine_similarity(v, v.scaled(-1.0)) == -1.0
        assert difference(v, v.scaled(-1.0)) == 1.0

    def test_orthogonal(self):
        a = Vec7(1, 0, 0, 0, 0, 0, 0)
        b = Vec7(0, 1, 0, 0, 0, 0, 0)
        assert cosine_similarity(a, b) == 0.0
        assert difference(a, b) == 0.5

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            cosine_similarity(ZERO7, Vec7(1, 0, 0, 0, 0, 0, 0))
        with pytest.raises(ZeroVector):
            difference(Vec7(1, 0, 0, 0, 0, 0, 0), ZERO7)

    @given(finite7, finite7)
    def test_symmetry_and_range(self, a, b):
        if a.norm() == 0.0 or b.norm() == 0.0:
            return
        d1 = difference(a, b)
        d2 = difference(b, a)
        assert d1 == pytest.approx(d2, abs=1e-12)
        assert 0.0 <= d1 <= 1.0
        assert -1.0 <= cosine_similarity(a, b) <= 1.0

    @given(finite7, st.floats(1e-6, 1e6))
    def test_scale_invariance(self, a, s):
        if a.norm() == 0.0 or a.scaled(s).norm() == 0.0:
            return
        assert difference(a, a.scaled(s)) <= 1e-12

    def test_near_degenerate_norms_stay_in_range(self):
        tiny = Vec7(1e-9, 0, 0, 0, 0, 0, 0)
        big = Vec7(0, 1e9, 0, 0, 0, 0, 0)
        assert -1.0 <= cosine_similarity(tiny, big) <= 1.0
        assert 0.0 <= difference(tiny, tiny) <= 1.0


class TestRotationValueType:
    def test_canonical_sign(self):
        q = Rotation.from_components(-1.0, 0.0, 0.0, 0.0)
        assert q.w >= 0.0

    def test_unit_norm(self):
        rng = random.Random(13)
        for _ in range(100):
            q = random_rotation(rng)
            n = math.sqrt(q.w**2 + q.x**2 + q.y**2 + q.z**2)
            assert abs(n - 1.0) < 1e-9

    def test_compose_matches_matrix_oracle(self):
        scipy = pytest.importorskip("scipy.spatial.transform")
        rng = random.Random(17)
        for _ in range(50):
            a = random_rotation(rng)
            b = random_rotation(rng)
            c = a * b
            ra = scipy.Rotation.from_quat([a.x, a.y, a.z, a.w])
            rb = scipy.Rotation.from_quat([b.x, b.y, b.z, b.w])
            rc = ra * rb
            v = random_vec3(rng)
            got = c.apply(v)
            want = rc.apply([v.x, v.y, v.z])
            assert abs(got.x - want[0]) < 1e-9
            assert abs(got.y - want[1]) < 1e-9
            assert abs(got.z - want[2]) < 1e-9

    def test_rotation_vector_round_trip(self):
        rng = random.Random(19)
        for _ in range(100):
            q = random_rotation(rng)
            back = Rotation.from_rotation_vector(q.rotation_vector())
            assert q.angle_to(back) < 1e-9

    def test_scaled_fraction(self):
        q = Rotation.from_axis_angle(Vec3(0, 0, 1), 1.0)
        half = q.scaled(0.5)
        assert abs(half.angle() - 0.5) < 1e-12
        assert (half * half).angle_to(q) < 1e-12
