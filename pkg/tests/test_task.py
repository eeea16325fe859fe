import dataclasses
import random

from admc.arm import ArmState, HeldObject
from admc.geometry import Pose, Rotation, Vec3
from admc.suggestions import TargetKind
from admc.task import (
    TaskLayout,
    TaskPhase,
    check_success,
    current_target,
    new_task,
    placement_complete,
    sample_spawn,
)

LAYOUT = TaskLayout()


def arm_at(pos, held=None):
    return ArmState(Pose(pos), held=held)


def block_at(task_block, pos):
    return dataclasses.replace(task_block, pose=Pose(pos))


class TestSuccess:
    def test_released_dead_center_completes(self):
        task, block = new_task(LAYOUT, seed=1)
        block = block_at(block, Vec3(LAYOUT.drop_center.x, LAYOUT.drop_center.y, LAYOUT.block_half))
        done, block2, row = check_success(task, arm_at(Vec3(0, 0, 0.3)), block, tick=100, tick_rate=50)
        assert done
        assert row is not None
        assert row.ticks == 101
        assert not LAYOUT.in_drop_area(block2.pose.position)

    def test_outside_boundary_by_a_centimeter_fails(self):
        task, block = new_task(LAYOUT, seed=1)
        pos = Vec3(LAYOUT.drop_center.x + LAYOUT.drop_half.x + 0.01,
                   LAYOUT.drop_center.y, LAYOUT.block_half)
        done, _, _ = check_success(task, arm_at(Vec3(0, 0, 0.3)), block_at(block, pos), 10, 50)
        assert not done

    def test_held_above_area_fails(self):
        task, block = new_task(LAYOUT, seed=1)
        block = block_at(block, Vec3(LAYOUT.drop_center.x, LAYOUT.drop_center.y, 0.2))
        held = HeldObject("block", block.pose.relative_to(Pose(Vec3(0, 0, 0.3))))
        done, _, _ = check_success(task, arm_at(Vec3(0, 0, 0.3), held=held), block, 10, 50)
        assert not done
        assert task.phase is TaskPhase.CARRY

    def test_floating_block_fails_placement(self):
        task, block = new_task(LAYOUT, seed=1)
        block = block_at(block, Vec3(LAYOUT.drop_center.x, LAYOUT.drop_center.y,
                                     LAYOUT.block_half + 0.02))
        assert not placement_complete(task, arm_at(Vec3(0, 0, 0.3)), block)


class TestRespawn:
    def test_seeded_sequence_is_reproducible(self):
        a = random.Random(42)
        b = random.Random(42)
        for _ in range(100):
            assert sample_spawn(LAYOUT, a) == sample_spawn(LAYOUT, b)

    def test_never_spawns_in_drop_area_or_base(self):
        rng = random.Random(7)
        for _ in range(1000):
            p = sample_spawn(LAYOUT, rng)
            assert not LAYOUT.in_drop_area(p, margin=LAYOUT.block_half)
            base = Vec3(LAYOUT.arm_base.x, LAYOUT.arm_base.y, 0)
            assert (p - base).norm_xy() >= LAYOUT.base_margin
            assert abs(p.x) <= LAYOUT.table_half.x
            assert abs(p.y) <= LAYOUT.table_half.y
            assert p.z == LAYOUT.block_half

    def test_target_after_respawn_is_the_block(self):
        task, block = new_task(LAYOUT, seed=3)
        block = block_at(block, Vec3(LAYOUT.drop_center.x, LAYOUT.drop_center.y, LAYOUT.block_half))
        done, block, _ = check_success(task, arm_at(Vec3(0, 0, 0.3)), block, 10, 50)
        assert done
        pose, kind = current_target(task, block, held=False)
        assert kind is TargetKind.PICK_OBJECT
        assert pose.position == block.pose.position


class TestMetrics:
    def test_episode_counters_reset_and_totals_accumulate(self):
        task, block = new_task(LAYOUT, seed=9)
        task.episode_mode_switches = 5
        task.episode_suggestions_accepted = 2
        centered = block_at(block, Vec3(LAYOUT.drop_center.x, LAYOUT.drop_center.y,
                                        LAYOUT.block_half))
        done, block2, row = check_success(task, arm_at(Vec3(0, 0, 0.3)), centered, 49, 50)
        assert done
        assert row.mode_switches == 5
        assert row.completion_time == 1.0
        assert task.episode_mode_switches == 0
        assert task.totals.episodes_completed == 1
        assert task.totals.mode_switches == 5

        task.episode_mode_switches = 3
        centered2 = block_at(block2, Vec3(LAYOUT.drop_center.x, LAYOUT.drop_center.y,
                                          LAYOUT.block_half))
        done, _, row2 = check_success(task, arm_at(Vec3(0, 0, 0.3)), centered2, 99, 50)
        assert done
        assert row2.episode == 1
        assert row2.mode_switches == 3
        assert task.totals.mode_switches == 8
        assert task.totals.episodes_completed == 2

    def test_target_kind_tracks_held_state(self):
        task, block = new_task(LAYOUT, seed=5)
        _, kind = current_target(task, block, held=False)
        assert kind is TargetKind.PICK_OBJECT
        pose, kind = current_target(task, block, held=True)
        assert kind is TargetKind.DROP_AREA
        assert pose.position == LAYOUT.drop_center
