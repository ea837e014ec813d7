"""
Tests for the kinematic skill models.
"""

import pytest

from app.services.kinematics import (
    SimulationError,
    apply_action,
    apply_pick_place,
    apply_push,
    riders,
    settle,
)
from app.services.relation_labeler import label_scene
from models import Cuboid, Scene, Skill, SkillAction
from tests.conftest import box


def _bottom(c: Cuboid) -> float:
    return c.center[2] - c.half_extents[2]


class TestSettle:
    """Tests for settle."""

    def test_settled_scene_unchanged(self, stacked_scene):
        """Test settling a resting stack is a no-op."""
        assert settle(stacked_scene) == stacked_scene

    def test_idempotent(self, stacked_scene):
        """Test settling twice equals settling once."""
        floating = stacked_scene.with_objects(
            c.translated((0.0, 0.0, 0.2)) for c in stacked_scene.objects
        )
        once = settle(floating)
        assert settle(once) == once

    def test_floating_object_drops_to_ground(self, camera):
        """Test an unsupported object comes to rest on the ground."""
        scene = settle(Scene((Cuboid(0, (0.0, 0.0, 0.5), (0.02, 0.02, 0.02)),), camera))
        assert _bottom(scene.get(0)) == pytest.approx(0.0)

    def test_weak_support_slides_off(self, camera):
        """Test an object covering less than a quarter of its footprint slides to the ground."""
        base = box(0, 0.0, 0.0)
        top = box(1, 0.05, 0.0, base=0.06)
        scene = settle(Scene((base, top), camera))
        assert _bottom(scene.get(1)) == pytest.approx(0.0)
        assert scene.get(1).center[0] >= 0.06

    def test_enough_support_rests(self, camera):
        """Test an object half on its support stays on top."""
        base = box(0, 0.0, 0.0)
        top = box(1, 0.03, 0.0, base=0.2)
        scene = settle(Scene((base, top), camera))
        assert _bottom(scene.get(1)) == pytest.approx(0.06)
        assert scene.get(1).center[0] == pytest.approx(0.03)


class TestRiders:
    """Tests for riders."""

    def test_stack_rider(self, stacked_scene):
        """Test the object resting on 0 rides with it and the loose object does not."""
        objects = {c.object_id: c for c in stacked_scene.objects}
        assert riders(objects, {0}) == {1}
        assert riders(objects, {2}) == set()


class TestPush:
    """Tests for apply_push."""

    def test_moves_target(self, two_box_scene):
        """Test a clear push translates only the target."""
        after = apply_push(two_box_scene, SkillAction(Skill.PUSH, 0, (0.0, 0.1)))
        assert after.get(0).center == pytest.approx((-0.1, 0.1, 0.03))
        assert after.get(1) == two_box_scene.get(1)

    def test_chain_shoves_obstacle(self, two_box_scene):
        """Test pushing into a neighbour shoves it ahead until they just touch."""
        after = apply_push(two_box_scene, SkillAction(Skill.PUSH, 0, (0.2, 0.0)))
        assert after.get(0).center[0] == pytest.approx(0.1)
        assert after.get(1).center[0] == pytest.approx(0.16, abs=1e-6)
        assert label_scene(after).get(0, 1, "in_contact")

    def test_riders_travel(self, stacked_scene):
        """Test objects stacked on the target move with it."""
        after = apply_push(stacked_scene, SkillAction(Skill.PUSH, 0, (0.0, 0.05)))
        assert after.get(1).center[1] == pytest.approx(0.05)
        assert _bottom(after.get(1)) == pytest.approx(0.06)
        assert after.get(2) == stacked_scene.get(2)

    def test_zero_push_only_settles(self, stacked_scene):
        """Test a zero displacement leaves a settled scene untouched."""
        assert apply_push(stacked_scene, SkillAction(Skill.PUSH, 2, (0.0, 0.0))) == stacked_scene

    def test_missing_target(self, two_box_scene):
        """Test pushing an absent object raises."""
        with pytest.raises(SimulationError, match="no such object"):
            apply_push(two_box_scene, SkillAction(Skill.PUSH, 5, (0.1, 0.0)))

    def test_off_view_target(self, two_box_scene):
        """Test an off-view target cannot be pushed."""
        with pytest.raises(SimulationError, match="off-view"):
            apply_push(
                two_box_scene, SkillAction(Skill.PUSH, 1, (0.1, 0.0)), off_view=frozenset({1})
            )

    def test_wrong_skill(self, two_box_scene):
        """Test apply_push refuses a pick-place action."""
        with pytest.raises(ValueError, match="expected a push"):
            apply_push(two_box_scene, SkillAction(Skill.PICK_PLACE, 0, (0.1, 0.0)))


class TestPickPlace:
    """Tests for apply_pick_place."""

    def test_place_on_other_object(self, stacked_scene):
        """Test moving the top object over object 2 stacks it there."""
        after = apply_pick_place(stacked_scene, SkillAction(Skill.PICK_PLACE, 1, (0.15, 0.0)))
        assert after.get(1).center[0] == pytest.approx(0.15)
        assert _bottom(after.get(1)) == pytest.approx(0.06)
        relations = label_scene(after)
        assert relations.get(1, 2, "above")
        assert not relations.get(1, 0, "above")

    def test_carries_riders(self, stacked_scene):
        """Test the stack on the target is carried along."""
        after = apply_pick_place(stacked_scene, SkillAction(Skill.PICK_PLACE, 0, (-0.15, 0.0)))
        assert after.get(0).center == pytest.approx((-0.15, 0.0, 0.03))
        assert after.get(1).center == pytest.approx((-0.15, 0.0, 0.08))

    def test_dispatch(self, two_box_scene):
        """Test apply_action routes by skill."""
        action = SkillAction(Skill.PICK_PLACE, 1, (0.0, 0.1))
        assert apply_action(two_box_scene, action) == apply_pick_place(two_box_scene, action)
