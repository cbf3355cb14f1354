"""Sandbox world: observation grammar, action space, primitive effects,
and world-state invariants."""

from __future__ import annotations

from random import Random

import pytest

from irollan.world import (
    OUTSIDE,
    Outcome,
    UnknownAgentError,
    WorldError,
    WorldState,
    default_world_path,
    kind_of,
    parse_action,
)
from tests.grammar import parse_observation

REFERENCE_OUTSIDE_OBSERVATION = (
    "You are in outside. Looking around you, you see a door to AY's Home, a door to WM's Home, "
    "a door to MD's Home, a door to Public Canteen, a door to LL's Home, a door to Public Reading Room, "
    "a door to SG's Home, and a door to WL's Home. You are holding the SG's clothes 1 in the clean damp "
    "status. You are moving."
)


@pytest.fixture
def world() -> WorldState:
    return WorldState.default()


def force_hold(world: WorldState, agent: str, item_id: str) -> None:
    item = world.items[item_id]
    where, ref = item.location
    if where == "agent":
        world.agents[ref].held.remove(item_id)
    item.location = ("agent", agent)
    world.agents[agent].held.append(item_id)


class TestWorldDefinition:
    def test_default_loads_with_nine_areas(self, world):
        assert len(world.areas) == 9
        assert OUTSIDE in world.areas
        assert set(world.areas[OUTSIDE].doors) == set(world.areas) - {OUTSIDE}

    def test_every_area_connects_through_outside(self, world):
        for name, area in world.areas.items():
            if name != OUTSIDE:
                assert area.doors == (OUTSIDE,)

    def test_furniture_numbering_unique_per_kind(self, world):
        seen = set()
        for fid in world.furniture:
            assert fid not in seen
            seen.add(fid)
            assert kind_of(fid) in {
                "table", "chair", "bed", "bookshelf", "storagebin", "wardrobe",
                "nightstand", "countertop", "foodshelf", "sinkbasin", "stoveburner",
            }

    def test_six_agents_at_home(self, world):
        assert sorted(world.agents) == ["AY", "LL", "MD", "SG", "WL", "WM"]
        for aid, placement in world.agents.items():
            assert placement.area == f"{aid}'s Home"

    def test_damp_hot_conflict_rejected(self):
        with pytest.raises(WorldError):
            WorldState.from_dict(
                {
                    "areas": [{"name": "outside", "doors": [], "furniture": ["table 1"]}],
                    "items": [{"id": "toy 1", "place": "table 1", "status": ["damp", "hot"]}],
                    "agents": [],
                }
            )


class TestObserve:
    def test_reference_outside_observation(self, world):
        # Scenario reconstruction: AY outside, holding freshly washed clothes.
        force_hold(world, "AY", "SG's clothes 1")
        world.items["SG's clothes 1"].status = {"clean", "damp"}
        world.agents["AY"].area = OUTSIDE
        world.agents["AY"].activity = "moving"
        assert world.observe("AY") == REFERENCE_OUTSIDE_OBSERVATION

    def test_reference_observation_parses(self, world):
        force_hold(world, "AY", "SG's clothes 1")
        world.items["SG's clothes 1"].status = {"clean", "damp"}
        world.agents["AY"].area = OUTSIDE
        world.agents["AY"].activity = "moving"
        parsed = parse_observation(world.observe("AY"))
        assert parsed["area"] == OUTSIDE
        assert parsed["doors"] == [
            "AY's Home", "WM's Home", "MD's Home", "Public Canteen",
            "LL's Home", "Public Reading Room", "SG's Home", "WL's Home",
        ]
        assert parsed["held"] == [("SG's clothes 1", "clean damp")]
        assert parsed["doing"] == "moving"

    def test_empty_room_omits_optional_clauses(self):
        world = WorldState.from_dict(
            {
                "areas": [{"name": "test room", "doors": [], "furniture": []}],
                "items": [],
                "agents": [{"id": "AY", "area": "test room"}],
            }
        )
        assert world.observe("AY") == "You are in test room."

    def test_two_occupants_render_with_activity(self, world):
        world.agents["SG"].area = "LL's Home"
        world.agents["SG"].activity = "moving"
        world.agents["WM"].area = "LL's Home"
        world.agents["WM"].activity = "reading"
        parsed = parse_observation(world.observe("LL"))
        assert ("SG", "moving") in parsed["persons"]
        assert ("WM", "reading") in parsed["persons"]

    def test_item_status_qualifier_rendered(self, world):
        world.items["toy 3"].status = {"clean", "damp"}
        parsed = parse_observation(world.observe("LL"))
        assert ("toy 3", "the chair 7", "clean damp") in parsed["items"]

    def test_chat_delivery_appears_until_cleared(self, world):
        world.agents["SG"].area = "LL's Home"
        assert world.apply_action("SG", 'chat with LL: "hello friend"').success
        text = world.observe("LL")
        assert 'SG says to you: "hello friend".' in text
        parsed = parse_observation(text)
        assert parsed["chats"] == [("SG", "hello friend")]
        world.clear_chats("LL")
        assert "says to you" not in world.observe("LL")

    def test_unknown_agent_raises(self, world):
        with pytest.raises(UnknownAgentError):
            world.observe("ZZ")


class TestActionSpace:
    def test_outside_offers_door_moves_only_no_takes(self, world):
        world.agents["AY"].area = OUTSIDE
        actions = world.action_space_for("AY")
        gos = [a for a in actions if a.startswith("go to ")]
        assert len(gos) == 8
        assert not any(a.startswith("take ") for a in actions)
        assert not any(a.startswith("leave ") for a in actions)

    def test_take_listed_beside_bookshelf(self, world):
        actions = world.action_space_for("LL")
        assert "take book 1 from bookshelf 1" in actions

    def test_put_listed_while_holding(self, world):
        world.agents["SG"].area = "Public Reading Room"
        force_hold(world, "SG", "book 10")
        actions = world.action_space_for("SG")
        assert "put book 10 in/on table 16" in actions

    def test_chat_and_leave_listed_with_company(self, world):
        world.agents["SG"].area = "LL's Home"
        actions = world.action_space_for("LL")
        assert "chat with SG" in actions
        assert "leave SG" in actions
        assert "leave LL's Home" in actions

    def test_all_enumerated_actions_are_legal(self, world):
        # Every enumerated action must succeed when applied to a clone.
        rng = Random(5)
        for agent in world.agents:
            for action in world.action_space_for(agent):
                clone = world.clone()
                outcome = clone.apply_action(agent, action)
                assert outcome.success, f"{agent}: {action} -> {outcome}"


class TestApplyAction:
    def test_sinkbasin_washes_held_items(self, world):
        force_hold(world, "LL", "toy 3")
        world.items["toy 3"].status = {"hot"}
        outcome = world.apply_action("LL", "use sinkbasin 1")
        assert outcome.success
        assert world.items["toy 3"].status == {"clean", "damp"}
        assert world.agents["LL"].activity == "washing"

    def test_stoveburner_heats_and_dries(self, world):
        force_hold(world, "LL", "food 10")
        world.items["food 10"].status = {"clean", "damp"}
        outcome = world.apply_action("LL", "use stoveburner 1")
        assert outcome.success
        assert world.items["food 10"].status == {"clean", "hot"}
        assert world.agents["LL"].activity == "cooking"

    def test_missing_item_take_is_noop(self, world):
        force_hold(world, "LL", "book 1")
        before = world.serialize()
        outcome = world.apply_action("WL", "take book 1 from bookshelf 1")
        assert not outcome.success
        assert world.serialize() == before

    def test_gibberish_fails_parse(self, world):
        before = world.serialize()
        outcome = world.apply_action("AY", "fly to the moon")
        assert outcome == Outcome(False, "parse")
        assert world.serialize() == before

    def test_go_moves_and_sets_moving(self, world):
        outcome = world.apply_action("AY", "go to outside")
        assert outcome.success
        assert world.agents["AY"].area == OUTSIDE
        assert world.agents["AY"].activity == "moving"

    def test_go_requires_door(self, world):
        outcome = world.apply_action("AY", "go to LL's Home")
        assert not outcome.success

    def test_take_then_put_round_trip(self, world):
        assert world.apply_action("LL", "take book 1 from bookshelf 1").success
        assert world.items["book 1"].location == ("agent", "LL")
        assert "book 1" in world.agents["LL"].held
        assert world.agents["LL"].activity == ""
        assert world.apply_action("LL", "put book 1 in/on table 2").success
        assert world.items["book 1"].location == ("furniture", "table 2")
        assert "book 1" not in world.agents["LL"].held

    def test_use_bed_rests_use_bookshelf_reads(self, world):
        assert world.apply_action("LL", "use bed 2").success
        assert world.agents["LL"].activity == "resting"
        assert world.apply_action("LL", "use bookshelf 1").success
        assert world.agents["LL"].activity == "reading"

    def test_use_held_book_reads(self, world):
        force_hold(world, "LL", "book 1")
        assert world.apply_action("LL", "use book 1").success
        assert world.agents["LL"].activity == "reading"

    def test_leave_area_exits_to_outside(self, world):
        assert world.apply_action("LL", "leave LL's Home").success
        assert world.agents["LL"].area == OUTSIDE

    def test_leave_person_disengages(self, world):
        world.agents["SG"].area = "LL's Home"
        world.agents["LL"].activity = "chatting"
        assert world.apply_action("LL", "leave SG").success
        assert world.agents["LL"].activity == ""
        assert world.agents["LL"].area == "LL's Home"

    def test_chat_requires_presence(self, world):
        outcome = world.apply_action("LL", 'chat with SG: "hi"')
        assert not outcome.success

    def test_chat_moves_nothing_but_counts(self, world):
        world.agents["SG"].area = "LL's Home"
        world.apply_action("LL", 'chat with SG: "hi"')
        ids, counts = world.interaction_matrix()
        assert counts[ids.index("LL")][ids.index("SG")] == 1
        assert counts[ids.index("SG")][ids.index("LL")] == 0

    def test_floor_items_supported(self):
        world = WorldState.from_dict(
            {
                "areas": [{"name": "outside", "doors": [], "furniture": []}],
                "items": [{"id": "toy 1", "place": "floor:outside"}],
                "agents": [{"id": "AY", "area": "outside"}],
            }
        )
        assert "take toy 1 from floor" in world.action_space_for("AY")
        assert "the toy 1 placed on the floor" in world.observe("AY")
        assert world.apply_action("AY", "take toy 1 from floor").success


class TestInteractionMatrix:
    def test_fresh_world_all_zero(self, world):
        _, counts = world.interaction_matrix()
        assert all(v == 0 for row in counts for v in row)

    def test_symmetric_exchange(self, world):
        world.agents["SG"].area = "LL's Home"
        world.apply_action("LL", 'chat with SG: "a"')
        world.apply_action("SG", 'chat with LL: "b"')
        ids, counts = world.interaction_matrix()
        i, j = ids.index("LL"), ids.index("SG")
        assert counts[i][j] == 1 and counts[j][i] == 1
        assert all(counts[k][k] == 0 for k in range(len(ids)))


class TestParseAction:
    def test_primitive_shapes(self):
        assert parse_action("go to outside") == ("go", "outside")
        assert parse_action("use table 2") == ("use", "table 2")
        assert parse_action("leave LL's Home") == ("leave", "LL's Home")
        assert parse_action("take book 1 from bookshelf 1") == ("take", "book 1", "bookshelf 1")
        assert parse_action("put book 10 in/on table 16") == ("put", "book 10", "table 16")
        assert parse_action('chat with WM: "hello"') == ("chat", "WM", "hello")
        assert parse_action("chat with WM") == ("chat", "WM", None)

    def test_rejects_garbage(self):
        assert parse_action("dance") is None
        assert parse_action("take book 1") is None
        assert parse_action("put book 1 on table 2") is None


class TestRandomWalkInvariants:
    def test_conservation_and_status_machine(self, world):
        rng = Random(11)
        agents = sorted(world.agents)
        all_items = set(world.items)
        for _ in range(3000):
            agent = rng.choice(agents)
            actions = world.action_space_for(agent)
            action = rng.choice(actions)
            outcome = world.apply_action(agent, action)
            assert outcome.success
            assert set(world.items) == all_items
            for item in world.items.values():
                assert not ({"damp", "hot"} <= item.status)
            for aid in agents:
                assert world.agents[aid].area in world.areas

    def test_observation_reparses_after_every_action(self, world):
        rng = Random(13)
        agents = sorted(world.agents)
        for _ in range(300):
            agent = rng.choice(agents)
            action = rng.choice(world.action_space_for(agent))
            world.apply_action(agent, action)
            for aid in agents:
                parse_observation(world.observe(aid))

    def test_failed_actions_are_byte_exact_noops(self, world):
        rng = Random(17)
        bad_actions = [
            "go to nowhere",
            "take beefsteak from table 2",
            "put book 1 in/on table 2",
            "chat with SG: \"anyone there\"",
            "use sinkbasin 1",
            "leave outside",
            "gibberish action text",
        ]
        world.agents["AY"].area = OUTSIDE
        before = world.serialize()
        for action in bad_actions:
            outcome = world.apply_action("AY", action)
            assert not outcome.success
            assert world.serialize() == before
