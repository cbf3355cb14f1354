"""The IrollanValley sandbox: areas, furniture, items with status flags,
the six operational primitives, and the exact observation grammar.

The world is mutated by exactly one action at a time; failed actions are
exact no-ops. Observations are pure reads.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

FURNITURE_KINDS = {
    "table",
    "chair",
    "bed",
    "bookshelf",
    "storagebin",
    "wardrobe",
    "nightstand",
    "countertop",
    "foodshelf",
    "sinkbasin",
    "stoveburner",
}

STATUS_ORDER = ("clean", "damp", "hot")

OUTSIDE = "outside"

_TRAILING_NUMBER = re.compile(r"^(.*?)\s+\d+$")


class WorldError(ValueError):
    """Invalid world definition or malformed request."""


class UnknownAgentError(WorldError):
    """The referenced agent does not exist."""


def kind_of(object_id: str) -> str:
    """Strip the numeric suffix: 'bookshelf 12' -> 'bookshelf'."""
    match = _TRAILING_NUMBER.match(object_id)
    return match.group(1) if match else object_id


@dataclass
class Furniture:
    id: str
    kind: str
    area: str


@dataclass
class Item:
    id: str
    status: set[str] = field(default_factory=set)
    # ("furniture", furniture_id) | ("agent", agent_id) | ("floor", area)
    location: tuple[str, str] = ("floor", OUTSIDE)


@dataclass
class AgentPlacement:
    id: str
    area: str
    activity: str = ""
    held: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class Outcome:
    success: bool
    reason: str | None = None

    def label(self) -> str:
        return "success" if self.success else f"failure:{self.reason}"


@dataclass
class Area:
    name: str
    doors: tuple[str, ...]
    furniture: tuple[str, ...]


class WorldState:
    """The single mutable truth for the sandbox."""

    def __init__(
        self,
        areas: list[Area],
        furniture: dict[str, Furniture],
        items: dict[str, Item],
        agents: dict[str, AgentPlacement],
        name: str = "IrollanValley",
    ):
        self.name = name
        self.areas: dict[str, Area] = {a.name: a for a in areas}
        self.furniture = furniture
        self.items = items
        self.agents = agents
        self.pending_chats: dict[str, list[tuple[str, str]]] = {a: [] for a in agents}
        self.chat_counts: dict[tuple[str, str], int] = {}
        self._validate()

    # -- loading ---------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "WorldState":
        areas = []
        furniture: dict[str, Furniture] = {}
        for entry in data.get("areas", []):
            name = entry["name"]
            fids = tuple(entry.get("furniture") or ())
            areas.append(Area(name=name, doors=tuple(entry.get("doors") or ()), furniture=fids))
            for fid in fids:
                kind = kind_of(fid)
                if kind not in FURNITURE_KINDS:
                    raise WorldError(f"unknown furniture kind for {fid!r}")
                if fid in furniture:
                    raise WorldError(f"duplicate furniture id {fid!r}")
                furniture[fid] = Furniture(id=fid, kind=kind, area=name)

        items: dict[str, Item] = {}
        for entry in data.get("items", []):
            iid = entry["id"]
            if iid in items:
                raise WorldError(f"duplicate item id {iid!r}")
            status = set(entry.get("status") or ())
            place = entry.get("place")
            if place == "floor" or (isinstance(place, str) and place.startswith("floor:")):
                area = place.split(":", 1)[1] if ":" in place else OUTSIDE
                location = ("floor", area)
            else:
                if place not in furniture:
                    raise WorldError(f"item {iid!r} placed on unknown furniture {place!r}")
                location = ("furniture", place)
            items[iid] = Item(id=iid, status=status, location=location)

        agents: dict[str, AgentPlacement] = {}
        for entry in data.get("agents", []):
            aid = entry["id"]
            agents[aid] = AgentPlacement(id=aid, area=entry["area"], activity=entry.get("activity", ""))

        return cls(areas=areas, furniture=furniture, items=items, agents=agents, name=data.get("name", "IrollanValley"))

    @classmethod
    def from_file(cls, path: str | Path) -> "WorldState":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_dict(yaml.safe_load(handle))

    @classmethod
    def default(cls) -> "WorldState":
        return cls.from_file(default_world_path())

    def _validate(self) -> None:
        for area in self.areas.values():
            for door in area.doors:
                if door not in self.areas:
                    raise WorldError(f"door to unknown area {door!r} in {area.name!r}")
        for agent in self.agents.values():
            if agent.area not in self.areas:
                raise WorldError(f"agent {agent.id} placed in unknown area {agent.area!r}")
        for item in self.items.values():
            if "damp" in item.status and "hot" in item.status:
                raise WorldError(f"item {item.id!r} cannot be damp and hot")

    # -- queries ---------------------------------------------------------

    def placement(self, agent: str) -> AgentPlacement:
        try:
            return self.agents[agent]
        except KeyError:
            raise UnknownAgentError(f"unknown agent {agent!r}") from None

    def occupants(self, area: str) -> list[str]:
        return [a.id for a in self.agents.values() if a.area == area]

    def items_in_area(self, area: str) -> list[Item]:
        """Items visible in the area (on furniture or the floor), in
        declaration order."""
        out = []
        for item in self.items.values():
            where, ref = item.location
            if where == "furniture" and self.furniture[ref].area == area:
                out.append(item)
            elif where == "floor" and ref == area:
                out.append(item)
        return out

    def locale(self, area: str) -> tuple[str, ...]:
        return tuple(self.areas[area].furniture) + tuple(i.id for i in self.items_in_area(area))

    # -- observation grammar ----------------------------------------------

    def observe(self, agent: str) -> str:
        pl = self.placement(agent)
        area = self.areas[pl.area]

        elements: list[str] = []
        for other in self.agents.values():
            if other.id == agent or other.area != pl.area:
                continue
            clause = f"a person named {other.id}"
            if other.activity:
                clause += f" who is {other.activity}"
            elements.append(clause)
        elements.extend(f"a door to {door}" for door in area.doors)
        elements.extend(f"the {fid}" for fid in area.furniture)
        for item in self.items_in_area(pl.area):
            where, ref = item.location
            place = "the floor" if where == "floor" else f"the {ref}"
            elements.append(f"the {item.id} placed on {place}{_status_clause(item.status)}")

        sentences = [f"You are in {pl.area}."]
        if elements:
            sentences.append(f"Looking around you, you see {_join_list(elements)}.")
        if pl.held:
            held = ", ".join(f"the {iid}{_status_clause(self.items[iid].status)}" for iid in pl.held)
            sentences.append(f"You are holding {held}.")
        if pl.activity:
            sentences.append(f"You are {pl.activity}.")
        for sender, content in self.pending_chats.get(agent, ()):
            safe = content.replace("\n", " ")
            sentences.append(f'{sender} says to you: "{safe}".')
        return " ".join(sentences)

    def clear_chats(self, agent: str) -> None:
        self.pending_chats[agent] = []

    # -- action space ------------------------------------------------------

    def action_space_for(self, agent: str) -> list[str]:
        pl = self.placement(agent)
        area = self.areas[pl.area]
        others = [a for a in self.occupants(pl.area) if a != agent]

        actions = [f"go to {door}" for door in area.doors]
        actions.extend(f"use {fid}" for fid in area.furniture)
        actions.extend(f"use {iid}" for iid in pl.held)
        if pl.area != OUTSIDE and OUTSIDE in self.areas:
            actions.append(f"leave {pl.area}")
        actions.extend(f"leave {other}" for other in others)
        for item in self.items_in_area(pl.area):
            where, ref = item.location
            place = "floor" if where == "floor" else ref
            actions.append(f"take {item.id} from {place}")
        for iid in pl.held:
            actions.extend(f"put {iid} in/on {fid}" for fid in area.furniture)
        actions.extend(f"chat with {other}" for other in others)
        return actions

    # -- action application -------------------------------------------------

    def apply_action(self, agent: str, action: str) -> Outcome:
        pl = self.placement(agent)
        parsed = parse_action(action)
        if parsed is None:
            return Outcome(False, "parse")
        kind = parsed[0]
        handler = getattr(self, f"_apply_{kind}")
        return handler(pl, *parsed[1:])

    def _apply_go(self, pl: AgentPlacement, target: str) -> Outcome:
        if target not in self.areas[pl.area].doors:
            return Outcome(False, f"no door to {target}")
        pl.area = target
        pl.activity = "moving"
        return Outcome(True)

    def _apply_use(self, pl: AgentPlacement, target: str) -> Outcome:
        furniture = self.furniture.get(target)
        if furniture is not None and furniture.area == pl.area:
            if furniture.kind == "sinkbasin":
                for iid in pl.held:
                    item = self.items[iid]
                    item.status |= {"clean", "damp"}
                    item.status.discard("hot")
                pl.activity = "washing"
            elif furniture.kind == "stoveburner":
                for iid in pl.held:
                    item = self.items[iid]
                    item.status.discard("damp")
                    item.status.add("hot")
                pl.activity = "cooking"
            elif furniture.kind in ("bed", "chair"):
                pl.activity = "resting"
            elif furniture.kind == "bookshelf":
                pl.activity = "reading"
            else:
                pl.activity = f"using the {target}"
            return Outcome(True)
        if target in pl.held:
            pl.activity = "reading" if kind_of(target) == "book" else f"using the {target}"
            return Outcome(True)
        return Outcome(False, f"cannot use {target}")

    def _apply_leave(self, pl: AgentPlacement, target: str) -> Outcome:
        if target == pl.area and pl.area != OUTSIDE and OUTSIDE in self.areas:
            pl.area = OUTSIDE
            pl.activity = "moving"
            return Outcome(True)
        if target in self.occupants(pl.area) and target != pl.id:
            pl.activity = ""
            return Outcome(True)
        return Outcome(False, f"cannot leave {target}")

    def _apply_take(self, pl: AgentPlacement, item_id: str, place: str) -> Outcome:
        item = self.items.get(item_id)
        if item is None:
            return Outcome(False, f"no item {item_id}")
        where, ref = item.location
        if place == "floor":
            if where != "floor" or ref != pl.area:
                return Outcome(False, f"{item_id} is not on the floor here")
        else:
            furniture = self.furniture.get(place)
            if furniture is None or furniture.area != pl.area:
                return Outcome(False, f"no {place} here")
            if where != "furniture" or ref != place:
                return Outcome(False, f"{item_id} is not on {place}")
        item.location = ("agent", pl.id)
        pl.held.append(item_id)
        pl.activity = ""
        return Outcome(True)

    def _apply_put(self, pl: AgentPlacement, item_id: str, place: str) -> Outcome:
        if item_id not in pl.held:
            return Outcome(False, f"not holding {item_id}")
        furniture = self.furniture.get(place)
        if furniture is None or furniture.area != pl.area:
            return Outcome(False, f"no {place} here")
        self.items[item_id].location = ("furniture", place)
        pl.held.remove(item_id)
        pl.activity = ""
        return Outcome(True)

    def _apply_chat(self, pl: AgentPlacement, target: str, content: str | None) -> Outcome:
        if target == pl.id or target not in self.occupants(pl.area):
            return Outcome(False, f"{target} is not here")
        self.chat_counts[(pl.id, target)] = self.chat_counts.get((pl.id, target), 0) + 1
        self.pending_chats[target].append((pl.id, content or ""))
        return Outcome(True)

    # -- metrics and snapshots ------------------------------------------------

    def interaction_matrix(self, order: list[str] | None = None) -> tuple[list[str], list[list[int]]]:
        """Chat-initiation counts: rows are initiators, columns receivers."""
        ids = order if order is not None else sorted(self.agents)
        counts = [[self.chat_counts.get((src, dst), 0) for dst in ids] for src in ids]
        return ids, counts

    def canonical_state(self) -> dict:
        return {
            "name": self.name,
            "areas": {
                a.name: {"doors": list(a.doors), "furniture": list(a.furniture)} for a in self.areas.values()
            },
            "items": {
                i.id: {"status": sorted(i.status), "location": list(i.location)} for i in self.items.values()
            },
            "agents": {
                a.id: {"area": a.area, "activity": a.activity, "held": list(a.held)} for a in self.agents.values()
            },
            "pending_chats": {a: [list(c) for c in chats] for a, chats in self.pending_chats.items()},
            "chat_counts": {f"{s}->{d}": n for (s, d), n in sorted(self.chat_counts.items())},
        }

    def serialize(self) -> str:
        return json.dumps(self.canonical_state(), sort_keys=True)

    def clone(self) -> "WorldState":
        return copy.deepcopy(self)


def _status_clause(status: set[str]) -> str:
    if not status:
        return ""
    flags = " ".join(s for s in STATUS_ORDER if s in status)
    return f" in the {flags} status"


def _join_list(elements: list[str]) -> str:
    if len(elements) == 1:
        return elements[0]
    return ", ".join(elements[:-1]) + ", and " + elements[-1]


def parse_action(action: str):
    """Parse one of the six primitives; None if the text fits none.

    Shapes: ('go', area) ('use', target) ('leave', target)
    ('take', item, place) ('put', item, place) ('chat', target, content).
    """
    if action.startswith("go to "):
        target = action[len("go to "):]
        return ("go", target) if target else None
    if action.startswith("use "):
        target = action[len("use "):]
        return ("use", target) if target else None
    if action.startswith("leave "):
        target = action[len("leave "):]
        return ("leave", target) if target else None
    if action.startswith("take "):
        rest = action[len("take "):]
        if " from " in rest:
            item, place = rest.rsplit(" from ", 1)
            if item and place:
                return ("take", item, place)
        return None
    if action.startswith("put "):
        rest = action[len("put "):]
        if " in/on " in rest:
            item, place = rest.rsplit(" in/on ", 1)
            if item and place:
                return ("put", item, place)
        return None
    if action.startswith("chat with "):
        rest = action[len("chat with "):]
        if ":" in rest:
            target, content = rest.split(":", 1)
            content = content.strip()
            if content.startswith('"') and content.endswith('"') and len(content) >= 2:
                content = content[1:-1]
            return ("chat", target.strip(), content) if target.strip() else None
        return ("chat", rest, None) if rest else None
    return None


def default_world_path() -> Path:
    return Path(str(resources.files("irollan").joinpath("data/irollan_valley.world")))
