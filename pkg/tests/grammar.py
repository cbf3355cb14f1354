"""Independent test-side parser for the observation grammar.

Kept deliberately separate from the renderer so that round-trip checks
exercise two implementations of the same grammar.
"""

from __future__ import annotations

import re

_CHAT = re.compile(r' (\w+) says to you: "(.*?)"\.(?= \w+ says to you: "|$)')
_HEAD = re.compile(
    r"^You are in (?P<area>[^.]+)\."
    r"(?: Looking around you, you see (?P<seen>.+?)\.)?"
    r"(?: You are holding (?P<held>.+?)\.)?"
    r"(?: You are (?P<doing>[^.]+)\.)?$"
)
_PERSON = re.compile(r"^a person named (?P<name>\w+)(?: who is (?P<doing>.+))?$")
_DOOR = re.compile(r"^a door to (?P<area>.+)$")
_PLACED = re.compile(
    r"^the (?P<item>.+?) placed on (?P<place>the .+?)(?: in the (?P<status>[a-z ]+) status)?$"
)
_THING = re.compile(r"^the (?P<id>.+?)(?: in the (?P<status>[a-z ]+) status)?$")


class GrammarError(AssertionError):
    pass


def _split_elements(listing: str) -> list[str]:
    parts = listing.split(", ")
    out = []
    for part in parts:
        if part.startswith("and ") and out:
            part = part[4:]
        out.append(part)
    return out


def parse_observation(text: str) -> dict:
    """Parse an observation string; raises GrammarError on any mismatch."""
    chats = _CHAT.findall(text)
    body = _CHAT.sub("", text)

    match = _HEAD.match(body)
    if not match:
        raise GrammarError(f"observation does not match grammar: {body!r}")

    persons, doors, furniture, placed = [], [], [], []
    seen = match.group("seen")
    if seen:
        for element in _split_elements(seen):
            if m := _PERSON.match(element):
                persons.append((m.group("name"), m.group("doing")))
            elif m := _DOOR.match(element):
                doors.append(m.group("area"))
            elif m := _PLACED.match(element):
                placed.append((m.group("item"), m.group("place"), m.group("status")))
            elif m := _THING.match(element):
                if m.group("status"):
                    raise GrammarError(f"status on bare furniture: {element!r}")
                furniture.append(m.group("id"))
            else:
                raise GrammarError(f"unparseable element: {element!r}")
        # Grammar order: persons, then doors, then furniture, then items.
        kinds = (
            ["person"] * len(persons) + ["door"] * len(doors) + ["furniture"] * len(furniture) + ["item"] * len(placed)
        )
        rendered_order = []
        for element in _split_elements(seen):
            if _PERSON.match(element):
                rendered_order.append("person")
            elif _DOOR.match(element):
                rendered_order.append("door")
            elif _PLACED.match(element):
                rendered_order.append("item")
            else:
                rendered_order.append("furniture")
        if rendered_order != kinds:
            raise GrammarError(f"element ordering violates grammar: {rendered_order}")

    held = []
    if match.group("held"):
        for element in _split_elements(match.group("held")):
            m = _THING.match(element)
            if not m:
                raise GrammarError(f"unparseable held element: {element!r}")
            held.append((m.group("id"), m.group("status")))

    return {
        "area": match.group("area"),
        "persons": persons,
        "doors": doors,
        "furniture": furniture,
        "items": placed,
        "held": held,
        "doing": match.group("doing"),
        "chats": chats,
    }
