"""Surface-form index over biomedical entity mentions.

Maps each lowercased surface form seen in the mention table to the
entity nodes it can refer to.  A surface may be ambiguous; all candidate
nodes are kept, sorted, so downstream matching is deterministic.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

from .kg import make_node
from .tables import MentionRow


class EntityIndex:
    """Immutable-ish lookup from surface form to candidate entity nodes."""

    def __init__(self, entries: dict[str, tuple[str, ...]] | None = None) -> None:
        self._entries: dict[str, tuple[str, ...]] = dict(entries or {})

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, surface: str) -> bool:
        return surface.lower() in self._entries

    def surfaces(self) -> list[str]:
        return sorted(self._entries)

    def lookup(self, surface: str) -> tuple[str, ...]:
        """Candidate entity nodes for a surface form, sorted; empty if unseen."""
        return self._entries.get(surface.lower(), ())

    def items(self) -> Iterator[tuple[str, tuple[str, ...]]]:
        for surface in self.surfaces():
            yield surface, self._entries[surface]

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for surface, nodes in self.items():
                fh.write(surface + "\t" + " ".join(nodes) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EntityIndex":
        entries: dict[str, tuple[str, ...]] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise ValueError(f"{path}:{lineno}: malformed index line")
                entries[parts[0]] = tuple(parts[1].split(" "))
        return cls(entries)


def build_index(mentions: Iterable[MentionRow], scope: Iterable[str]) -> EntityIndex:
    """Index the surface forms of all mentions attached to in-scope articles.

    Surfaces are lowercased; candidate node lists are deduplicated and
    sorted, so the result does not depend on row order.
    """
    in_scope = set(scope)
    collected: dict[str, set[str]] = {}
    for row in mentions:
        if row.pmid not in in_scope:
            continue
        surface = row.surface_form.lower()
        node = make_node(row.entity_type, row.entity_id)
        collected.setdefault(surface, set()).add(node)
    return EntityIndex({s: tuple(sorted(nodes)) for s, nodes in collected.items()})
