"""Eventuality graph: lemmatized clause nodes with typed relation edges.

File formats (JSONL, UTF-8):

* ``events.jsonl`` -- ``{"id", "tokens", "verb_indices", "frequency"}``
* ``edges.jsonl``  -- ``{"head", "tail", "relations": {type: count}}``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

# The fifteen relation types of the source graph. Loading preserves unknown
# types verbatim; this inventory is for reference and CLI validation.
RELATION_TYPES = (
    "Precedence",
    "Succession",
    "Synchronous",
    "Reason",
    "Result",
    "Condition",
    "Contrast",
    "Concession",
    "Conjunction",
    "Instantiation",
    "Restatement",
    "Alternative",
    "ChosenAlternative",
    "Exception",
    "Co_Occurrence",
)

TEMPORAL_RELATIONS = ("Conjunction", "Precedence")

MIN_FREQUENCY = 5


class EventualityError(ValueError):
    pass


@dataclass(frozen=True)
class Eventuality:
    id: str
    tokens: tuple[str, ...]
    verb_indices: tuple[int, ...]
    frequency: int

    def __post_init__(self):
        if not self.tokens:
            raise EventualityError(f"event {self.id!r}: empty token list")
        if any(i < 0 or i >= len(self.tokens) for i in self.verb_indices):
            raise EventualityError(f"event {self.id!r}: verb index out of range")
        if self.frequency < 0:
            raise EventualityError(f"event {self.id!r}: negative frequency")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass(frozen=True)
class EventualityEdge:
    head_id: str
    tail_id: str
    relations: dict[str, int]

    def __post_init__(self):
        if self.head_id == self.tail_id:
            raise EventualityError(f"edge {self.head_id!r}->{self.tail_id!r}: self-loop")
        if not self.relations:
            raise EventualityError(f"edge {self.head_id!r}->{self.tail_id!r}: no relations")
        for rel, count in self.relations.items():
            if count <= 0:
                raise EventualityError(
                    f"edge {self.head_id!r}->{self.tail_id!r}: non-positive count for {rel!r}"
                )


@dataclass
class EventualityGraph:
    events: dict[str, Eventuality] = field(default_factory=dict)
    edges: list[EventualityEdge] = field(default_factory=list)
    adjacency: dict[str, list[int]] = field(default_factory=dict)

    def rebuild_adjacency(self) -> None:
        self.adjacency = {eid: [] for eid in self.events}
        for idx, edge in enumerate(self.edges):
            self.adjacency[edge.head_id].append(idx)


def load_eventuality_graph(events_path: str | Path, edges_path: str | Path) -> EventualityGraph:
    graph = EventualityGraph()
    for lineno, obj in _iter_jsonl(Path(events_path)):
        try:
            event = Eventuality(
                id=obj["id"],
                tokens=tuple(obj["tokens"]),
                verb_indices=tuple(obj.get("verb_indices", [])),
                frequency=int(obj["frequency"]),
            )
        except (KeyError, TypeError) as exc:
            raise EventualityError(f"{events_path}:{lineno}: malformed event record: {exc}") from exc
        if event.id in graph.events:
            raise EventualityError(f"{events_path}:{lineno}: duplicate event id {event.id!r}")
        graph.events[event.id] = event

    for lineno, obj in _iter_jsonl(Path(edges_path)):
        try:
            edge = EventualityEdge(
                head_id=obj["head"],
                tail_id=obj["tail"],
                relations={str(k): int(v) for k, v in obj["relations"].items()},
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise EventualityError(f"{edges_path}:{lineno}: malformed edge record: {exc}") from exc
        for endpoint in (edge.head_id, edge.tail_id):
            if endpoint not in graph.events:
                raise EventualityError(
                    f"{edges_path}:{lineno}: edge references unknown event {endpoint!r}"
                )
        graph.edges.append(edge)

    graph.rebuild_adjacency()
    return graph


def _iter_jsonl(path: Path):
    for lineno, line in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            yield lineno, json.loads(line)
        except json.JSONDecodeError as exc:
            raise EventualityError(f"{path}:{lineno}: not valid JSON: {exc}") from exc


def has_adjacent_duplicate_verb(event: Eventuality) -> bool:
    """True when the same verb lemma occupies two neighbouring verb positions."""
    verb_set = set(event.verb_indices)
    for pos in event.verb_indices:
        if pos + 1 in verb_set and event.tokens[pos] == event.tokens[pos + 1]:
            return True
    return False


def filter_events(graph: EventualityGraph, min_frequency: int = MIN_FREQUENCY) -> EventualityGraph:
    """Drop noisy-pattern and infrequent events plus the edges touching them.

    The input graph is left unmodified; the operation is idempotent.
    """
    kept = {
        eid: ev
        for eid, ev in graph.events.items()
        if ev.frequency >= min_frequency and not has_adjacent_duplicate_verb(ev)
    }
    filtered = EventualityGraph(
        events=kept,
        edges=[e for e in graph.edges if e.head_id in kept and e.tail_id in kept],
    )
    filtered.rebuild_adjacency()
    return filtered
