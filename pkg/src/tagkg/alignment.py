"""Selection of related tag-event alignments.

Manual mode reads/writes an append-only ``annotations.tsv`` (columns
tag_id, event_id, label) and offers a resumable interactive prompt; auto
mode keeps every candidate of non-excluded tags.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .eventuality import EventualityGraph
from .ontology import TagOntology
from .retrieval import Candidate

LABEL_RELATED = "related"
LABEL_AMBIGUOUS = "ambiguous"
LABEL_UNRELATED = "unrelated"
LABELS = (LABEL_RELATED, LABEL_AMBIGUOUS, LABEL_UNRELATED)

ANNOTATION_HEADER = "tag_id\tevent_id\tlabel"

_KEY_TO_LABEL = {"r": LABEL_RELATED, "a": LABEL_AMBIGUOUS, "u": LABEL_UNRELATED}


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class Alignment:
    tag_id: str
    event_id: str
    label: str
    origin: str  # manual | auto

    def __post_init__(self):
        if self.label not in LABELS:
            raise AlignmentError(f"bad label {self.label!r}")
        if self.origin not in ("manual", "auto"):
            raise AlignmentError(f"bad origin {self.origin!r}")


@dataclass
class AutoSelectConfig:
    """Tag names or ids whose candidates should be dropped wholesale."""

    excluded_labels: list[str] = field(default_factory=list)

    def resolve(self, ontology: TagOntology) -> tuple[set[str], list[str]]:
        """Map entries to tag ids; returns (resolved ids, unresolved entries)."""
        by_name = {tag.name.lower(): tag.id for tag in ontology.tags.values()}
        resolved: set[str] = set()
        unresolved: list[str] = []
        for entry in self.excluded_labels:
            if entry in ontology.tags:
                resolved.add(entry)
            elif entry.lower() in by_name:
                resolved.add(by_name[entry.lower()])
            else:
                unresolved.append(entry)
        return resolved, unresolved


def load_annotations(path: str | Path, candidates: list[Candidate]) -> list[Alignment]:
    """Read the annotation TSV, validating every row against the candidates."""
    path = Path(path)
    known_pairs = {(c.tag_id, c.event_id) for c in candidates}
    alignments: list[Alignment] = []
    seen: set[tuple[str, str]] = set()
    lines = path.read_text(encoding="utf-8").split("\n")
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if lineno == 1 and line.rstrip("\r") == ANNOTATION_HEADER:
            continue
        parts = line.rstrip("\r").split("\t")
        if len(parts) != 3:
            raise AlignmentError(f"{path}:{lineno}: expected 3 tab-separated columns")
        tag_id, event_id, label = parts
        if label not in LABELS:
            raise AlignmentError(f"{path}:{lineno}: invalid label {label!r}")
        if (tag_id, event_id) not in known_pairs:
            raise AlignmentError(
                f"{path}:{lineno}: ({tag_id!r}, {event_id!r}) is not a known candidate pair"
            )
        if (tag_id, event_id) in seen:
            raise AlignmentError(f"{path}:{lineno}: duplicate pair ({tag_id!r}, {event_id!r})")
        seen.add((tag_id, event_id))
        alignments.append(Alignment(tag_id, event_id, label, origin="manual"))
    return alignments


def annotate_interactive(
    candidates: list[Candidate],
    ontology: TagOntology,
    graph: EventualityGraph,
    annotations_path: str | Path,
    input_stream=None,
    output_stream=None,
) -> list[Alignment]:
    """Prompt for r/a/u on each unlabeled candidate, appending to the TSV.

    Already-annotated pairs are skipped, so an interrupted session resumes
    where it stopped. Requires an interactive terminal unless explicit
    streams are supplied.
    """
    if input_stream is None:
        if not sys.stdin.isatty():
            raise AlignmentError(
                "no interactive terminal available; prepare the TSV offline "
                "and load it with load_annotations instead"
            )
        input_stream = sys.stdin
    out = output_stream if output_stream is not None else sys.stdout

    annotations_path = Path(annotations_path)
    done: set[tuple[str, str]] = set()
    if annotations_path.exists():
        for prior in load_annotations(annotations_path, candidates):
            done.add((prior.tag_id, prior.event_id))
    else:
        annotations_path.write_text(ANNOTATION_HEADER + "\n", encoding="utf-8")

    new_alignments: list[Alignment] = []
    with annotations_path.open("a", encoding="utf-8") as sink:
        for cand in candidates:
            if (cand.tag_id, cand.event_id) in done:
                continue
            _print_candidate(cand, ontology, graph, out)
            label = _read_decision(input_stream, out)
            if label == "quit":
                break
            if label == "skip":
                continue
            sink.write(f"{cand.tag_id}\t{cand.event_id}\t{label}\n")
            sink.flush()
            new_alignments.append(Alignment(cand.tag_id, cand.event_id, label, origin="manual"))
    return new_alignments


def _print_candidate(cand: Candidate, ontology: TagOntology, graph: EventualityGraph, out) -> None:
    tag = ontology.tags.get(cand.tag_id)
    event = graph.events.get(cand.event_id)
    out.write("\n")
    if tag is not None:
        fathers = ", ".join(ontology.tags[f].name for f in tag.father_ids) or "-"
        children = ", ".join(ontology.tags[c].name for c in tag.child_ids) or "-"
        out.write(f"tag: {tag.name} [{tag.id}]\n")
        if tag.description:
            out.write(f"  description: {tag.description}\n")
        out.write(f"  fathers: {fathers}\n  children: {children}\n")
    else:
        out.write(f"tag: {cand.tag_id}\n")
    event_text = event.text if event is not None else cand.event_id
    out.write(f"event: {event_text} [{cand.event_id}]  score={cand.score:.4f}\n")
    out.write(f"  matched queries: {cand.matched_queries}\n")


def _read_decision(input_stream, out) -> str:
    while True:
        out.write("[r]elated / [a]mbiguous / [u]nrelated / [s]kip / [q]uit > ")
        out.flush()
        line = input_stream.readline()
        if not line:
            return "quit"
        key = line.strip().lower()
        if key in _KEY_TO_LABEL:
            return _KEY_TO_LABEL[key]
        if key in ("s", "skip"):
            return "skip"
        if key in ("q", "quit"):
            return "quit"
        if key in LABELS:
            return key
        out.write(f"unrecognized input {key!r}\n")


def select_related(alignments: list[Alignment]) -> set[tuple[str, str]]:
    return {(a.tag_id, a.event_id) for a in alignments if a.label == LABEL_RELATED}


def auto_select(
    candidates: list[Candidate],
    ontology: TagOntology,
    config: AutoSelectConfig,
) -> list[Alignment]:
    """Label every candidate of a non-excluded tag as related (origin auto)."""
    excluded_ids, unresolved = config.resolve(ontology)
    if unresolved:
        print(
            f"warning: excluded labels not found in the ontology: {unresolved}",
            file=sys.stderr,
        )
    return [
        Alignment(c.tag_id, c.event_id, LABEL_RELATED, origin="auto")
        for c in candidates
        if c.tag_id not in excluded_ids
    ]


def write_annotations(alignments: list[Alignment], path: str | Path) -> None:
    lines = [ANNOTATION_HEADER]
    lines.extend(f"{a.tag_id}\t{a.event_id}\t{a.label}" for a in alignments)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def label_distribution(alignments: list[Alignment]) -> dict[str, float]:
    """Fraction of each label among the alignments (empty dict when none)."""
    if not alignments:
        return {}
    total = len(alignments)
    return {label: sum(1 for a in alignments if a.label == label) / total for label in LABELS}
