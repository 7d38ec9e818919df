"""Transfer eventuality relations through alignments into a tag-level KG,
and turn graphs into row-normalized adjacency matrices for the GNN.

Relation counts on a tag pair are the sums over all aligned event pairs;
by default only Conjunction and Precedence are retained. Adjacencies are
binary with self-loops, each row divided by its degree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .eventuality import EventualityGraph, TEMPORAL_RELATIONS
from .ontology import TagOntology

REL_ONTOLOGY_ISA = "ontology_isa"
REL_CONJUNCTION = "conjunction"
REL_PRECEDENCE = "precedence"
REL_MERGED = "merged"

ROW_SUM_TOL = 1e-12


class KGBuildError(ValueError):
    pass


@dataclass
class TemporalKG:
    tag_ids: list[str]  # defines the node index
    edges: dict[tuple[int, int], dict[str, int]]
    kept_relations: tuple[str, ...] = TEMPORAL_RELATIONS

    def __post_init__(self):
        for (head, tail), relations in self.edges.items():
            if head == tail:
                raise KGBuildError(f"self-loop on node {head}")
            if not relations:
                raise KGBuildError(f"edge {head}->{tail}: empty relation set")
            if any(count <= 0 for count in relations.values()):
                raise KGBuildError(f"edge {head}->{tail}: non-positive count")

    def index_of(self, tag_id: str) -> int:
        return self.tag_ids.index(tag_id)


@dataclass
class RelationAdjacency:
    relation: str
    matrix: np.ndarray  # n x n, row-normalized, self-loops included
    n: int

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.n, self.n):
            raise KGBuildError(f"adjacency shape {m.shape} != ({self.n}, {self.n})")
        if np.any(m < 0):
            raise KGBuildError("adjacency has negative entries")
        if np.any(np.diagonal(m) <= 0):
            raise KGBuildError("adjacency diagonal must be positive (self-loops)")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise KGBuildError("adjacency rows must sum to 1")


def aggregate_relations(
    graph: EventualityGraph,
    related: set[tuple[str, str]],
) -> dict[tuple[str, str], dict[str, int]]:
    """Count-sum every relation over aligned event pairs, unrestricted.

    Result maps (head tag, tail tag) with head != tail to {relation: count}.
    """
    tags_of_event: dict[str, list[str]] = {}
    for tag_id, event_id in sorted(related):
        tags_of_event.setdefault(event_id, []).append(tag_id)

    aggregated: dict[tuple[str, str], dict[str, int]] = {}
    for edge in graph.edges:
        head_tags = tags_of_event.get(edge.head_id)
        tail_tags = tags_of_event.get(edge.tail_id)
        if not head_tags or not tail_tags:
            continue
        for a1 in head_tags:
            for a2 in tail_tags:
                if a1 == a2:
                    continue
                bucket = aggregated.setdefault((a1, a2), {})
                for rel, count in edge.relations.items():
                    bucket[rel] = bucket.get(rel, 0) + count
    return aggregated


def transfer_relations(
    graph: EventualityGraph,
    related: set[tuple[str, str]],
    ontology: TagOntology,
    kept_relations: tuple[str, ...] = TEMPORAL_RELATIONS,
) -> TemporalKG:
    """Aggregate relations through the related alignments, then restrict to
    the kept relation types; tag pairs left with nothing are dropped."""
    for tag_id, event_id in related:
        if tag_id not in ontology.tags:
            raise KGBuildError(f"alignment references unknown tag {tag_id!r}")
        if event_id not in graph.events:
            raise KGBuildError(f"alignment references unknown event {event_id!r}")

    tag_ids = ontology.tag_ids()
    node_index = {tid: i for i, tid in enumerate(tag_ids)}
    edges: dict[tuple[int, int], dict[str, int]] = {}
    for (a1, a2), relations in aggregate_relations(graph, related).items():
        restricted = {rel: c for rel, c in relations.items() if rel in kept_relations}
        if restricted:
            edges[(node_index[a1], node_index[a2])] = restricted
    return TemporalKG(tag_ids=tag_ids, edges=edges, kept_relations=tuple(kept_relations))


def _edge_pairs_for(source, relation: str) -> tuple[list[tuple[int, int]], int, str]:
    """Directed edge list, node count, and the symmetrization default."""
    if isinstance(source, TagOntology):
        if relation not in (REL_ONTOLOGY_ISA, REL_MERGED):
            raise KGBuildError(f"relation {relation!r} is not defined on a tag ontology")
        ids = source.tag_ids()
        index = {tid: i for i, tid in enumerate(ids)}
        pairs = [
            (index[cid], index[tid])  # child IsA father
            for tid, tag in source.tags.items()
            for cid in tag.child_ids
        ]
        return pairs, len(ids), "sym"
    if isinstance(source, TemporalKG):
        if relation == REL_CONJUNCTION:
            wanted = {"Conjunction"}
            default = "sym"
        elif relation == REL_PRECEDENCE:
            wanted = {"Precedence"}
            default = "directed"
        elif relation == REL_MERGED:
            wanted = None
            default = "sym"
        else:
            raise KGBuildError(f"relation {relation!r} is not defined on a temporal KG")
        pairs = [
            (head, tail)
            for (head, tail), relations in source.edges.items()
            if wanted is None or wanted & relations.keys()
        ]
        return pairs, len(source.tag_ids), default
    raise KGBuildError(f"unsupported adjacency source {type(source).__name__}")


def build_adjacency(source, relation: str, symmetrize: bool | None = None) -> RelationAdjacency:
    """Row-normalized binary adjacency with self-loops for one relation.

    ``source`` is a TagOntology, a TemporalKG, or a sequence of both (for
    ``merged`` unions across sources). Conjunction edges are always
    symmetrized; Precedence defaults to directed and IsA to symmetric, both
    overridable via ``symmetrize``.
    """
    sources = source if isinstance(source, (tuple, list)) else (source,)
    if len(sources) > 1 and relation != REL_MERGED:
        raise KGBuildError("multiple sources are only valid for the merged relation")

    n = None
    raw = None
    for src in sources:
        pairs, src_n, default = _edge_pairs_for(src, relation)
        if n is None:
            n = src_n
            raw = np.zeros((n, n), dtype=np.float64)
        elif src_n != n:
            raise KGBuildError(f"sources disagree on node count: {src_n} != {n}")
        if isinstance(src, TemporalKG) and relation == REL_MERGED:
            # Per-component defaults inside a merged union: conjunction
            # symmetric, precedence per flag.
            conj_pairs = [
                p for p, rels in src.edges.items() if "Conjunction" in rels
            ]
            prec_like = [
                p for p, rels in src.edges.items() if rels.keys() - {"Conjunction"}
            ]
            _mark(raw, conj_pairs, True)
            _mark(raw, prec_like, symmetrize if symmetrize is not None else False)
        else:
            sym = symmetrize
            if relation == REL_CONJUNCTION:
                sym = True
            elif sym is None:
                sym = default == "sym"
            _mark(raw, pairs, sym)

    if n is None:
        raise KGBuildError("no adjacency source given")
    np.fill_diagonal(raw, 1.0)
    normalized = raw / raw.sum(axis=1, keepdims=True)
    return RelationAdjacency(relation=relation, matrix=normalized, n=n)


def _mark(raw: np.ndarray, pairs: list[tuple[int, int]], symmetric: bool) -> None:
    for head, tail in pairs:
        raw[head, tail] = 1.0
        if symmetric:
            raw[tail, head] = 1.0


def temporal_kg_to_jsonl(kg: TemporalKG) -> str:
    lines = []
    for (head, tail) in sorted(kg.edges):
        relations = kg.edges[(head, tail)]
        lines.append(
            json.dumps(
                {
                    "head_tag": kg.tag_ids[head],
                    "tail_tag": kg.tag_ids[tail],
                    "relations": dict(sorted(relations.items())),
                },
                sort_keys=True,
            )
        )
    return "".join(line + "\n" for line in lines)


def load_temporal_kg(
    path: str | Path,
    tag_ids: list[str],
    kept_relations: tuple[str, ...] = TEMPORAL_RELATIONS,
) -> TemporalKG:
    node_index = {tid: i for i, tid in enumerate(tag_ids)}
    edges: dict[tuple[int, int], dict[str, int]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            head, tail = obj["head_tag"], obj["tail_tag"]
            relations = {str(k): int(v) for k, v in obj["relations"].items()}
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise KGBuildError(f"{path}:{lineno}: malformed KG record: {exc}") from exc
        if head not in node_index or tail not in node_index:
            raise KGBuildError(f"{path}:{lineno}: edge references tag outside the ontology")
        edges[(node_index[head], node_index[tail])] = relations
    return TemporalKG(tag_ids=list(tag_ids), edges=edges, kept_relations=kept_relations)


def adjacency_to_csv(adj: RelationAdjacency) -> str:
    rows = [",".join(repr(v) for v in row) for row in adj.matrix.tolist()]
    return "".join(row + "\n" for row in rows)
