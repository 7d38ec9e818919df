"""Inverted-index retrieval of alignment candidates.

Two weighting schemes are supported:

* ``text``           -- idf-weighted token matching, verbs boosted, scores
                        length-normalized by sqrt of the clause length;
* ``text_plus_freq`` -- the same plus a log-frequency bonus so general,
                        frequent events surface.

Per tag, the top-k results of every query under both schemes are unioned
into the candidate set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .eventuality import EventualityGraph
from .ontology import Query

SCHEME_TEXT = "text"
SCHEME_TEXT_PLUS_FREQ = "text_plus_freq"
SCHEMES = (SCHEME_TEXT, SCHEME_TEXT_PLUS_FREQ)

DEFAULT_K = 10
DEFAULT_VERB_BOOST = 2.0
DEFAULT_FREQ_WEIGHT = 0.5


class RetrievalError(ValueError):
    pass


@dataclass
class InvertedIndex:
    # token -> [(event_id, appears-at-a-verb-position)]
    postings: dict[str, list[tuple[str, bool]]] = field(default_factory=dict)
    doc_lengths: dict[str, int] = field(default_factory=dict)
    doc_freq: dict[str, int] = field(default_factory=dict)
    n_docs: int = 0
    frequencies: dict[str, int] = field(default_factory=dict)


@dataclass
class Candidate:
    tag_id: str
    event_id: str
    score: float
    scheme: str
    matched_queries: list[int]

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise RetrievalError(f"candidate ({self.tag_id}, {self.event_id}): non-finite score")
        if not self.matched_queries:
            raise RetrievalError(f"candidate ({self.tag_id}, {self.event_id}): no matched queries")


def build_index(graph: EventualityGraph) -> InvertedIndex:
    """Index every event of an (already filtered) graph."""
    index = InvertedIndex()
    for eid, event in graph.events.items():
        index.doc_lengths[eid] = len(event.tokens)
        index.frequencies[eid] = event.frequency
        verb_positions = set(event.verb_indices)
        seen: dict[str, bool] = {}
        for pos, token in enumerate(event.tokens):
            seen[token] = seen.get(token, False) or pos in verb_positions
        for token, is_verb in seen.items():
            index.postings.setdefault(token, []).append((eid, is_verb))
    index.n_docs = len(index.doc_lengths)
    index.doc_freq = {token: len(entries) for token, entries in index.postings.items()}
    return index


def _idf(index: InvertedIndex, token: str) -> float:
    return math.log(1.0 + index.n_docs / index.doc_freq[token])


def retrieve(
    index: InvertedIndex,
    query: Query,
    scheme: str,
    k: int = DEFAULT_K,
    verb_boost: float = DEFAULT_VERB_BOOST,
    freq_weight: float = DEFAULT_FREQ_WEIGHT,
) -> list[tuple[str, float]]:
    """Rank events for one query; returns at most k (event_id, score) pairs.

    score = sum(idf(t) * w(t, e) for matched tokens t) / sqrt(len(e)), with
    w = verb_boost when the token sits at a verb position in the event; the
    ``text_plus_freq`` scheme adds freq_weight * ln(1 + frequency(e)).
    Ties break by frequency descending, then event id ascending.
    """
    if scheme not in SCHEMES:
        raise RetrievalError(f"unknown weighting scheme {scheme!r}")
    if k < 1:
        raise RetrievalError(f"k must be >= 1, got {k}")

    unique_tokens = list(dict.fromkeys(query.tokens))
    accum: dict[str, float] = {}
    for token in unique_tokens:
        entries = index.postings.get(token)
        if not entries:
            continue
        idf = _idf(index, token)
        for eid, is_verb in entries:
            weight = verb_boost if is_verb else 1.0
            accum[eid] = accum.get(eid, 0.0) + idf * weight

    scored: list[tuple[str, float]] = []
    for eid, total in accum.items():
        score = total / math.sqrt(index.doc_lengths[eid])
        if scheme == SCHEME_TEXT_PLUS_FREQ:
            score += freq_weight * math.log(1.0 + index.frequencies[eid])
        scored.append((eid, score))

    scored.sort(key=lambda item: (-item[1], -index.frequencies[item[0]], item[0]))
    return scored[:k]


def gather_candidates(
    index: InvertedIndex,
    queries: list[Query],
    k: int = DEFAULT_K,
    verb_boost: float = DEFAULT_VERB_BOOST,
    freq_weight: float = DEFAULT_FREQ_WEIGHT,
) -> list[Candidate]:
    """Union both schemes' top-k over all queries of one tag.

    Candidates are deduplicated by event id, keeping the maximum score seen
    (scheme ``text`` preferred on exact ties) and accumulating the indices
    of every query that retrieved the event. The result is independent of
    query evaluation order.
    """
    if not queries:
        return []
    tag_id = queries[0].tag_id
    if any(q.tag_id != tag_id for q in queries):
        raise RetrievalError("gather_candidates expects queries of a single tag")

    best: dict[str, tuple[float, str]] = {}
    matched: dict[str, set[int]] = {}
    for qi, query in enumerate(queries):
        for scheme in SCHEMES:
            for eid, score in retrieve(index, query, scheme, k, verb_boost, freq_weight):
                matched.setdefault(eid, set()).add(qi)
                prev = best.get(eid)
                if prev is None or score > prev[0] or (score == prev[0] and scheme == SCHEME_TEXT):
                    best[eid] = (score, scheme)

    candidates = [
        Candidate(
            tag_id=tag_id,
            event_id=eid,
            score=score,
            scheme=scheme,
            matched_queries=sorted(matched[eid]),
        )
        for eid, (score, scheme) in best.items()
    ]
    candidates.sort(key=lambda c: (-c.score, c.event_id))
    return candidates


def candidates_to_jsonl(candidates: list[Candidate]) -> str:
    lines = [
        json.dumps(
            {
                "tag_id": c.tag_id,
                "event_id": c.event_id,
                "score": c.score,
                "scheme": c.scheme,
                "matched_queries": c.matched_queries,
            },
            sort_keys=True,
        )
        for c in candidates
    ]
    return "".join(line + "\n" for line in lines)


def load_candidates_jsonl(path: str | Path) -> list[Candidate]:
    candidates = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            candidates.append(
                Candidate(
                    tag_id=obj["tag_id"],
                    event_id=obj["event_id"],
                    score=float(obj["score"]),
                    scheme=obj["scheme"],
                    matched_queries=list(obj["matched_queries"]),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise RetrievalError(f"{path}:{lineno}: malformed candidate record: {exc}") from exc
    return candidates
