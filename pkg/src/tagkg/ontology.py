"""Tag ontology ingestion and query expansion.

Two input flavors are supported:

* ``audioset_json`` -- JSON array of ``{id, name, description, child_ids}``
  objects (extra fields ignored);
* ``two_level``     -- JSON object mapping coarse label name to the list of
  its fine label names; names double as ids.

Father links are derived as the inverse of the child lists, and the IsA
hierarchy is verified acyclic at load time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .lexicon import Lexicon, NOUN, VERB, disambiguate, lemmatize, synonyms_of

AUDIOSET_JSON = "audioset_json"
TWO_LEVEL = "two_level"

QUERY_SOURCES = ("base", "parenthetical", "synonym", "father_pair")

_PAREN_RE = re.compile(r"\(([^()]*)\)")
_TOKEN_RE = re.compile(r"[a-z0-9]+")


class OntologyError(ValueError):
    pass


@dataclass
class Tag:
    id: str
    name: str
    description: str = ""
    child_ids: list[str] = field(default_factory=list)
    father_ids: list[str] = field(default_factory=list)

    @property
    def is_leaf(self) -> bool:
        return not self.child_ids


@dataclass
class TagOntology:
    tags: dict[str, Tag]
    flavor: str

    @property
    def roots(self) -> list[str]:
        return [tid for tid, tag in self.tags.items() if not tag.father_ids]

    def tag_ids(self) -> list[str]:
        return list(self.tags)


@dataclass(frozen=True)
class Query:
    """One retrieval query expanded from a tag."""

    tag_id: str
    tokens: tuple[str, ...]
    verb_flags: tuple[bool, ...]
    source: str

    def __post_init__(self):
        if not self.tokens:
            raise OntologyError(f"query for {self.tag_id!r}: empty token list")
        if len(self.tokens) != len(self.verb_flags):
            raise OntologyError(f"query for {self.tag_id!r}: verb_flags length mismatch")
        if self.source not in QUERY_SOURCES:
            raise OntologyError(f"query for {self.tag_id!r}: bad source {self.source!r}")


def load_ontology(path: str | Path, flavor: str) -> TagOntology:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"), object_pairs_hook=_reject_dup_keys)
    except json.JSONDecodeError as exc:
        raise OntologyError(f"{path}: not valid JSON: {exc}") from exc

    if flavor == AUDIOSET_JSON:
        ontology = _load_audioset(raw, path)
    elif flavor == TWO_LEVEL:
        ontology = _load_two_level(raw, path)
    else:
        raise OntologyError(f"unknown ontology flavor {flavor!r}")

    _derive_fathers(ontology)
    _check_acyclic(ontology)
    return ontology


def _reject_dup_keys(pairs):
    d = {}
    for k, v in pairs:
        if k in d:
            raise OntologyError(f"duplicate id {k!r}")
        d[k] = v
    return d


def _load_audioset(raw, path: Path) -> TagOntology:
    if not isinstance(raw, list):
        raise OntologyError(f"{path}: expected a JSON array of tag objects")
    tags: dict[str, Tag] = {}
    for entry in raw:
        if not isinstance(entry, dict) or "id" not in entry or "name" not in entry:
            raise OntologyError(f"{path}: tag entries need at least 'id' and 'name'")
        tid = entry["id"]
        if tid in tags:
            raise OntologyError(f"{path}: duplicate id {tid!r}")
        child_ids = list(entry.get("child_ids", []))
        if tid in child_ids:
            raise OntologyError(f"{path}: cycle detected at {tid!r} (tag lists itself)")
        tags[tid] = Tag(
            id=tid,
            name=entry["name"],
            description=entry.get("description", "") or "",
            child_ids=child_ids,
        )
    for tag in tags.values():
        for cid in tag.child_ids:
            if cid not in tags:
                raise OntologyError(f"{path}: {tag.id!r} lists unknown child {cid!r}")
    return TagOntology(tags=tags, flavor=AUDIOSET_JSON)


def _load_two_level(raw, path: Path) -> TagOntology:
    if not isinstance(raw, dict):
        raise OntologyError(f"{path}: expected a JSON object mapping coarse to fine names")
    tags: dict[str, Tag] = {}
    for coarse, fines in raw.items():
        if coarse in tags:
            raise OntologyError(f"{path}: duplicate id {coarse!r}")
        tags[coarse] = Tag(id=coarse, name=coarse, child_ids=list(fines))
    for coarse, fines in raw.items():
        for fine in fines:
            if fine in raw:
                raise OntologyError(f"{path}: {fine!r} is both a coarse and a fine label")
            if fine not in tags:
                tags[fine] = Tag(id=fine, name=fine)
    return TagOntology(tags=tags, flavor=TWO_LEVEL)


def _derive_fathers(ontology: TagOntology) -> None:
    for tag in ontology.tags.values():
        tag.father_ids = []
    for tid, tag in ontology.tags.items():
        for cid in tag.child_ids:
            child = ontology.tags[cid]
            if tid not in child.father_ids:
                child.father_ids.append(tid)


def _check_acyclic(ontology: TagOntology) -> None:
    # Iterative DFS over child edges; 0 unseen, 1 on stack, 2 done.
    state = {tid: 0 for tid in ontology.tags}
    for start in ontology.tags:
        if state[start]:
            continue
        stack = [(start, iter(ontology.tags[start].child_ids))]
        state[start] = 1
        while stack:
            node, children = stack[-1]
            advanced = False
            for cid in children:
                if state[cid] == 1:
                    raise OntologyError(f"cycle detected at {cid!r}")
                if state[cid] == 0:
                    state[cid] = 1
                    stack.append((cid, iter(ontology.tags[cid].child_ids)))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                stack.pop()


def save_ontology(ontology: TagOntology, path: str | Path) -> None:
    """Write back in the flavor's input format; load-save-load is a fixed point."""
    path = Path(path)
    if ontology.flavor == AUDIOSET_JSON:
        payload = [
            {
                "id": tag.id,
                "name": tag.name,
                "description": tag.description,
                "child_ids": tag.child_ids,
            }
            for tag in ontology.tags.values()
        ]
    else:
        payload = {tag.id: tag.child_ids for tag in ontology.tags.values() if tag.child_ids or not tag.father_ids}
    path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class TokenizedName:
    main_tokens: tuple[str, ...]
    main_verb_flags: tuple[bool, ...]
    paren_groups: tuple[tuple[str, ...], ...]
    paren_verb_flags: tuple[tuple[bool, ...], ...]


def preprocess_name(name: str, lex: Lexicon) -> TokenizedName:
    """Lowercase, split out parenthetical groups, drop stopwords, lemmatize.

    A token ending in -ing whose verb lemma is in the lexicon is treated as
    a verb; everything else as a noun. A name that is nothing but stopwords
    falls back to the raw lowercased name as a single token.
    """
    lowered = name.lower()
    paren_groups: list[tuple[str, ...]] = []
    paren_flags: list[tuple[bool, ...]] = []
    for segment in _PAREN_RE.findall(lowered):
        for group_text in segment.split(","):
            tokens, flags = _clean_tokens(group_text, lex)
            if not tokens:
                fallback = group_text.strip()
                if not fallback:
                    continue
                tokens, flags = (fallback,), (False,)
            paren_groups.append(tokens)
            paren_flags.append(flags)
    main_text = _PAREN_RE.sub(" ", lowered)
    main_tokens, main_flags = _clean_tokens(main_text, lex)
    if not main_tokens:
        main_tokens, main_flags = (lowered.strip(),), (False,)
    return TokenizedName(
        main_tokens=main_tokens,
        main_verb_flags=main_flags,
        paren_groups=tuple(paren_groups),
        paren_verb_flags=tuple(paren_flags),
    )


def _clean_tokens(text: str, lex: Lexicon) -> tuple[tuple[str, ...], tuple[bool, ...]]:
    tokens: list[str] = []
    flags: list[bool] = []
    for raw in _TOKEN_RE.findall(text):
        if raw in lex.stopwords:
            continue
        lemma, is_verb = _lemmatize_with_pos(raw, lex)
        tokens.append(lemma)
        flags.append(is_verb)
    return tuple(tokens), tuple(flags)


def _lemmatize_with_pos(token: str, lex: Lexicon) -> tuple[str, bool]:
    if token.endswith("ing"):
        verb_lemma = lemmatize(lex, token, VERB)
        if lex.has_lemma(verb_lemma, VERB):
            return verb_lemma, True
    return lemmatize(lex, token, NOUN), False


def expand_queries(tag: Tag, ontology: TagOntology, lex: Lexicon) -> list[Query]:
    """Expand one tag into its retrieval queries.

    Order: the base query from the main tokens, one query per parenthetical
    group, synonym substitutions chosen by gloss-overlap disambiguation,
    then father-paired queries when the tag has two or more fathers.
    Duplicated token sequences keep their first occurrence.
    """
    if tag.id not in ontology.tags:
        raise OntologyError(f"tag {tag.id!r} does not belong to this ontology")
    tn = preprocess_name(tag.name, lex)
    father_names = [preprocess_name(ontology.tags[fid].name, lex) for fid in tag.father_ids]

    queries: list[Query] = [Query(tag.id, tn.main_tokens, tn.main_verb_flags, "base")]
    for tokens, flags in zip(tn.paren_groups, tn.paren_verb_flags):
        queries.append(Query(tag.id, tokens, flags, "parenthetical"))

    context: list[str] = list(tn.main_tokens)
    for group in tn.paren_groups:
        context.extend(group)
    for fn in father_names:
        context.extend(fn.main_tokens)

    for i, (token, is_verb) in enumerate(zip(tn.main_tokens, tn.main_verb_flags)):
        sid = disambiguate(lex, token, VERB if is_verb else NOUN, context)
        if sid is None:
            continue
        for synonym in synonyms_of(lex, sid, token):
            syn_tokens = tuple(synonym.replace("_", " ").split())
            tokens = tn.main_tokens[:i] + syn_tokens + tn.main_tokens[i + 1 :]
            flags = (
                tn.main_verb_flags[:i]
                + (is_verb,) * len(syn_tokens)
                + tn.main_verb_flags[i + 1 :]
            )
            queries.append(Query(tag.id, tokens, flags, "synonym"))

    if len(tag.father_ids) >= 2:
        for fn in father_names:
            queries.append(
                Query(
                    tag.id,
                    fn.main_tokens + tn.main_tokens,
                    fn.main_verb_flags + tn.main_verb_flags,
                    "father_pair",
                )
            )

    seen: set[tuple[str, ...]] = set()
    unique: list[Query] = []
    for q in queries:
        if q.tokens in seen:
            continue
        seen.add(q.tokens)
        unique.append(q)
    return unique


def queries_to_jsonl(queries: list[Query]) -> str:
    lines = [
        json.dumps(
            {
                "tag_id": q.tag_id,
                "tokens": list(q.tokens),
                "verb_flags": list(q.verb_flags),
                "source": q.source,
            },
            sort_keys=True,
        )
        for q in queries
    ]
    return "".join(line + "\n" for line in lines)
