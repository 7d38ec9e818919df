"""WordNet-style lexical database: lemmatizer, stopwords, Lesk disambiguation.

The on-disk layout is a directory with three UTF-8 files:

* ``synsets.tsv``    -- one synset per line: id, pos, comma-joined lemmas, gloss
* ``exceptions.tsv`` -- irregular forms: inflected form, pos, lemma
* ``stopwords.txt``  -- one lowercase stopword per line
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

NOUN = "noun"
VERB = "verb"
ADJ = "adj"
ADV = "adv"
POS_TAGS = (NOUN, VERB, ADJ, ADV)

# Ordered suffix rewrites, tried first to last; each (suffix, replacements)
# entry yields one candidate per replacement, and the first candidate that
# exists in the sense index wins.
_SUFFIX_RULES = {
    NOUN: [
        ("ses", ["s"]),
        ("ies", ["y"]),
        ("es", ["e", ""]),
        ("s", [""]),
    ],
    VERB: [
        ("ies", ["y"]),
        ("ing", ["", "e"]),
        ("ed", ["", "e"]),
        ("es", ["e", ""]),
        ("s", [""]),
    ],
    ADJ: [],
    ADV: [],
}


class LexiconError(ValueError):
    pass


@dataclass(frozen=True)
class Synset:
    """One word sense: its member lemmas and tokenized gloss."""

    id: str
    pos: str
    lemmas: tuple[str, ...]
    gloss_tokens: tuple[str, ...]

    def __post_init__(self):
        if self.pos not in POS_TAGS:
            raise LexiconError(f"synset {self.id!r}: bad pos {self.pos!r}")
        if not self.lemmas:
            raise LexiconError(f"synset {self.id!r}: no lemmas")
        if not self.gloss_tokens:
            raise LexiconError(f"synset {self.id!r}: empty gloss")


@dataclass
class Lexicon:
    """Immutable after load; all lookups are pure reads."""

    synsets: dict[str, Synset] = field(default_factory=dict)
    # (lemma, pos) -> synset ids in sense-priority order
    sense_index: dict[tuple[str, str], list[str]] = field(default_factory=dict)
    # (inflected form, pos) -> lemma
    morph_exceptions: dict[tuple[str, str], str] = field(default_factory=dict)
    stopwords: set[str] = field(default_factory=set)

    def has_lemma(self, lemma: str, pos: str) -> bool:
        return (lemma, pos) in self.sense_index


def load_lexicon(directory: str | Path) -> Lexicon:
    directory = Path(directory)
    lex = Lexicon()

    synsets_path = directory / "synsets.tsv"
    for lineno, line in enumerate(_read_lines(synsets_path), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise LexiconError(f"{synsets_path}:{lineno}: expected 4 tab-separated fields")
        sid, pos, lemmas_joined, gloss = parts
        if sid in lex.synsets:
            raise LexiconError(f"{synsets_path}:{lineno}: duplicate synset id {sid!r}")
        lemmas = tuple(l.strip() for l in lemmas_joined.split(",") if l.strip())
        gloss_tokens = tuple(gloss.lower().split())
        syn = Synset(id=sid, pos=pos, lemmas=lemmas, gloss_tokens=gloss_tokens)
        lex.synsets[sid] = syn
        for lemma in lemmas:
            ids = lex.sense_index.setdefault((lemma, pos), [])
            if sid not in ids:
                ids.append(sid)

    exceptions_path = directory / "exceptions.tsv"
    if exceptions_path.exists():
        for lineno, line in enumerate(_read_lines(exceptions_path), start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise LexiconError(f"{exceptions_path}:{lineno}: expected 3 tab-separated fields")
            form, pos, lemma = (p.strip() for p in parts)
            lex.morph_exceptions[(form, pos)] = lemma

    stopwords_path = directory / "stopwords.txt"
    if stopwords_path.exists():
        lex.stopwords = {w.strip().lower() for w in _read_lines(stopwords_path) if w.strip()}

    return lex


def _read_lines(path: Path) -> list[str]:
    return path.read_text(encoding="utf-8").split("\n")


def lemmatize(lex: Lexicon, token: str, pos: str) -> str:
    """Reduce an inflected form to the lemma listed in the lexicon.

    Irregular forms come from the exception table; regular ones from the
    ordered suffix rewrites, keeping the first candidate present in the
    sense index. Unknown tokens come back unchanged (total function).
    """
    exc = lex.morph_exceptions.get((token, pos))
    if exc is not None:
        return exc
    for suffix, replacements in _SUFFIX_RULES.get(pos, []):
        if not token.endswith(suffix) or len(token) <= len(suffix):
            continue
        stem = token[: -len(suffix)]
        for repl in replacements:
            candidate = stem + repl
            if lex.has_lemma(candidate, pos):
                return candidate
    return token


def disambiguate(lex: Lexicon, target: str, pos: str, context: list[str]) -> str | None:
    """Pick the sense of (target, pos) whose gloss overlaps the context most.

    Overlap counts gloss tokens (with multiplicity) that appear in the
    context after removing stopwords and the target itself. Ties go to the
    earliest sense in priority order; no senses means None.
    """
    candidate_ids = lex.sense_index.get((target, pos))
    if not candidate_ids:
        return None
    context_set = {t for t in context if t not in lex.stopwords and t != target}
    best_id = None
    best_score = -1
    for sid in candidate_ids:
        syn = lex.synsets[sid]
        score = sum(1 for g in syn.gloss_tokens if g in context_set)
        if score > best_score:
            best_id = sid
            best_score = score
    return best_id


def synonyms_of(lex: Lexicon, synset_id: str, lemma: str) -> list[str]:
    """Lemmas of the synset other than the query lemma, in listed order."""
    syn = lex.synsets.get(synset_id)
    if syn is None:
        raise LexiconError(f"unknown synset id {synset_id!r}: corrupt lexicon reference")
    return [l for l in syn.lemmas if l != lemma]
