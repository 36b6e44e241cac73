"""Controlled vocabulary for road space and road objects.

A lexicon is a forest of terms. Space terms nest strictly by rank (a rank-3
space always has a rank-2 parent); object terms have rank 1 or 2. Each
term may carry synonyms. A synonym shared by several terms is an
ambiguity and is only accepted when every term carrying it is flagged
``ambiguous``; resolving it then yields an :class:`AmbiguityReport` rather
than a guess.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Union

from voirie.errors import DuplicationError, RankError, StructureError, UnknownTermError

KINDS = ("space", "object")
MAX_OBJECT_RANK = 2

# terms printed in the source table; any lexicon must keep them
SEED_TERMS = (
    "Assiette", "Chaussée", "Chaussée principale", "Chaussée propre", "Chaussée cyclable",
    "Voie circulée", "Voie auto.", "Voie TC", "Voie cycles",
    "Dépendance", "Piétonnière", "Trottoir", "Arcade", "Galerie",
    "Stationnement", "Sur chaussée", "En file propre", "Accotement de sécurité",
    "Espace de tenue de l'infrastructure", "Délaissé de voirie",
    "Equipement chaussée", "Séparateur d'espace", "Organisation de la circulation",
    "Equipement dépendances", "Arbre", "Jardinière",
)


def normalize_word(word: str) -> str:
    """Lookup key: accents stripped, case folded, whitespace collapsed."""
    decomposed = unicodedata.normalize("NFKD", word)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.casefold().split())


@dataclass(frozen=True)
class LexiconNode:
    term: str
    kind: str
    rank: int
    parent: Optional[str] = None
    definition: str = ""
    synonyms: tuple[str, ...] = ()
    ambiguous: bool = False
    sense_note: Optional[str] = None
    source_note: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict, idx: int) -> "LexiconNode":
        if not isinstance(d, dict):
            raise StructureError(f"node #{idx}: expected an object")
        term = d.get("term")
        if not isinstance(term, str) or not term.strip():
            raise StructureError(f"node #{idx}: missing 'term'")
        kind = d.get("kind")
        if kind not in KINDS:
            raise StructureError(f"node {term!r}: kind must be one of {KINDS}, got {kind!r}")
        rank = d.get("rank")
        if isinstance(rank, bool) or not isinstance(rank, int) or rank < 1:
            raise RankError(f"node {term!r}: rank must be an integer >= 1, got {rank!r}")
        synonyms = d.get("synonyms") or []
        if not isinstance(synonyms, list) or not all(isinstance(s, str) for s in synonyms):
            raise StructureError(f"node {term!r}: synonyms must be a list of strings")
        return cls(
            term=term,
            kind=kind,
            rank=rank,
            parent=d.get("parent"),
            definition=d.get("definition") or "",
            synonyms=tuple(synonyms),
            ambiguous=bool(d.get("ambiguous", False)),
            sense_note=d.get("sense_note"),
            source_note=d.get("source_note"),
        )

    def to_dict(self) -> dict:
        d = {
            "term": self.term,
            "kind": self.kind,
            "rank": self.rank,
            "parent": self.parent,
            "definition": self.definition,
            "synonyms": list(self.synonyms),
        }
        if self.ambiguous:
            d["ambiguous"] = True
        if self.sense_note:
            d["sense_note"] = self.sense_note
        if self.source_note:
            d["source_note"] = self.source_note
        return d


@dataclass(frozen=True)
class Sense:
    term: str
    definition: str
    note: Optional[str]
    ancestry: tuple[str, ...]


@dataclass(frozen=True)
class AmbiguityReport:
    word: str
    senses: tuple[Sense, ...]

    def to_dict(self) -> dict:
        return {
            "word": self.word,
            "ambiguous": True,
            "senses": [
                {"term": s.term, "definition": s.definition, "note": s.note, "ancestry": list(s.ancestry)}
                for s in self.senses
            ],
        }


@dataclass
class Lexicon:
    nodes: dict[str, LexiconNode]
    version: str
    _index: dict[str, list[str]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        _validate(self.nodes)
        self._index = _build_index(self.nodes)

    def __contains__(self, term: str) -> bool:
        return term in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, term: str) -> LexiconNode:
        try:
            return self.nodes[term]
        except KeyError:
            raise UnknownTermError(f"unknown term {term!r}") from None

    def children(self, term: str) -> list[str]:
        return [n.term for n in self.nodes.values() if n.parent == term]

    def synonym_table(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in self._index.items()}

    def to_json(self) -> list[dict]:
        return [n.to_dict() for n in self.nodes.values()]


def _validate(nodes: dict[str, LexiconNode]) -> None:
    if not nodes:
        raise StructureError("lexicon has no nodes")
    for node in nodes.values():
        if node.parent is not None and node.parent not in nodes:
            raise StructureError(f"node {node.term!r}: parent {node.parent!r} is not a term of the lexicon")
        if node.parent == node.term:
            raise StructureError(f"node {node.term!r} is its own parent (cycle)")
    # cycle detection by walking parents
    for start in nodes:
        seen = {start}
        cur = nodes[start].parent
        while cur is not None:
            if cur in seen:
                raise StructureError(f"cycle through {start!r} and {cur!r}")
            seen.add(cur)
            cur = nodes[cur].parent
    for node in nodes.values():
        parent = nodes.get(node.parent) if node.parent else None
        if parent is not None and parent.kind != node.kind:
            raise StructureError(f"node {node.term!r} ({node.kind}) has a {parent.kind} parent")
        if node.kind == "space":
            expected = 1 if parent is None else parent.rank + 1
            if node.rank != expected:
                raise RankError(f"space {node.term!r}: rank {node.rank}, expected {expected}")
        else:
            if node.rank > MAX_OBJECT_RANK:
                raise RankError(f"object {node.term!r}: rank {node.rank} exceeds {MAX_OBJECT_RANK}")
            expected = 1 if parent is None else parent.rank + 1
            if node.rank != expected:
                raise RankError(f"object {node.term!r}: rank {node.rank}, expected {expected}")


def _build_index(nodes: dict[str, LexiconNode]) -> dict[str, list[str]]:
    canon = {normalize_word(t): t for t in nodes}
    index: dict[str, list[str]] = {k: [v] for k, v in canon.items()}
    for node in nodes.values():
        for syn in node.synonyms:
            key = normalize_word(syn)
            targets = index.setdefault(key, [])
            if node.term not in targets:
                targets.append(node.term)
    for key, targets in index.items():
        if len(targets) > 1:
            if key in canon:
                raise DuplicationError(f"synonym {key!r} collides with canonical term {canon[key]!r}")
            unflagged = [t for t in targets if not nodes[t].ambiguous]
            if unflagged:
                raise DuplicationError(
                    f"synonym {key!r} maps to {targets} but {unflagged} are not flagged ambiguous"
                )
    return index


def build_lexicon(doc: Union[list, dict], require_seed: bool = True) -> Lexicon:
    """Validate a parsed lexicon document (a node array, or ``{"version", "nodes"}``)."""
    version = None
    if isinstance(doc, dict):
        version = doc.get("version")
        doc = doc.get("nodes")
    if not isinstance(doc, list) or not doc:
        raise StructureError("lexicon document must be a non-empty array of nodes")
    nodes: dict[str, LexiconNode] = {}
    for idx, raw in enumerate(doc):
        node = LexiconNode.from_dict(raw, idx)
        if node.term in nodes:
            raise DuplicationError(f"duplicate canonical term {node.term!r}")
        nodes[node.term] = node
    if version is None:
        canonical = json.dumps([n.to_dict() for n in nodes.values()], sort_keys=True, ensure_ascii=False)
        version = "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()[:12]
    lex = Lexicon(nodes, str(version))
    if require_seed:
        missing = [t for t in SEED_TERMS if t not in lex]
        if missing:
            raise StructureError(f"lexicon lacks seed terms: {missing}")
    return lex


def load_lexicon(path, require_seed: bool = True) -> Lexicon:
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        raise StructureError(f"{path}: empty lexicon file")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StructureError(f"{path}: not valid JSON ({exc})") from exc
    return build_lexicon(doc, require_seed=require_seed)


def seed_path() -> Path:
    return Path(str(resources.files("voirie") / "data" / "lexicon_seed.json"))


def load_seed() -> Lexicon:
    return load_lexicon(seed_path())


def ancestry(lex: Lexicon, term: str) -> list[str]:
    """Terms from the root down to ``term``."""
    node = lex[term]
    path = [node.term]
    while node.parent is not None:
        node = lex[node.parent]
        path.append(node.term)
    return path[::-1]


def resolve_term(lex: Lexicon, word: str, sense: Optional[str] = None) -> Union[str, AmbiguityReport]:
    """Map ``word`` to its canonical term.

    An ambiguous word yields an :class:`AmbiguityReport` unless ``sense``
    names one of its candidate terms.
    """
    targets = lex._index.get(normalize_word(word))
    if not targets:
        raise UnknownTermError(f"unknown word {word!r}")
    if len(targets) == 1:
        return targets[0]
    if sense is not None:
        if sense not in targets:
            raise UnknownTermError(f"{sense!r} is not a sense of {word!r}; candidates: {targets}")
        return sense
    senses = tuple(
        Sense(t, lex[t].definition, lex[t].sense_note, tuple(ancestry(lex, t))) for t in targets
    )
    return AmbiguityReport(word, senses)


def canonical_or_raise(lex: Lexicon, word: str) -> str:
    out = resolve_term(lex, word)
    if isinstance(out, AmbiguityReport):
        raise UnknownTermError(
            f"{word!r} is ambiguous ({', '.join(s.term for s in out.senses)}); choose a sense"
        )
    return out


def dump_lexicon(lex: Lexicon, path) -> None:
    Path(path).write_text(json.dumps(lex.to_json(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8")


def words(lex: Lexicon) -> Iterable[str]:
    """Every canonical term and synonym in the lexicon."""
    for node in lex.nodes.values():
        yield node.term
        yield from node.synonyms
