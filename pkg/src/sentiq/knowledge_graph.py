"""Keyword expansion through typed entity relations and tweet matching.

A ticker's company entity is expanded into a keyword dictionary: the main
keywords are the company name plus extras such as the exchange-code
hashtag, and the related keywords come from a closed set of relation
types (locations and regions, key people, parent companies, subsidiaries,
products) in a local relation snapshot file. Matching is case- and
diacritic-insensitive on token boundaries, which Turkish text needs:
plain lowercasing does not collapse dotted/dotless I variants.
"""

from __future__ import annotations

import csv
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

RELATION_TYPES = frozenset({
    "LocationCountry",
    "RegionServed",
    "KeyPerson",
    "KeyPeople",
    "parentCompany",
    "subsidiary",
    "product",
})

RELATIONS_HEADER = ("source_entity", "relation_type", "target_label")


class MatchKind(Enum):
    """How a tweet relates to a ticker's keyword dictionary."""

    MAIN = "main"
    RELATED = "related"
    NONE = "none"


@dataclass(frozen=True)
class EntityRelation:
    """One typed edge from a company entity to a keyword label."""

    source_entity: str
    relation_type: str
    target_label: str

    def __post_init__(self) -> None:
        if self.relation_type not in RELATION_TYPES:
            raise ValueError(f"unknown relation type {self.relation_type!r}")
        if not self.source_entity.strip() or not self.target_label.strip():
            raise ValueError("entity and label must be non-empty")


def fold(text: str) -> str:
    """Fold text for matching: casefold, strip diacritics, squash whitespace.

    Turkish dotted/dotless I variants all collapse to ASCII "i" so that
    "İş", "iş", "Iş" and "IS" compare equal after folding.
    """
    lowered = text.casefold()
    decomposed = unicodedata.normalize("NFKD", lowered)
    stripped = "".join(ch for ch in decomposed
                       if unicodedata.category(ch) != "Mn")
    stripped = stripped.replace("ı", "i")  # dotless i
    return " ".join(stripped.split())


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _contains_token(text: str, keyword: str) -> bool:
    """True if ``keyword`` occurs in ``text`` on token boundaries.

    Both arguments must already be folded. A boundary is only required on
    a side where the keyword itself starts/ends with a word character, so
    hashtag keywords keep their leading '#' but "turkey" does not match
    inside "turkeys".
    """
    if not keyword:
        return False
    start = 0
    while True:
        pos = text.find(keyword, start)
        if pos < 0:
            return False
        end = pos + len(keyword)
        left_ok = (pos == 0 or not _is_word_char(text[pos - 1])
                   or not _is_word_char(keyword[0]))
        right_ok = (end == len(text) or not _is_word_char(text[end])
                    or not _is_word_char(keyword[-1]))
        if left_ok and right_ok:
            return True
        start = pos + 1


class KeywordDictionary:
    """Main and related keyword sets for one ticker, with folded lookups."""

    def __init__(self, main_keywords: Iterable[str],
                 related_keywords: Iterable[str] = ()) -> None:
        self.main_keywords = frozenset(k for k in main_keywords if k.strip())
        if not self.main_keywords:
            raise ValueError("a keyword dictionary needs at least one main keyword")
        main_folded = {fold(k) for k in self.main_keywords}
        related = frozenset(k for k in related_keywords
                            if k.strip() and fold(k) not in main_folded)
        self.related_keywords = related
        self._main_folded = tuple(sorted(main_folded))
        self._related_folded = tuple(sorted({fold(k) for k in related}))

    def __repr__(self) -> str:
        return (f"KeywordDictionary(main={sorted(self.main_keywords)}, "
                f"related={sorted(self.related_keywords)})")


def expand_keywords(entity: str,
                    relations: Sequence[EntityRelation],
                    main_extra: Iterable[str] = ()) -> KeywordDictionary:
    """Expand a company entity into its keyword dictionary.

    Main keywords are the entity name plus ``main_extra`` (exchange code
    and friends); related keywords are the relation target labels, minus
    anything that folds equal to a main keyword.
    """
    if not entity.strip():
        raise ValueError("entity name must be non-empty")
    for rel in relations:
        if rel.source_entity != entity:
            raise ValueError(
                f"relation source {rel.source_entity!r} does not match {entity!r}")
    return KeywordDictionary(
        main_keywords={entity, *main_extra},
        related_keywords={rel.target_label for rel in relations},
    )


def match_tweet(text: str, dictionary: KeywordDictionary) -> MatchKind:
    """Classify a text against a keyword dictionary; main beats related."""
    folded = fold(text)
    if any(_contains_token(folded, kw) for kw in dictionary._main_folded):
        return MatchKind.MAIN
    if any(_contains_token(folded, kw) for kw in dictionary._related_folded):
        return MatchKind.RELATED
    return MatchKind.NONE


def load_relations(path: str | Path) -> list[EntityRelation]:
    """Load a relation snapshot CSV: source_entity,relation_type,target_label."""
    path = Path(path)
    relations: list[EntityRelation] = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        missing = [c for c in RELATIONS_HEADER if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        for lineno, row in enumerate(reader, start=2):
            try:
                relations.append(EntityRelation(
                    source_entity=row["source_entity"].strip(),
                    relation_type=row["relation_type"].strip(),
                    target_label=row["target_label"].strip(),
                ))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return relations


def relations_for(entity: str,
                  relations: Iterable[EntityRelation]) -> list[EntityRelation]:
    """Filter a snapshot down to one entity's relations."""
    return [rel for rel in relations if rel.source_entity == entity]


def format_dictionary(name: str, dictionary: KeywordDictionary) -> str:
    """Plain-text report of a ticker's main vs related keywords."""
    lines = [f"keywords for {name}", "  main:"]
    lines += [f"    {kw}" for kw in sorted(dictionary.main_keywords)]
    lines.append("  related:")
    lines += [f"    {kw}" for kw in sorted(dictionary.related_keywords)]
    return "\n".join(lines) + "\n"


def save_dictionary_csv(path: str | Path, dictionary: KeywordDictionary) -> None:
    """Machine-readable dictionary dump: keyword,kind rows."""
    with Path(path).open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["keyword", "kind"])
        for kw in sorted(dictionary.main_keywords):
            writer.writerow([kw, "main"])
        for kw in sorted(dictionary.related_keywords):
            writer.writerow([kw, "related"])


def load_dictionary_csv(path: str | Path) -> KeywordDictionary:
    """Read back a dictionary written by :func:`save_dictionary_csv`."""
    main: set[str] = set()
    related: set[str] = set()
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            (main if row["kind"] == "main" else related).add(row["keyword"])
    return KeywordDictionary(main_keywords=main, related_keywords=related)
