"""Sentence segmentation, trigger matching, and the alumni dataset file.

A sentence is everything up to a full stop, except that a '.' inside a
wiki link ("[[St. Andrews]]") never splits.  A sentence containing a
trigger word contributes one record per university link it holds.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .persons import PersonPage
from .registry import MarkerDictionary, Registry

BASE_COLUMNS = ["university_id", "university_name", "person_link", "birth_year", "lang"]
ENRICHED_COLUMNS = BASE_COLUMNS + ["person_link_en", "views_total"]

_LINK = re.compile(r"\[\[(.+?)\]\]", re.DOTALL)


@dataclass(frozen=True)
class AlumniRecord:
    university_id: int
    university_name: str
    person_link: str
    birth_year: int | None
    lang: str
    person_link_en: str | None = None
    views_total: int | None = None
    unresolved: bool = False
    # evidence for the audit sampler; not part of the dataset file
    sentence: str = ""
    trigger: str = ""

    def key(self) -> tuple[int, str, str]:
        return (self.university_id, self.person_link, self.lang)


@dataclass(frozen=True)
class Sentence:
    text: str
    links: tuple[str, ...]


def split_sentences(wikitext: str) -> list[Sentence]:
    """Split at full stops outside [[...]]; each sentence carries its
    link targets in order of appearance."""
    sentences: list[str] = []
    depth = 0
    start = 0
    i = 0
    n = len(wikitext)
    while i < n:
        two = wikitext[i : i + 2]
        if two == "[[":
            depth += 1
            i += 2
            continue
        if two == "]]" and depth > 0:
            depth -= 1
            i += 2
            continue
        if wikitext[i] == "." and depth == 0:
            sentences.append(wikitext[start : i + 1])
            start = i + 1
        i += 1
    if start < n:
        tail = wikitext[start:]
        if tail.strip():
            sentences.append(tail)
    if not sentences and wikitext:
        sentences.append(wikitext)

    out = []
    for text in sentences:
        links = tuple(m.group(1).split("|", 1)[0] for m in _LINK.finditer(text))
        out.append(Sentence(text=text, links=links))
    return out


def _trigger_pattern(phrase: str) -> re.Pattern[str]:
    return re.compile(r"(?<!\w)" + re.escape(phrase) + r"(?!\w)", re.IGNORECASE)


def find_trigger(sentence: str, dictionary: MarkerDictionary) -> str | None:
    """First trigger phrase (dictionary order) present at a word boundary."""
    for phrase in dictionary.trigger_words:
        if _trigger_pattern(phrase).search(sentence):
            return phrase
    return None


def match_alumni(
    person: PersonPage, registry: Registry, dictionary: MarkerDictionary
) -> list[AlumniRecord]:
    """Emit one record per (person, university) pair found in a
    trigger-bearing sentence; duplicates across sentences are merged."""
    page = person.page
    records: dict[int, AlumniRecord] = {}
    for sentence in split_sentences(page.wikitext):
        trigger = find_trigger(sentence.text, dictionary)
        if trigger is None:
            continue
        for target in sentence.links:
            uid = registry.resolve_link(target, page.lang)
            if uid is None or uid in records:
                continue
            records[uid] = AlumniRecord(
                university_id=uid,
                university_name=registry.name_of(uid),
                person_link=page.title,
                birth_year=person.birth_year,
                lang=page.lang,
                sentence=sentence.text.strip(),
                trigger=trigger,
            )
    return list(records.values())


def merge_records(records: Iterable[AlumniRecord]) -> list[AlumniRecord]:
    """Drop duplicate (university, person, lang) triples, keeping the first."""
    seen: dict[tuple[int, str, str], AlumniRecord] = {}
    for rec in records:
        seen.setdefault(rec.key(), rec)
    return list(seen.values())


def sorted_records(records: Iterable[AlumniRecord]) -> list[AlumniRecord]:
    return sorted(records, key=lambda r: (r.university_id, r.person_link, r.lang))


def write_dataset(
    records: Sequence[AlumniRecord], path: str | Path, enriched: bool = False
) -> Path:
    """Write the tab-separated dataset, stably sorted; header-only when
    there are no records."""
    path = Path(path)
    columns = ENRICHED_COLUMNS if enriched else BASE_COLUMNS
    lines = ["\t".join(columns)]
    for rec in sorted_records(merge_records(records)):
        row = [
            str(rec.university_id),
            rec.university_name,
            rec.person_link,
            "" if rec.birth_year is None else str(rec.birth_year),
            rec.lang,
        ]
        if enriched:
            row.append(rec.person_link_en or "")
            row.append("" if rec.views_total is None else str(rec.views_total))
        lines.append("\t".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_dataset(path: str | Path) -> list[AlumniRecord]:
    """Read a dataset file written by write_dataset (either schema)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        return []
    header = lines[0].split("\t")
    if header not in (BASE_COLUMNS, ENRICHED_COLUMNS):
        raise ValueError(f"{path}: unrecognized dataset header {header}")
    enriched = header == ENRICHED_COLUMNS
    records = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split("\t")
        rec = AlumniRecord(
            university_id=int(parts[0]),
            university_name=parts[1],
            person_link=parts[2],
            birth_year=int(parts[3]) if parts[3] else None,
            lang=parts[4],
        )
        if enriched:
            rec = replace(
                rec,
                person_link_en=parts[5] or None,
                views_total=int(parts[6]) if parts[6] else None,
            )
        records.append(rec)
    return records
