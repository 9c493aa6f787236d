"""University registry and per-language marker dictionaries.

The registry maps (language, page title) to a university id.  Titles are
normalized the way wiki links denote them: first letter case-folded to
upper, underscores treated as spaces, section anchors and pipe text
stripped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DictionaryError, RegistryError

_WS = re.compile(r"[ _]+")


def normalize_title(raw: str) -> str:
    """Normalize a link target or title to its canonical lookup form."""
    t = raw.split("|", 1)[0].split("#", 1)[0]
    t = _WS.sub(" ", t).strip()
    if not t:
        return ""
    return t[0].upper() + t[1:]


@dataclass
class University:
    id: int
    canonical_name: str
    # all lookup titles per language (canonical + redirect aliases), normalized
    titles: dict[str, set[str]] = field(default_factory=dict)
    # first-listed title per language; used for the university's own pageviews
    canonical_titles: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class MarkerDictionary:
    """Person markers and alumni trigger phrases for one language.

    Matching is always case-insensitive.
    """

    lang: str
    person_markers: tuple[str, ...]
    trigger_words: tuple[str, ...]


class Registry:
    """Immutable after load; safe for concurrent reads."""

    def __init__(self, universities: dict[int, University]):
        self.universities = universities
        self._index: dict[tuple[str, str], int] = {}
        for uni in universities.values():
            for lang, titles in uni.titles.items():
                for title in titles:
                    key = (lang, title)
                    other = self._index.get(key)
                    if other is not None and other != uni.id:
                        claimant = universities[other]
                        raise RegistryError(
                            f"title {title!r} in lang {lang!r} claimed by both "
                            f"university {other} ({claimant.canonical_name!r}) "
                            f"and university {uni.id} ({uni.canonical_name!r})"
                        )
                    self._index[key] = uni.id

    def __len__(self) -> int:
        return len(self.universities)

    def resolve_link(self, target_title: str, lang: str) -> int | None:
        """Return the university id for a link target, or None on miss."""
        return self._index.get((lang, normalize_title(target_title)))

    def name_of(self, university_id: int) -> str:
        return self.universities[university_id].canonical_name


def load_registry(
    universities_file: str | Path,
    redirect_maps: dict[str, dict[str, str]] | None = None,
) -> Registry:
    """Load the universities file and fold in redirect aliases.

    The file is tab-separated with a header row: id, canonical_name,
    lang, title; one row per (university, lang, title).  redirect_maps
    gives, per language, the canonical-target mapping produced by
    dump.collect_redirects; every redirect whose target belongs to a
    university becomes an alias of that university.
    """
    redirect_maps = redirect_maps or {}
    universities: dict[int, University] = {}
    names: dict[int, str] = {}

    path = Path(universities_file)
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        expected = ["id", "canonical_name", "lang", "title"]
        if header != expected:
            raise RegistryError(
                f"{path}: expected header {expected}, got {header}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise RegistryError(f"{path}:{lineno}: expected 4 columns")
            uid_s, name, lang, title = parts
            uid = int(uid_s)
            if uid in names and names[uid] != name:
                raise RegistryError(
                    f"{path}:{lineno}: duplicate id {uid} with conflicting "
                    f"names {names[uid]!r} and {name!r}"
                )
            names[uid] = name
            uni = universities.setdefault(uid, University(uid, name))
            norm = normalize_title(title)
            if not norm:
                raise RegistryError(f"{path}:{lineno}: empty title")
            uni.titles.setdefault(lang, set()).add(norm)
            uni.canonical_titles.setdefault(lang, norm)

    for uni in universities.values():
        for lang, redirects in redirect_maps.items():
            owned = uni.titles.get(lang)
            if not owned:
                continue
            for alias, target in redirects.items():
                if normalize_title(target) in owned:
                    owned.add(normalize_title(alias))

    return Registry(universities)


def load_dictionary(path: str | Path, lang: str) -> MarkerDictionary:
    """Parse a dictionary file: '[person_markers]' and '[trigger_words]'
    sections, one phrase per line, '#' comments."""
    sections: dict[str, list[str]] = {"person_markers": [], "trigger_words": []}
    current: list[str] | None = None
    path = Path(path)
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in sections:
                raise DictionaryError(f"{path}:{lineno}: unknown section {name!r}")
            current = sections[name]
            continue
        if current is None:
            raise DictionaryError(f"{path}:{lineno}: phrase outside any section")
        current.append(line)

    if not sections["person_markers"] or not sections["trigger_words"]:
        raise DictionaryError(f"{path}: both sections must be non-empty")
    return MarkerDictionary(
        lang=lang,
        person_markers=tuple(sections["person_markers"]),
        trigger_words=tuple(sections["trigger_words"]),
    )


def bundled_dictionary_path(lang: str) -> Path:
    """Path of a starter dictionary shipped with the package."""
    return Path(__file__).parent / "data" / "dictionaries" / f"{lang}.txt"
