"""Person-page detection, birth-year extraction, and per-person files.

The birth year is the first standalone four-digit token found within the
first 1000 whitespace-delimited words of the raw wikitext, accepted only
if it falls in a plausible range; out-of-range tokens are skipped and
the scan continues.
"""

from __future__ import annotations

import datetime
import re
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .dump import WikiPage
from .registry import MarkerDictionary

BIRTH_YEAR_MIN = 800
WORD_WINDOW = 1000

_FOUR_DIGITS = re.compile(r"(?<!\d)\d{4}(?!\d)")


@dataclass(frozen=True)
class PersonPage:
    page: WikiPage
    birth_year: int | None
    marker_hit: str


def detect_person(page: WikiPage, dictionary: MarkerDictionary) -> str | None:
    """Return the first person marker (dictionary order) present in the
    wikitext, case-insensitively, or None."""
    haystack = page.wikitext.casefold()
    for marker in dictionary.person_markers:
        if marker.casefold() in haystack:
            return marker
    return None


def extract_birth_year(
    page: WikiPage, current_year: int | None = None
) -> int | None:
    """Scan the first WORD_WINDOW words for a plausible four-digit year."""
    if current_year is None:
        current_year = datetime.date.today().year
    words = page.wikitext.split()
    for word in words[:WORD_WINDOW]:
        for match in _FOUR_DIGITS.finditer(word):
            year = int(match.group())
            if BIRTH_YEAR_MIN <= year <= current_year:
                return year
    return None


def person_filename(page_id: int, birth_year: int | None) -> str:
    year = "" if birth_year is None else str(birth_year)
    return f"page_{page_id}_{year}.xml"


def persist_person(person: PersonPage, out_dir: str | Path) -> Path:
    """Write the page element to page_<id>_<year>.xml; idempotent."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / person_filename(person.page.page_id, person.birth_year)
    page = person.page
    redirect = (
        f'  <redirect title="{escape(page.redirect_target, {chr(34): "&quot;"})}" />\n'
        if page.redirect_target is not None
        else ""
    )
    body = (
        "<page>\n"
        f"  <title>{escape(page.title)}</title>\n"
        f"  <ns>{page.namespace}</ns>\n"
        f"  <id>{page.page_id}</id>\n"
        f"{redirect}"
        "  <revision>\n"
        f"    <text>{escape(page.wikitext)}</text>\n"
        "  </revision>\n"
        "</page>\n"
    )
    path.write_text(body, encoding="utf-8")
    return path


def load_person_file(path: str | Path, lang: str) -> PersonPage:
    """Read back a file written by persist_person."""
    import xml.etree.ElementTree as etree

    path = Path(path)
    root = etree.fromstring(path.read_text(encoding="utf-8"))
    redirect_el = root.find("redirect")
    page = WikiPage(
        title=root.findtext("title", ""),
        lang=lang,
        namespace=int(root.findtext("ns", "0")),
        redirect_target=(
            redirect_el.attrib.get("title", "") if redirect_el is not None else None
        ),
        wikitext=root.findtext("revision/text", "") or "",
        page_id=int(root.findtext("id", "-1")),
    )
    stem_year = path.stem.rsplit("_", 1)[1]
    birth_year = int(stem_year) if stem_year else None
    return PersonPage(page=page, birth_year=birth_year, marker_hit="")
