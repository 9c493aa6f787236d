"""Pageview totals and cross-language resolution.

Two backends share one client interface: a live backend talking to the
Wikimedia REST/action APIs (rate limited, retried) and a hermetic
fixture backend reading local tab-separated files.  All lookups go
through an on-disk cache keyed by (lang, title, year); with a warm cache
a re-run issues zero backend requests.
"""

from __future__ import annotations

import json
import time
import urllib.parse
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Protocol

from .alumni import AlumniRecord
from .errors import FetchError
from .registry import Registry

SOURCE_LIVE = "live_api"
SOURCE_FIXTURE = "fixture"
SOURCE_CACHE = "cache"

PAGEVIEWS_URL = (
    "https://wikimedia.org/api/rest_v1/metrics/pageviews/per-article/"
    "{lang}.wikipedia.org/{agent}/{title}/monthly/{start}/{end}"
)
LANGLINKS_URL = "https://{lang}.wikipedia.org/w/api.php"


@dataclass(frozen=True)
class PageViewStat:
    title: str
    lang: str
    year: int
    total: int
    source: str
    missing: bool = False  # no data for the page (404-equivalent)


@dataclass(frozen=True)
class CrossLangLink:
    title_national: str
    lang_national: str
    title_en: str | None


class Backend(Protocol):
    def get_views(self, title: str, lang: str, year: int) -> tuple[int, bool]:
        """Return (total, missing)."""

    def get_english_title(self, title: str, lang: str) -> str | None: ...


class RateLimiter:
    """Simple interval limiter; clock and sleep are injectable for tests."""

    def __init__(self, requests_per_second: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 1.0 / requests_per_second if requests_per_second > 0 else 0.0
        self._clock = clock
        self._sleep = sleep
        self._last: float | None = None

    def wait(self) -> None:
        now = self._clock()
        if self._last is not None:
            due = self._last + self.interval
            if now < due:
                self._sleep(due - now)
                now = self._clock()
        self._last = now


class FixtureBackend:
    """Offline backend over local fixture files; exercises no network.

    views file rows: lang<TAB>title<TAB>year<TAB>total
    langlinks file rows: lang<TAB>title<TAB>english_title
    Either path may be None (empty fixture).
    """

    def __init__(self, views_file: str | Path | None, langlinks_file: str | Path | None = None):
        self.request_count = 0
        self._views: dict[tuple[str, str, int], int] = {}
        self._links: dict[tuple[str, str], str] = {}
        if views_file is not None:
            for parts in _read_tsv(views_file, 4):
                lang, title, year, total = parts
                self._views[(lang, title, int(year))] = int(total)
        if langlinks_file is not None:
            for parts in _read_tsv(langlinks_file, 3):
                lang, title, title_en = parts
                self._links[(lang, title)] = title_en

    def get_views(self, title: str, lang: str, year: int) -> tuple[int, bool]:
        self.request_count += 1
        key = (lang, title, year)
        if key in self._views:
            return self._views[key], False
        return 0, True

    def get_english_title(self, title: str, lang: str) -> str | None:
        self.request_count += 1
        return self._links.get((lang, title))


def _read_tsv(path: str | Path, n_cols: int):
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != n_cols:
            raise ValueError(f"{path}:{lineno}: expected {n_cols} columns")
        yield parts


class LiveBackend:
    """Wikimedia API backend with retries and a shared rate limiter.

    The HTTP session is injectable so tests can run against a fake
    transport; by default a requests.Session is created lazily.
    """

    def __init__(
        self,
        rate_limiter: RateLimiter | None = None,
        session=None,
        retries: int = 3,
        backoff_base: float = 1.0,
        agent: str = "all-agents",
        sleep=time.sleep,
    ):
        self.rate_limiter = rate_limiter or RateLimiter(1.0)
        self._session = session
        self.retries = retries
        self.backoff_base = backoff_base
        self.agent = agent
        self._sleep = sleep
        self.request_count = 0

    @property
    def session(self):
        if self._session is None:
            import requests

            self._session = requests.Session()
        return self._session

    def _get(self, url: str, params=None):
        last_exc = None
        for attempt in range(self.retries):
            self.rate_limiter.wait()
            self.request_count += 1
            try:
                resp = self.session.get(url, params=params, timeout=30)
            except Exception as exc:  # transport failure
                last_exc = exc
            else:
                if resp.status_code == 404:
                    return None
                if resp.status_code < 500:
                    resp.raise_for_status()
                    return resp.json()
                last_exc = FetchError(f"HTTP {resp.status_code} from {url}")
            if attempt + 1 < self.retries:
                self._sleep(self.backoff_base * 2**attempt)
        raise FetchError(f"request failed after {self.retries} attempts: {url}") from last_exc

    def get_views(self, title: str, lang: str, year: int) -> tuple[int, bool]:
        url = PAGEVIEWS_URL.format(
            lang=lang,
            agent=self.agent,
            title=urllib.parse.quote(title.replace(" ", "_"), safe=""),
            start=f"{year}010100",
            end=f"{year}123100",
        )
        payload = self._get(url)
        if payload is None:
            return 0, True
        return sum(item["views"] for item in payload.get("items", [])), False

    def get_english_title(self, title: str, lang: str) -> str | None:
        payload = self._get(
            LANGLINKS_URL.format(lang=lang),
            params={
                "action": "query",
                "prop": "langlinks",
                "titles": title,
                "lllang": "en",
                "format": "json",
                "formatversion": "2",
            },
        )
        if payload is None:
            return None
        for page in payload.get("query", {}).get("pages", []):
            for link in page.get("langlinks", []):
                return link.get("title")
        return None


class ViewCache:
    """On-disk key-value cache, one JSON file per entry."""

    def __init__(self, cache_dir: str | Path):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _path(self, kind: str, lang: str, title: str, year: int | None) -> Path:
        quoted = urllib.parse.quote(title, safe="")
        suffix = f"__{year}" if year is not None else ""
        return self.dir / f"{kind}__{lang}__{quoted}{suffix}.json"

    def get(self, kind: str, lang: str, title: str, year: int | None = None):
        path = self._path(kind, lang, title, year)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return None

    def put(self, kind: str, lang: str, title: str, year: int | None, value) -> None:
        path = self._path(kind, lang, title, year)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(value), encoding="utf-8")
        tmp.replace(path)


class ViewClient:
    """Backend + cache front door used by the pipeline."""

    def __init__(self, backend: Backend, cache: ViewCache | None = None):
        self.backend = backend
        self.cache = cache
        self.source = SOURCE_FIXTURE if isinstance(backend, FixtureBackend) else SOURCE_LIVE

    def fetch_views(self, title: str, lang: str, year: int) -> PageViewStat:
        if self.cache is not None:
            hit = self.cache.get("views", lang, title, year)
            if hit is not None:
                return PageViewStat(
                    title=title, lang=lang, year=year,
                    total=hit["total"], source=SOURCE_CACHE, missing=hit["missing"],
                )
        total, missing = self.backend.get_views(title, lang, year)
        if self.cache is not None:
            self.cache.put("views", lang, title, year, {"total": total, "missing": missing})
        return PageViewStat(
            title=title, lang=lang, year=year, total=total, source=self.source, missing=missing
        )

    def resolve_english(self, title: str, lang: str) -> CrossLangLink:
        if lang == "en":
            raise ValueError("resolve_english is for non-English records")
        if self.cache is not None:
            hit = self.cache.get("enlink", lang, title)
            if hit is not None:
                return CrossLangLink(title, lang, hit["title_en"])
        title_en = self.backend.get_english_title(title, lang)
        if self.cache is not None:
            self.cache.put("enlink", lang, title, None, {"title_en": title_en})
        return CrossLangLink(title, lang, title_en)


def enrich_records(
    records: Iterable[AlumniRecord], year: int, client: ViewClient
) -> list[AlumniRecord]:
    """Fill person_link_en and views_total (national + English counts).

    Records whose lookups fail outright are flagged unresolved with
    views_total left empty; the pipeline continues.
    """
    out = []
    for rec in records:
        try:
            title_en = rec.person_link_en
            if rec.lang != "en" and title_en is None:
                title_en = client.resolve_english(rec.person_link, rec.lang).title_en
            total = client.fetch_views(rec.person_link, rec.lang, year).total
            if rec.lang != "en" and title_en and title_en != rec.person_link:
                total += client.fetch_views(title_en, "en", year).total
            out.append(replace(rec, person_link_en=title_en, views_total=total))
        except FetchError:
            out.append(replace(rec, unresolved=True, views_total=None))
    return out


def university_views(
    registry: Registry, year: int, client: ViewClient
) -> dict[int, int]:
    """Per university, the view sum over its canonical title in each
    language (aliases excluded)."""
    totals: dict[int, int] = {}
    for uid, uni in sorted(registry.universities.items()):
        total = 0
        for lang, title in sorted(uni.canonical_titles.items()):
            total += client.fetch_views(title, lang, year).total
        totals[uid] = total
    return totals
