"""Pipeline orchestration: ingest, extract, views, report, audit.

Each subcommand reads the same YAML config and leaves resumable file
artifacts in the output directory.  Exit codes: 0 success, 1 partial
(some records flagged or skipped), 2 configuration error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import alumni, analytics, pageviews, persons
from .config import MODE_FIXTURE, NamedFilter, PipelineConfig, load_config
from .dump import DumpSource, collect_redirects, stream_pages
from .errors import ConfigError, WikiAlumniError
from .registry import load_dictionary, load_registry

MANIFEST_NAME = "ingest_manifest.json"
DATASET_NAME = "dataset.tsv"
ENRICHED_NAME = "dataset_enriched.tsv"
EVIDENCE_NAME = "evidence.tsv"
UNIVERSITY_VIEWS_NAME = "university_views.tsv"
LOCK_NAME = ".lock"


class OutputLock:
    """One subcommand at a time per output directory."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / LOCK_NAME

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            self.path.touch(exist_ok=False)
        except FileExistsError:
            raise WikiAlumniError(
                f"output dir is locked by another run ({self.path}); "
                "remove the lock file if that run is dead"
            )
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def _provenance_lines(config: PipelineConfig) -> list[str]:
    lines = [
        f"# config_hash: {config.config_hash}",
        f"# analysis_year: {config.analysis_year}",
    ]
    for lang in config.languages:
        lines.append(f"# dump: {lang.code} {lang.dump_date}")
    return lines


def _load_manifest(config: PipelineConfig) -> dict | None:
    path = config.output_dir / MANIFEST_NAME
    if not path.exists():
        return None
    return json.loads(path.read_text(encoding="utf-8"))


def _manifest_complete(manifest: dict | None, config: PipelineConfig) -> bool:
    if manifest is None:
        return False
    langs = manifest.get("languages", {})
    return all(
        lang.code in langs and langs[lang.code].get("status") == "ok"
        for lang in config.languages
    )


def run_ingest(config: PipelineConfig, echo=click.echo) -> int:
    """Stream every configured dump; persist person files and redirect
    maps; write the resume manifest."""
    out = config.output_dir
    manifest = _load_manifest(config)
    if _manifest_complete(manifest, config):
        echo("ingest: manifest complete, nothing to do")
        return 0

    with OutputLock(out):
        (out / "redirects").mkdir(parents=True, exist_ok=True)
        languages: dict[str, dict] = {}
        failed = False
        for lang_cfg in config.languages:
            person_dir = out / "persons" / lang_cfg.code
            person_dir.mkdir(parents=True, exist_ok=True)
            try:
                dictionary = load_dictionary(lang_cfg.dictionary, lang_cfg.code)
                source = DumpSource(
                    path=str(lang_cfg.dump),
                    lang=lang_cfg.code,
                    dump_date=lang_cfg.dump_date,
                )
                n_pages = n_persons = 0
                redirect_pages = []
                for page in stream_pages(source):
                    n_pages += 1
                    if page.is_redirect:
                        redirect_pages.append(page)
                        continue
                    if page.namespace != 0:
                        continue
                    marker = persons.detect_person(page, dictionary)
                    if marker is None:
                        continue
                    year = persons.extract_birth_year(page)
                    persons.persist_person(
                        persons.PersonPage(page, year, marker), person_dir
                    )
                    n_persons += 1
                resolved, unresolvable = collect_redirects(redirect_pages)
                redirect_path = out / "redirects" / f"{lang_cfg.code}.tsv"
                lines = [f"{a}\t{t}" for a, t in sorted(resolved.items())]
                redirect_path.write_text(
                    "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
                )
                languages[lang_cfg.code] = {
                    "status": "ok",
                    "pages": n_pages,
                    "persons": n_persons,
                    "redirects": len(resolved),
                    "unresolvable_redirects": sorted(unresolvable),
                    "dump_date": lang_cfg.dump_date,
                }
                echo(f"ingest: {lang_cfg.code}: {n_pages} pages, {n_persons} persons")
            except WikiAlumniError as exc:
                languages[lang_cfg.code] = {"status": "error", "error": str(exc)}
                echo(f"ingest: {lang_cfg.code}: FAILED: {exc}", err=True)
                failed = True
        manifest = {"languages": languages}
        (out / MANIFEST_NAME).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 1 if failed else 0


def _load_redirect_maps(config: PipelineConfig) -> dict[str, dict[str, str]]:
    maps: dict[str, dict[str, str]] = {}
    for lang_cfg in config.languages:
        path = config.output_dir / "redirects" / f"{lang_cfg.code}.tsv"
        mapping: dict[str, str] = {}
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if line:
                    alias, target = line.split("\t")
                    mapping[alias] = target
        maps[lang_cfg.code] = mapping
    return maps


def run_extract(config: PipelineConfig, echo=click.echo) -> int:
    """Match alumni sentences in every persisted person file and write
    the dataset plus the audit evidence file."""
    out = config.output_dir
    if not _manifest_complete(_load_manifest(config), config):
        raise ConfigError(
            "no complete ingest manifest found; run 'wikialumni ingest' first"
        )
    with OutputLock(out):
        registry = load_registry(config.universities_file, _load_redirect_maps(config))
        records: list[alumni.AlumniRecord] = []
        n_corrupt = 0
        for lang_cfg in config.languages:
            dictionary = load_dictionary(lang_cfg.dictionary, lang_cfg.code)
            person_dir = out / "persons" / lang_cfg.code
            for path in sorted(person_dir.glob("page_*.xml")):
                try:
                    person = persons.load_person_file(path, lang_cfg.code)
                except Exception as exc:
                    echo(f"extract: skipping corrupted {path.name}: {exc}", err=True)
                    n_corrupt += 1
                    continue
                records.extend(alumni.match_alumni(person, registry, dictionary))
        records = alumni.merge_records(records)
        alumni.write_dataset(records, out / DATASET_NAME)
        _write_evidence(records, out / EVIDENCE_NAME)
        echo(
            f"extract: {len(records)} records"
            + (f", {n_corrupt} corrupted person files skipped" if n_corrupt else "")
        )
    return 1 if n_corrupt else 0


def _write_evidence(records, path: Path) -> None:
    lines = ["university_id\tuniversity_name\tperson_link\tlang\ttrigger\tsentence"]
    for rec in alumni.sorted_records(records):
        sentence = " ".join(rec.sentence.split())
        lines.append(
            f"{rec.university_id}\t{rec.university_name}\t{rec.person_link}"
            f"\t{rec.lang}\t{rec.trigger}\t{sentence}"
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_evidence(path: Path) -> list[alumni.AlumniRecord]:
    records = []
    for line in path.read_text(encoding="utf-8").splitlines()[1:]:
        if not line:
            continue
        uid, name, person, lang, trigger, sentence = line.split("\t")
        records.append(
            alumni.AlumniRecord(
                university_id=int(uid),
                university_name=name,
                person_link=person,
                birth_year=None,
                lang=lang,
                trigger=trigger,
                sentence=sentence,
            )
        )
    return records


def build_view_client(config: PipelineConfig) -> pageviews.ViewClient:
    cache = pageviews.ViewCache(config.cache_dir)
    if config.pageview_mode == MODE_FIXTURE:
        backend = pageviews.FixtureBackend(config.fixture_views, config.fixture_langlinks)
    else:
        backend = pageviews.LiveBackend(
            rate_limiter=pageviews.RateLimiter(config.rate_limit),
            agent=config.agent,
        )
    return pageviews.ViewClient(backend, cache)


def run_views(config: PipelineConfig, echo=click.echo) -> int:
    """Resolve English counterparts, sum person views, and total each
    university's own page views."""
    out = config.output_dir
    dataset_path = out / DATASET_NAME
    if not dataset_path.exists():
        raise ConfigError("no dataset file found; run 'wikialumni extract' first")
    with OutputLock(out):
        client = build_view_client(config)
        records = alumni.read_dataset(dataset_path)
        enriched = pageviews.enrich_records(records, config.analysis_year, client)
        alumni.write_dataset(enriched, out / ENRICHED_NAME, enriched=True)

        registry = load_registry(config.universities_file, _load_redirect_maps(config))
        totals = pageviews.university_views(registry, config.analysis_year, client)
        lines = ["university_id\tuniversity_name\tyear\tviews"]
        for uid in sorted(totals):
            lines.append(
                f"{uid}\t{registry.name_of(uid)}\t{config.analysis_year}\t{totals[uid]}"
            )
        (out / UNIVERSITY_VIEWS_NAME).write_text("\n".join(lines) + "\n", encoding="utf-8")

        n_unresolved = sum(1 for rec in enriched if rec.unresolved)
        echo(f"views: {len(enriched)} records enriched, {n_unresolved} unresolved")
    return 1 if n_unresolved else 0


def run_report(config: PipelineConfig, echo=click.echo) -> int:
    """Stats per filter, rankings, correlation matrices, and the
    alumni-views vs university-page-views comparison."""
    out = config.output_dir
    enriched_path = out / ENRICHED_NAME
    if not enriched_path.exists():
        raise ConfigError("no enriched dataset found; run 'wikialumni views' first")

    reports = out / "reports"
    reports.mkdir(parents=True, exist_ok=True)
    provenance = _provenance_lines(config)
    records = alumni.read_dataset(enriched_path)
    registry = load_registry(config.universities_file, _load_redirect_maps(config))

    named_filters = list(config.filters) or [NamedFilter("full", analytics.FilterSpec())]

    stats_lines = provenance + [
        "filter\tn_alumni\tn_universities\tmean_views\tmedian_views\tstddev_views"
    ]
    rankings = []
    for nf in named_filters:
        surviving = analytics.apply_filter(records, nf.spec)
        stats = analytics.describe([r for r in surviving if r.views_total is not None])
        stats_lines.append(
            f"{nf.name}\t{stats.n_alumni}\t{stats.n_universities}"
            f"\t{_fmt(stats.mean_views)}\t{_fmt(stats.median_views)}\t{_fmt(stats.stddev_views)}"
        )
        ranking = analytics.rank_universities(records, nf.spec, name=nf.name)
        rankings.append(ranking)
        _write_ranking(ranking, registry, reports / f"ranking_{nf.name}.tsv", provenance)
    (reports / "stats.tsv").write_text("\n".join(stats_lines) + "\n", encoding="utf-8")

    for ext in config.external_rankings:
        ranking, unmapped = analytics.load_external_ranking(
            ext.file, ext.name, registry, ext.mapping
        )
        rankings.append(ranking)
        for name in unmapped:
            echo(f"report: external ranking {ext.name}: unmapped name {name!r}", err=True)

    if len(rankings) >= 2:
        matrix = analytics.correlation_matrix(rankings, config.correlation_method)
        labels = [r.name for r in rankings]
        header = "\n".join(provenance + [f"# method: {config.correlation_method}"])
        (reports / "correlation_matrix.txt").write_text(
            header + "\n" + analytics.render_matrix(matrix, labels), encoding="utf-8"
        )

    uni_views_path = out / UNIVERSITY_VIEWS_NAME
    if uni_views_path.exists():
        _write_alumni_vs_university(
            records, uni_views_path, registry, reports, provenance
        )
    echo(f"report: wrote {reports}")
    return 0


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def _write_ranking(ranking, registry, path: Path, provenance: list[str]) -> None:
    lines = provenance + ["rank\tuniversity_id\tuniversity_name\tscore"]
    for pos, (uid, score) in enumerate(ranking.entries, 1):
        lines.append(f"{pos}\t{uid}\t{registry.name_of(uid)}\t{score:.0f}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_alumni_vs_university(records, uni_views_path, registry, reports, provenance):
    totals: dict[int, int] = {}
    for line in uni_views_path.read_text(encoding="utf-8").splitlines()[1:]:
        if line:
            uid, _name, _year, views = line.split("\t")
            totals[int(uid)] = int(views)
    names = {uid: registry.name_of(uid) for uid in totals}
    uni_ranking = analytics.ranking_from_scores(
        {u: float(v) for u, v in totals.items()},
        analytics.SCORE_UNIVERSITY_PAGE,
        names,
        name="university_pages",
    )
    alumni_ranking = analytics.rank_universities(records, name="alumni_views")
    lines = list(provenance)
    for method in (analytics.METHOD_SPEARMAN, analytics.METHOD_PEARSON):
        try:
            result = analytics.correlate(alumni_ranking, uni_ranking, method)
            lines.append(
                f"{method}\t{result.coefficient:.2f}\tn_common={result.n_common}"
            )
        except analytics.CorrelationError as exc:
            lines.append(f"{method}\tn/a\t{exc}")
    (reports / "alumni_vs_university.txt").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )


def run_audit(config: PipelineConfig, echo=click.echo) -> int:
    """Seeded uniform sample of records with their evidence sentences."""
    out = config.output_dir
    evidence_path = out / EVIDENCE_NAME
    if not evidence_path.exists():
        raise ConfigError("no evidence file found; run 'wikialumni extract' first")
    records = _read_evidence(evidence_path)
    sample = analytics.audit_sample(records, config.audit_rate, config.audit_seed)
    path = analytics.write_audit_file(sample, out / "audit_sample.tsv")
    echo(f"audit: sampled {len(sample)}/{len(records)} records into {path}")
    return 0


def _run(step, config_path: str) -> None:
    try:
        config = load_config(config_path)
        code = step(config)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except WikiAlumniError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    sys.exit(code)


@click.group()
def main():
    """Extract university-alumni relations from Wikipedia dumps and rank
    universities by alumni pageviews."""


def _subcommand(name, step, help_text):
    @main.command(name=name, help=help_text)
    @click.option(
        "--config", "-c", "config_path", required=True, type=click.Path(), help="YAML config file"
    )
    def cmd(config_path):
        _run(step, config_path)

    return cmd


_subcommand("ingest", run_ingest, "Stream dumps into person files and redirect maps.")
_subcommand("extract", run_extract, "Match alumni sentences and write the dataset.")
_subcommand("views", run_views, "Attach pageview totals to records and universities.")
_subcommand("report", run_report, "Emit stats, rankings, and correlation matrices.")
_subcommand("audit", run_audit, "Export a seeded sample for manual review.")


if __name__ == "__main__":
    main()
