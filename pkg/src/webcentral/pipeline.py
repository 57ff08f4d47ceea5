"""Per-country scoring, regional aggregation, and report emission.

Wires annotated website records into the scalar metrics: distributions and
centralization scores per country and layer, descending rankings, regional
mean/variance summaries, insularity tables (with the com-to-US rule at the
TLD layer), correlation analyses against provider-class shares, and
byte-stable CSV/JSON report bundles.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import emd
from .classify import ProviderClass
from .ingest import CountryTable, WebsiteRecord
from .metrics import (
    CentralizationScore,
    Layer,
    ProviderDistribution,
    UsageCurve,
    centralization_score,
    concentration_band,
    correlation_band,
    insularity,
    pearson,
    tld_insularity,
)

__all__ = [
    "LAYER_KEY_FIELDS",
    "LayerScores",
    "RegionalSummary",
    "InsularityTable",
    "CorrelationRow",
    "ReportBundle",
    "build_distribution",
    "score_all",
    "regional_summary",
    "usage_curves",
    "insularity_report",
    "class_shares",
    "correlation_report",
    "oracle_check",
    "emit_report",
]

LAYER_KEY_FIELDS = {
    Layer.HOSTING: "hosting_org",
    Layer.DNS: "dns_org",
    Layer.TLD: "tld",
    Layer.CA: "ca_owner",
}

# fixed layer order for reports
LAYER_ORDER = (Layer.HOSTING, Layer.DNS, Layer.TLD, Layer.CA)


@dataclass(frozen=True)
class LayerScores:
    layer: Layer
    scores: Mapping[str, CentralizationScore]
    rankings: tuple[str, ...]
    exclusions: tuple[str, ...]
    unknown_counts: Mapping[str, int]


@dataclass(frozen=True)
class RegionalSummary:
    grouping: str
    groups: Mapping[str, tuple[float, float, int]]  # mean, variance, count


@dataclass(frozen=True)
class InsularityTable:
    fractions: Mapping[str, Mapping[str, float | None]]  # layer -> country -> value
    rankings: Mapping[str, tuple[str, ...]]


@dataclass(frozen=True)
class CorrelationRow:
    pair: str
    rho: float | None
    band: str


@dataclass
class ReportBundle:
    scores: dict[str, LayerScores] = field(default_factory=dict)
    regional: dict[str, dict[str, RegionalSummary]] = field(default_factory=dict)
    insularity: InsularityTable | None = None
    correlations: dict[str, list[CorrelationRow]] = field(default_factory=dict)
    continents: dict[str, str] = field(default_factory=dict)
    annotation_stats: dict | None = None


def build_distribution(
    records: Sequence[WebsiteRecord], country: str, layer: Layer
) -> tuple[ProviderDistribution, int]:
    """Provider counts for one country and layer, plus the unknown count.

    Records whose layer key is unresolved are excluded from the counts and
    returned as the second element, so callers can verify counts + unknown
    equals the country's annotated record total.
    """
    key_field = LAYER_KEY_FIELDS[layer]
    counts: dict[str, int] = {}
    unknown = 0
    for record in records:
        if record.country != country:
            continue
        key = getattr(record, key_field)
        if key is None:
            unknown += 1
        else:
            counts[key] = counts.get(key, 0) + 1
    if not counts:
        raise ValueError(f"no usable records for {country}/{layer.value}")
    return ProviderDistribution(country=country, layer=layer, counts=counts), unknown


def score_all(
    records: Sequence[WebsiteRecord], countries: Iterable[str], layer: Layer
) -> LayerScores:
    """Centralization score per country with a descending ranking.

    Countries with zero usable records are listed in ``exclusions`` rather
    than dropped silently. Ranking ties break by country code.
    """
    scores: dict[str, CentralizationScore] = {}
    unknown_counts: dict[str, int] = {}
    exclusions: list[str] = []
    for country in sorted(set(countries)):
        try:
            dist, unknown = build_distribution(records, country, layer)
        except ValueError:
            exclusions.append(country)
            continue
        scores[country] = centralization_score(dist)
        unknown_counts[country] = unknown
    rankings = tuple(
        sorted(scores, key=lambda c: (-scores[c].value, c))
    )
    return LayerScores(
        layer=layer,
        scores=scores,
        rankings=rankings,
        exclusions=tuple(exclusions),
        unknown_counts=unknown_counts,
    )


def regional_summary(
    scores: LayerScores, country_info: CountryTable, grouping: str
) -> RegionalSummary:
    """Mean and population variance of scores per continent or subregion."""
    if grouping not in ("continent", "subregion"):
        raise ValueError(f"grouping must be 'continent' or 'subregion', not {grouping!r}")
    values: dict[str, list[float]] = {}
    for country, score in scores.scores.items():
        info = country_info.get(country)
        if info is None:
            raise ValueError(f"unknown country code {country!r}")
        group = info.continent if grouping == "continent" else info.subregion
        values.setdefault(group, []).append(score.value)
    groups = {}
    for group, xs in values.items():
        mean = math.fsum(xs) / len(xs)
        variance = math.fsum((x - mean) ** 2 for x in xs) / len(xs)
        groups[group] = (mean, variance, len(xs))
    return RegionalSummary(grouping=grouping, groups=groups)


def usage_curves(
    records: Sequence[WebsiteRecord], countries: Sequence[str], layer: Layer
) -> list[UsageCurve]:
    """Per-provider usage curves across the country set.

    A provider's percentage in a country uses that country's successfully
    annotated site count for the layer as the denominator; countries where
    the provider is absent (or that have no usable sites at all) contribute
    zero.
    """
    key_field = LAYER_KEY_FIELDS[layer]
    ordered_countries = sorted(set(countries))
    per_country: dict[str, dict[str, int]] = {c: {} for c in ordered_countries}
    totals: dict[str, int] = {c: 0 for c in ordered_countries}
    for record in records:
        if record.country not in per_country:
            continue
        key = getattr(record, key_field)
        if key is None:
            continue
        per_country[record.country][key] = per_country[record.country].get(key, 0) + 1
        totals[record.country] += 1
    providers = sorted({p for counts in per_country.values() for p in counts})
    curves = []
    for provider in providers:
        percentages = [
            100.0 * per_country[c].get(provider, 0) / totals[c] if totals[c] else 0.0
            for c in ordered_countries
        ]
        curves.append(UsageCurve.from_percentages(provider, percentages))
    return curves


def insularity_report(
    records: Sequence[WebsiteRecord],
    countries: Iterable[str],
    layers: Sequence[Layer],
    country_table: CountryTable,
) -> InsularityTable:
    """Per-country insularity for each layer, with descending rankings.

    Address layers compare provider HQ to the country; the TLD layer maps
    TLDs through the ccTLD table (com counts as US). Countries without
    records get a None cell instead of aborting the table.
    """
    cc_map = country_table.cc_tld_map()
    by_country: dict[str, list[WebsiteRecord]] = {}
    for record in records:
        by_country.setdefault(record.country, []).append(record)
    fractions: dict[str, dict[str, float | None]] = {}
    rankings: dict[str, tuple[str, ...]] = {}
    for layer in layers:
        cells: dict[str, float | None] = {}
        for country in sorted(set(countries)):
            rows = by_country.get(country, [])
            try:
                if layer is Layer.TLD:
                    cells[country] = tld_insularity(rows, country, cc_map)
                else:
                    cells[country] = insularity(rows, country, layer)
            except ValueError:
                cells[country] = None
        fractions[layer.value] = cells
        ranked = [c for c, v in cells.items() if v is not None]
        rankings[layer.value] = tuple(
            sorted(ranked, key=lambda c: (-cells[c], c))
        )
    return InsularityTable(fractions=fractions, rankings=rankings)


def class_shares(
    records: Sequence[WebsiteRecord],
    countries: Sequence[str],
    layer: Layer,
    classes: Mapping[str, ProviderClass],
) -> dict[str, dict[str, float]]:
    """Share of each country's attributed sites served by each provider class."""
    key_field = LAYER_KEY_FIELDS[layer]
    ordered = sorted(set(countries))
    shares: dict[str, dict[str, float]] = {
        cls.value: {c: 0.0 for c in ordered} for cls in ProviderClass
    }
    totals = {c: 0 for c in ordered}
    tallies: dict[str, dict[str, int]] = {cls.value: {c: 0 for c in ordered} for cls in ProviderClass}
    for record in records:
        if record.country not in totals:
            continue
        key = getattr(record, key_field)
        if key is None or key not in classes:
            continue
        totals[record.country] += 1
        tallies[classes[key].value][record.country] += 1
    for cls, per_country in tallies.items():
        for country, n in per_country.items():
            if totals[country]:
                shares[cls][country] = n / totals[country]
    return shares


def correlation_report(
    scores: LayerScores,
    records: Sequence[WebsiteRecord],
    classes: Mapping[str, ProviderClass],
    country_table: CountryTable,
) -> list[CorrelationRow]:
    """Correlate per-country scores with class shares and insularity.

    One row per provider class that appears in the data plus one for
    insularity at the same layer; degenerate series are marked instead of
    raising.
    """
    ordered = list(scores.rankings)
    if not ordered:
        return []
    score_series = [scores.scores[c].value for c in ordered]
    rows: list[CorrelationRow] = []
    shares = class_shares(records, ordered, scores.layer, classes)
    used_classes = sorted({cls.value for cls in classes.values()})
    for cls in used_classes:
        series = [shares[cls][c] for c in ordered]
        rows.append(_correlate(f"score~share[{cls}]", series, score_series))
    insul = insularity_report(records, ordered, [scores.layer], country_table)
    cells = insul.fractions[scores.layer.value]
    pairs = [(cells[c], s) for c, s in zip(ordered, score_series) if cells[c] is not None]
    rows.append(
        _correlate(
            "score~insularity",
            [p[0] for p in pairs],
            [p[1] for p in pairs],
        )
    )
    return rows


def _correlate(pair: str, x: Sequence[float], y: Sequence[float]) -> CorrelationRow:
    try:
        rho = pearson(x, y)
    except ValueError:
        return CorrelationRow(pair=pair, rho=None, band="degenerate")
    return CorrelationRow(pair=pair, rho=rho, band=correlation_band(rho).value)


def oracle_check(
    records: Sequence[WebsiteRecord],
    scores: LayerScores,
    *,
    sample: int = 0,
    seed: int = 0,
    tolerance: float = 1e-9,
    max_cells: int = emd.DEFAULT_MAX_CELLS,
) -> list[tuple[str, float, float]]:
    """Recompute scores through the transport solver; return mismatches.

    ``sample`` limits the check to a deterministic pseudo-random subset of
    countries (0 checks everything).
    """
    import random

    countries = list(scores.scores)
    if sample and sample < len(countries):
        countries = random.Random(seed).sample(sorted(countries), sample)
    mismatches = []
    for country in sorted(countries):
        dist, _ = build_distribution(records, country, scores.layer)
        via_emd = emd.emd_centralization(dist, max_cells=max_cells)
        closed_form = scores.scores[country].value
        if abs(via_emd - closed_form) > tolerance:
            mismatches.append((country, closed_form, via_emd))
    return mismatches


def emit_report(
    bundle: ReportBundle, fmt: str, destination: str | Path, *, band_column: bool = False
) -> list[Path]:
    """Write the report bundle; returns the files written.

    ``json`` produces one document with full-precision numbers; ``csv``
    produces one scores file per layer (4 decimal places, appendix-style
    rank/country/continent/score rows with an exclusions section when any
    country was excluded) plus insularity, regional, and correlation
    tables. ``band_column`` appends the DOJ interpretation band to CSV
    score rows. Identical bundles serialize to identical bytes.
    """
    destination = Path(destination)
    if fmt == "json":
        if destination.suffix == ".json":
            path = destination
            path.parent.mkdir(parents=True, exist_ok=True)
        else:
            destination.mkdir(parents=True, exist_ok=True)
            path = destination / "report.json"
        path.write_text(_bundle_json(bundle), encoding="utf-8")
        return [path]
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")

    destination.mkdir(parents=True, exist_ok=True)
    written = []
    for layer_name, layer_scores in sorted(bundle.scores.items()):
        lines = ["rank,country,continent,score,band" if band_column
                 else "rank,country,continent,score"]
        for rank, country in enumerate(layer_scores.rankings, 1):
            continent = bundle.continents.get(country, "")
            score = layer_scores.scores[country]
            row = f"{rank},{country},{continent},{score.value:.4f}"
            if band_column:
                row += f",{concentration_band(score).value}"
            lines.append(row)
        if layer_scores.exclusions:
            lines.append("")
            lines.append("# excluded: no usable records")
            lines.extend(layer_scores.exclusions)
        path = destination / f"scores_{layer_name}.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    if bundle.insularity is not None:
        lines = ["layer,rank,country,insularity"]
        for layer_name in sorted(bundle.insularity.rankings):
            for rank, country in enumerate(bundle.insularity.rankings[layer_name], 1):
                value = bundle.insularity.fractions[layer_name][country]
                lines.append(f"{layer_name},{rank},{country},{value:.4f}")
        path = destination / "insularity.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    if bundle.regional:
        lines = ["layer,grouping,group,mean,variance,count"]
        for layer_name in sorted(bundle.regional):
            for grouping in sorted(bundle.regional[layer_name]):
                summary = bundle.regional[layer_name][grouping]
                for group in sorted(summary.groups):
                    mean, var, count = summary.groups[group]
                    lines.append(
                        f"{layer_name},{grouping},{group},{mean:.4f},{var:.4f},{count}"
                    )
        path = destination / "regional.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)

    if bundle.correlations:
        lines = ["layer,pair,rho,band"]
        for layer_name in sorted(bundle.correlations):
            for row in bundle.correlations[layer_name]:
                rho_text = "" if row.rho is None else f"{row.rho:.4f}"
                lines.append(f"{layer_name},{row.pair},{rho_text},{row.band}")
        path = destination / "correlations.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(path)
    return written


def _bundle_json(bundle: ReportBundle) -> str:
    doc: dict = {"scores": {}, "regional": {}, "correlations": {}}
    for layer_name, layer_scores in bundle.scores.items():
        doc["scores"][layer_name] = {
            "scores": {
                c: {
                    "value": s.value,
                    "total": s.total,
                    "band": concentration_band(s).value,
                }
                for c, s in layer_scores.scores.items()
            },
            "rankings": list(layer_scores.rankings),
            "exclusions": list(layer_scores.exclusions),
            "unknown_counts": dict(layer_scores.unknown_counts),
        }
    for layer_name, summaries in bundle.regional.items():
        doc["regional"][layer_name] = {
            grouping: {
                group: {"mean": mean, "variance": var, "count": count}
                for group, (mean, var, count) in summary.groups.items()
            }
            for grouping, summary in summaries.items()
        }
    if bundle.insularity is not None:
        doc["insularity"] = {
            "fractions": {
                layer: dict(cells)
                for layer, cells in bundle.insularity.fractions.items()
            },
            "rankings": {
                layer: list(ranked)
                for layer, ranked in bundle.insularity.rankings.items()
            },
        }
    for layer_name, rows in bundle.correlations.items():
        doc["correlations"][layer_name] = [
            {"pair": row.pair, "rho": row.rho, "band": row.band} for row in rows
        ]
    if bundle.continents:
        doc["continents"] = dict(bundle.continents)
    if bundle.annotation_stats is not None:
        doc["annotation_stats"] = bundle.annotation_stats
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
