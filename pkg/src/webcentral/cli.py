"""Batch command line: collect, annotate, score, classify, report, oracle-check.

Option precedence is flags, then WEBCENTRAL_* environment variables, then a
key-value manifest file, then built-in defaults. Subcommands write data to
files or standard output and diagnostics to standard error; exit status is
0 only when no errors occurred.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import collector, pipeline
from .classify import ClassRules, classify_providers, load_class_rules, write_cluster_csv
from .ingest import (
    AnnotationConfig,
    IngestError,
    WebsiteRecord,
    annotate,
    load_anycast,
    load_as2org,
    load_ca_owners,
    load_countries,
    load_geo,
    load_pfx2as,
    parse_measurements,
    parse_toplist,
)
from .metrics import Layer

ENV_PREFIX = "WEBCENTRAL_"

# option names that may come from a manifest file or the environment
_SETTABLE = {
    "resolver",
    "tls_port",
    "timeout_ms",
    "max_inflight",
    "retries",
    "jobs",
    "domains",
    "toplist",
    "measurements",
    "pfx2as",
    "as2org",
    "geo",
    "anycast",
    "ca_owners",
    "countries",
    "records",
    "rules",
    "stats",
    "out",
    "format",
    "layers",
    "seed",
}

_INPUT_PATH_KEYS = {
    "domains",
    "toplist",
    "measurements",
    "pfx2as",
    "as2org",
    "geo",
    "anycast",
    "ca_owners",
    "countries",
    "records",
    "rules",
}


class CliError(Exception):
    pass


def _load_manifest(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _SETTABLE:
            raise CliError(f"{path}:{lineno}: unknown manifest key {key!r}")
        values[key] = value.strip()
    return values


def _resolve_options(args: argparse.Namespace) -> None:
    """Fill unset options from the environment, then the manifest."""
    manifest = _load_manifest(args.manifest) if getattr(args, "manifest", None) else {}
    for key in _SETTABLE:
        if getattr(args, key, None) is not None:
            continue
        if not hasattr(args, key):
            continue
        env_value = os.environ.get(ENV_PREFIX + key.upper())
        value = env_value if env_value is not None else manifest.get(key)
        if value is not None:
            setattr(args, key, value)
    for key in _INPUT_PATH_KEYS:
        value = getattr(args, key, None)
        if value is not None and not Path(value).exists():
            raise CliError(f"input not found: {value}")


def _positive_int(name: str, value) -> int:
    number = int(value)
    if number < 1:
        raise CliError(f"{name} must be a positive integer, got {value}")
    return number


def _parse_layers(text: str | None) -> list[Layer]:
    if not text:
        return list(pipeline.LAYER_ORDER)
    layers = []
    for token in text.split(","):
        token = token.strip().lower()
        try:
            layers.append(Layer(token))
        except ValueError:
            raise CliError(f"unknown layer {token!r}") from None
    return layers


def _read_records(path: str) -> list[WebsiteRecord]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                records.append(WebsiteRecord.from_json(line))
    return records


def _write_stats(stats: dict, destination: str | None) -> None:
    text = json.dumps(stats, sort_keys=True, indent=2) + "\n"
    if destination:
        Path(destination).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_collect(args: argparse.Namespace) -> int:
    _resolve_options(args)
    if args.resolver is None:
        raise CliError("--resolver is required (or set WEBCENTRAL_RESOLVER)")
    domains = [
        line.strip()
        for line in Path(args.domains).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    max_inflight = args.max_inflight if args.max_inflight is not None else args.jobs
    config = collector.ProbeConfig(
        resolver=args.resolver,
        tls_port=int(args.tls_port) if args.tls_port is not None else 443,
        timeout_ms=_positive_int("--timeout-ms", args.timeout_ms or 3000),
        max_inflight=_positive_int(
            "--max-inflight", max_inflight if max_inflight is not None else os.cpu_count() or 1
        ),
        retries=int(args.retries) if args.retries is not None else 2,
        probe_tls=not args.no_tls,
        probe_ipv6=args.ipv6,
        fixed_timestamp=args.fixed_ts,
    )
    with open(args.out, "w", encoding="utf-8") as sink:
        stats = collector.collect(domains, config, sink)
    _write_stats(stats.to_dict(), args.stats)
    return 0


def cmd_annotate(args: argparse.Namespace) -> int:
    _resolve_options(args)
    for option in ("toplist", "measurements", "pfx2as", "as2org", "geo",
                   "anycast", "ca_owners", "countries", "out"):
        if getattr(args, option) is None:
            raise CliError(f"--{option.replace('_', '-')} is required")
    countries = load_countries(args.countries)
    rate = float(args.max_error_rate)
    entries, toplist_report = parse_toplist(args.toplist, countries, max_error_rate=rate)
    measurements, measurement_report = parse_measurements(args.measurements, max_error_rate=rate)
    prefixes, pfx_report = load_pfx2as(args.pfx2as, max_error_rate=rate)
    orgs, org_report = load_as2org(args.as2org, max_error_rate=rate)
    geo = load_geo(args.geo)
    anycast = load_anycast(args.anycast)
    ca_owners, ca_report = load_ca_owners(args.ca_owners, max_error_rate=rate)
    for report in (toplist_report, measurement_report, pfx_report, org_report, ca_report):
        for lineno, message in report.errors:
            print(f"{report.source}:{lineno}: {message}", file=sys.stderr)

    config = AnnotationConfig(
        layers=frozenset(layer.value for layer in _parse_layers(args.layers)),
        multi_ip=args.multi_ip,
    )
    records, stats = annotate(
        entries,
        measurements,
        prefixes=prefixes,
        orgs=orgs,
        geo=geo,
        anycast=anycast,
        ca_owners=ca_owners,
        config=config,
    )
    records.sort(key=lambda r: (r.country, r.domain))
    with open(args.out, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(record.to_json() + "\n")
    _write_stats(stats.to_dict(), args.stats)
    return 0


def _score_layers(records, countries, layers):
    scores = {}
    for layer in layers:
        scores[layer.value] = pipeline.score_all(records, countries, layer)
    return scores


def cmd_score(args: argparse.Namespace) -> int:
    _resolve_options(args)
    for option in ("records", "countries", "out"):
        if getattr(args, option) is None:
            raise CliError(f"--{option} is required")
    records = _read_records(args.records)
    country_table = load_countries(args.countries)
    layers = _parse_layers(args.layers)
    scores = _score_layers(records, list(country_table), layers)
    if args.oracle_check:
        failures = _run_oracle_check(records, scores, args)
        if failures:
            return 1
    bundle = pipeline.ReportBundle(
        scores=scores,
        continents={code: country_table.get(code).continent for code in country_table},
    )
    written = pipeline.emit_report(bundle, args.format, args.out, band_column=args.band)
    for path in written:
        print(path, file=sys.stderr)
    return 0


def _run_oracle_check(records, scores, args) -> list[str]:
    failures = []
    for layer_name, layer_scores in sorted(scores.items()):
        mismatches = pipeline.oracle_check(
            records,
            layer_scores,
            sample=int(args.sample or 0),
            seed=int(args.seed or 0),
            tolerance=float(args.tolerance),
        )
        for country, closed_form, via_emd in mismatches:
            failures.append(layer_name)
            print(
                f"oracle mismatch: {layer_name}/{country}: closed-form "
                f"{closed_form!r} vs transport {via_emd!r}",
                file=sys.stderr,
            )
    return failures


def cmd_oracle_check(args: argparse.Namespace) -> int:
    _resolve_options(args)
    for option in ("records", "countries"):
        if getattr(args, option) is None:
            raise CliError(f"--{option} is required")
    records = _read_records(args.records)
    country_table = load_countries(args.countries)
    layers = _parse_layers(args.layers)
    scores = _score_layers(records, list(country_table), layers)
    failures = _run_oracle_check(records, scores, args)
    if failures:
        return 1
    total = sum(len(s.scores) for s in scores.values())
    print(f"oracle check passed: {total} scores across {len(scores)} layers",
          file=sys.stderr)
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    _resolve_options(args)
    for option in ("records", "countries", "out"):
        if getattr(args, option) is None:
            raise CliError(f"--{option} is required")
    records = _read_records(args.records)
    country_table = load_countries(args.countries)
    layer = Layer(args.layer)
    curves = pipeline.usage_curves(records, list(country_table), layer)
    from .classify import features_from_curve

    features = [features_from_curve(curve) for curve in curves]
    if args.dump_features:
        lines = ["provider,usage,endemicity_ratio"]
        for f in sorted(features, key=lambda f: f.provider):
            lines.append(f"{f.provider},{f.usage!r},{f.endemicity_ratio!r}")
        Path(args.dump_features).write_text("\n".join(lines) + "\n", encoding="utf-8")
    rules = load_class_rules(args.rules) if args.rules else ClassRules()
    outcome = classify_providers(
        features,
        rules,
        transform=args.transform,
        damping=float(args.damping),
        preference=args.preference if args.preference == "median" else float(args.preference),
        max_iter=int(args.max_iter),
        convergence_iter=int(args.convergence_iter),
    )
    write_cluster_csv(outcome, args.out)
    if not outcome.clusters.converged:
        print("warning: affinity propagation did not converge", file=sys.stderr)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    _resolve_options(args)
    for option in ("records", "countries", "out"):
        if getattr(args, option) is None:
            raise CliError(f"--{option} is required")
    records = _read_records(args.records)
    country_table = load_countries(args.countries)
    layers = _parse_layers(args.layers)
    rules = load_class_rules(args.rules) if args.rules else ClassRules()
    country_codes = list(country_table)
    scores = _score_layers(records, country_codes, layers)
    regional = {
        layer_name: {
            grouping: pipeline.regional_summary(layer_scores, country_table, grouping)
            for grouping in ("continent", "subregion")
        }
        for layer_name, layer_scores in scores.items()
    }
    correlations = {}
    from .classify import features_from_curve

    for layer in layers:
        curves = pipeline.usage_curves(records, country_codes, layer)
        features = [features_from_curve(curve) for curve in curves]
        outcome = classify_providers(features, rules)
        correlations[layer.value] = pipeline.correlation_report(
            scores[layer.value], records, outcome.classes, country_table
        )
    stats = None
    if args.stats:
        stats = json.loads(Path(args.stats).read_text(encoding="utf-8"))
    bundle = pipeline.ReportBundle(
        scores=scores,
        regional=regional,
        insularity=pipeline.insularity_report(records, country_codes, layers, country_table),
        correlations=correlations,
        continents={code: country_table.get(code).continent for code in country_table},
        annotation_stats=stats,
    )
    written = pipeline.emit_report(bundle, args.format, args.out, band_column=args.band)
    for path in written:
        print(path, file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="webcentral",
        description="Centralization and regionalization metrics over "
        "per-country website datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_collect = sub.add_parser("collect", help="probe a domain list")
    p_collect.add_argument("--domains", required=True)
    p_collect.add_argument("--out", required=True)
    p_collect.add_argument("--resolver")
    p_collect.add_argument("--tls-port", dest="tls_port")
    p_collect.add_argument("--timeout-ms", dest="timeout_ms")
    p_collect.add_argument("--max-inflight", dest="max_inflight")
    p_collect.add_argument("--retries")
    p_collect.add_argument("--jobs")
    p_collect.add_argument("--no-tls", action="store_true")
    p_collect.add_argument("--ipv6", action="store_true")
    p_collect.add_argument("--fixed-ts", dest="fixed_ts")
    p_collect.add_argument("--stats")
    p_collect.add_argument("--manifest")
    p_collect.set_defaults(func=cmd_collect)

    p_annotate = sub.add_parser("annotate", help="join toplist and measurements")
    for option in ("toplist", "measurements", "pfx2as", "as2org", "geo",
                   "anycast", "ca-owners", "countries", "out", "stats"):
        p_annotate.add_argument(f"--{option}", dest=option.replace("-", "_"))
    p_annotate.add_argument("--layers")
    p_annotate.add_argument("--multi-ip", dest="multi_ip",
                            choices=("lowest", "majority"), default="lowest")
    p_annotate.add_argument("--max-error-rate", dest="max_error_rate", default="0.01")
    p_annotate.add_argument("--jobs")
    p_annotate.add_argument("--manifest")
    p_annotate.set_defaults(func=cmd_annotate)

    p_score = sub.add_parser("score", help="per-country centralization scores")
    p_score.add_argument("--records")
    p_score.add_argument("--countries")
    p_score.add_argument("--out")
    p_score.add_argument("--layers")
    p_score.add_argument("--format", choices=("csv", "json"), default="csv")
    p_score.add_argument("--band", action="store_true")
    p_score.add_argument("--oracle-check", dest="oracle_check", action="store_true")
    p_score.add_argument("--sample")
    p_score.add_argument("--seed")
    p_score.add_argument("--tolerance", default="1e-9")
    p_score.add_argument("--jobs")
    p_score.add_argument("--manifest")
    p_score.set_defaults(func=cmd_score)

    p_classify = sub.add_parser("classify", help="cluster and label providers")
    p_classify.add_argument("--records")
    p_classify.add_argument("--countries")
    p_classify.add_argument("--out")
    p_classify.add_argument("--layer", default="hosting",
                            choices=[layer.value for layer in Layer])
    p_classify.add_argument("--rules")
    p_classify.add_argument("--dump-features", dest="dump_features")
    p_classify.add_argument("--transform", default="pca-minmax",
                            choices=("pca-minmax", "minmax-pca", "minmax"))
    p_classify.add_argument("--damping", default="0.9")
    p_classify.add_argument("--preference", default="median")
    p_classify.add_argument("--max-iter", dest="max_iter", default="1000")
    p_classify.add_argument("--convergence-iter", dest="convergence_iter", default="50")
    p_classify.add_argument("--jobs")
    p_classify.add_argument("--manifest")
    p_classify.set_defaults(func=cmd_classify)

    p_report = sub.add_parser("report", help="full report bundle")
    p_report.add_argument("--records")
    p_report.add_argument("--countries")
    p_report.add_argument("--out")
    p_report.add_argument("--layers")
    p_report.add_argument("--rules")
    p_report.add_argument("--stats")
    p_report.add_argument("--format", choices=("csv", "json"), default="csv")
    p_report.add_argument("--band", action="store_true")
    p_report.add_argument("--jobs")
    p_report.add_argument("--manifest")
    p_report.set_defaults(func=cmd_report)

    p_oracle = sub.add_parser("oracle-check", help="recompute scores via the transport solver")
    p_oracle.add_argument("--records")
    p_oracle.add_argument("--countries")
    p_oracle.add_argument("--layers")
    p_oracle.add_argument("--sample")
    p_oracle.add_argument("--seed")
    p_oracle.add_argument("--tolerance", default="1e-9")
    p_oracle.add_argument("--jobs")
    p_oracle.add_argument("--manifest")
    p_oracle.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, IngestError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
