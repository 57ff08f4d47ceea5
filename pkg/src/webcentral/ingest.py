"""Dataset parsing, lookup tables, and record annotation.

All input formats are simple line-oriented CSV/TSV/JSONL, loaded into
immutable tables: prefix-to-ASN (longest-prefix match), ASN-to-organization,
IP range geolocation, anycast prefixes, CA ownership, and the country
reference. ``annotate`` joins a popularity toplist with raw measurement
records into :class:`WebsiteRecord` rows plus per-layer success counters.

Loaders share one error policy: malformed lines are collected into a
:class:`ParseReport` with their line numbers, and the load aborts when more
than ``max_error_rate`` (default 1%) of the rows are bad.
"""

from __future__ import annotations

import bisect
import ipaddress
import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence
from urllib.parse import urlsplit

__all__ = [
    "IngestError",
    "ParseReport",
    "CountryInfo",
    "CountryTable",
    "ToplistEntry",
    "MeasurementRecord",
    "PrefixTable",
    "AsOrgTable",
    "GeoTable",
    "AnycastSet",
    "CaOwnerTable",
    "WebsiteRecord",
    "AnnotationStats",
    "AnnotationConfig",
    "ANYCAST",
    "CONTINENTS",
    "parse_toplist",
    "parse_measurements",
    "load_countries",
    "load_pfx2as",
    "load_as2org",
    "load_geo",
    "load_anycast",
    "load_ca_owners",
    "lookup_asn",
    "lookup_geo",
    "is_anycast",
    "extract_tld",
    "normalize_issuer",
    "annotate",
]

CONTINENTS = frozenset({"AF", "AS", "EU", "NA", "OC", "SA"})
ANYCAST = "anycast"

_HOSTNAME_LABEL = re.compile(r"^[a-z0-9]([a-z0-9-]{0,61}[a-z0-9])?$", re.IGNORECASE)


class IngestError(Exception):
    """A dataset failed to load; carries the per-line error report."""

    def __init__(self, message: str, report: "ParseReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass
class ParseReport:
    """Line-numbered errors collected while loading one input file."""

    source: str
    total_rows: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    def add(self, lineno: int, message: str) -> None:
        self.errors.append((lineno, message))

    @property
    def malformed(self) -> int:
        return len(self.errors)

    def raise_if_excessive(self, max_error_rate: float) -> None:
        if self.total_rows and self.malformed / self.total_rows > max_error_rate:
            sample = "; ".join(f"line {n}: {m}" for n, m in self.errors[:5])
            raise IngestError(
                f"{self.source}: {self.malformed}/{self.total_rows} malformed rows "
                f"(> {max_error_rate:.0%}): {sample}",
                report=self,
            )


@dataclass(frozen=True)
class CountryInfo:
    code: str
    name: str
    subregion: str
    continent: str

    def __post_init__(self) -> None:
        if self.continent not in CONTINENTS:
            raise ValueError(f"unknown continent {self.continent!r} for {self.code}")


class CountryTable:
    def __init__(self, infos: Iterable[CountryInfo]):
        self._by_code = {info.code: info for info in infos}

    def __contains__(self, code: str) -> bool:
        return code in self._by_code

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._by_code))

    def __len__(self) -> int:
        return len(self._by_code)

    def get(self, code: str) -> CountryInfo | None:
        return self._by_code.get(code)

    def cc_tld_map(self) -> dict[str, str]:
        """ccTLD -> country map for TLD insularity, with com mapped to US."""
        mapping = {info.code.lower(): info.code for info in self._by_code.values()}
        mapping["com"] = "US"
        return mapping


@dataclass(frozen=True)
class ToplistEntry:
    country: str
    rank_bucket: int
    origin: str

    @property
    def domain(self) -> str:
        host = urlsplit(self.origin).hostname or ""
        return host.rstrip(".").lower()


@dataclass(frozen=True)
class MeasurementRecord:
    """One raw probe result for a domain."""

    domain: str
    a_records: tuple[str, ...]
    ns_names: tuple[str, ...]
    ns_addresses: Mapping[str, tuple[str, ...]]
    leaf_issuer: str | None
    probe_time: str
    errors: Mapping[str, str] = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "domain": self.domain,
            "a": list(self.a_records),
            "ns": list(self.ns_names),
            "ns_a": {k: list(v) for k, v in self.ns_addresses.items()},
            "issuer": self.leaf_issuer,
            "ts": self.probe_time,
        }
        if self.errors:
            doc["errors"] = dict(self.errors)
        return json.dumps(doc, sort_keys=True)


class PrefixTable:
    """CIDR prefix -> origin ASN with longest-prefix-match lookups.

    Prefixes are canonicalized (host bits zeroed) and bucketed by address
    version and prefix length, so a lookup is one hash probe per length.
    """

    def __init__(self) -> None:
        self._buckets: dict[tuple[int, int], dict[int, int]] = {}
        self._lengths: dict[int, list[int]] = {4: [], 6: []}
        self.merged_origin_rows = 0

    def add(self, prefix: str, asn: int) -> None:
        network = ipaddress.ip_network(prefix, strict=False)
        key = (network.version, network.prefixlen)
        if key not in self._buckets:
            self._buckets[key] = {}
            lengths = self._lengths[network.version]
            bisect.insort(lengths, network.prefixlen)
        self._buckets[key][int(network.network_address)] = asn

    def lookup(self, ip: str | ipaddress.IPv4Address | ipaddress.IPv6Address) -> int | None:
        addr = ipaddress.ip_address(ip)
        value = int(addr)
        bits = 32 if addr.version == 4 else 128
        for length in reversed(self._lengths[addr.version]):
            masked = (value >> (bits - length)) << (bits - length) if length else 0
            asn = self._buckets[(addr.version, length)].get(masked)
            if asn is not None:
                return asn
        return None

    def __len__(self) -> int:
        return sum(len(b) for b in self._buckets.values())


class AsOrgTable:
    """ASN -> (org id, org name, HQ country); absence means unknown."""

    def __init__(self) -> None:
        self._orgs: dict[int, tuple[str, str, str]] = {}

    def add(self, asn: int, org_id: str, org_name: str, hq_country: str) -> None:
        self._orgs[asn] = (org_id, org_name, hq_country)

    def get(self, asn: int) -> tuple[str, str, str] | None:
        return self._orgs.get(asn)

    def __len__(self) -> int:
        return len(self._orgs)


class GeoTable:
    """Sorted disjoint IP ranges -> (country, continent)."""

    def __init__(self, ranges: Iterable[tuple[str, str, str, str]] = ()):
        self._starts: dict[int, list[int]] = {4: [], 6: []}
        self._rows: dict[int, list[tuple[int, int, str, str]]] = {4: [], 6: []}
        staged: dict[int, list[tuple[int, int, str, str]]] = {4: [], 6: []}
        for start, end, country, continent in ranges:
            lo = ipaddress.ip_address(start)
            hi = ipaddress.ip_address(end)
            if lo.version != hi.version:
                raise ValueError(f"mixed address versions in range {start}-{end}")
            if int(hi) < int(lo):
                raise ValueError(f"inverted range {start}-{end}")
            if continent not in CONTINENTS:
                raise ValueError(f"unknown continent {continent!r} in range {start}-{end}")
            staged[lo.version].append((int(lo), int(hi), country, continent))
        for version, rows in staged.items():
            rows.sort()
            for (lo1, hi1, *_), (lo2, hi2, *_) in zip(rows, rows[1:]):
                if lo2 <= hi1:
                    raise ValueError(
                        f"overlapping geo ranges: ...{hi1} overlaps {lo2}..."
                    )
            self._rows[version] = rows
            self._starts[version] = [row[0] for row in rows]

    def lookup(
        self, ip: str | ipaddress.IPv4Address | ipaddress.IPv6Address
    ) -> tuple[str, str] | None:
        addr = ipaddress.ip_address(ip)
        value = int(addr)
        idx = bisect.bisect_right(self._starts[addr.version], value) - 1
        if idx < 0:
            return None
        lo, hi, country, continent = self._rows[addr.version][idx]
        if value > hi:
            return None
        return country, continent


class AnycastSet:
    """CIDR prefixes flagged as anycast."""

    def __init__(self, prefixes: Iterable[str] = ()):
        self._table = PrefixTable()
        for prefix in prefixes:
            self._table.add(prefix, 1)

    def covers(self, ip: str | ipaddress.IPv4Address | ipaddress.IPv6Address) -> bool:
        return self._table.lookup(ip) is not None

    def __len__(self) -> int:
        return len(self._table)


class CaOwnerTable:
    """Normalized issuer organization -> (CA owner, HQ country)."""

    def __init__(self) -> None:
        self._owners: dict[str, tuple[str, str]] = {}

    def add(self, issuer_org: str, ca_owner: str, hq_country: str) -> None:
        self._owners[normalize_issuer(issuer_org)] = (ca_owner, hq_country)

    def get(self, issuer_org: str) -> tuple[str, str] | None:
        return self._owners.get(normalize_issuer(issuer_org))

    def __len__(self) -> int:
        return len(self._owners)


@dataclass(frozen=True)
class WebsiteRecord:
    """One annotated popular website; unknown fields are None."""

    domain: str
    country: str
    tld: str | None = None
    hosting_asn: int | None = None
    hosting_org: str | None = None
    hosting_hq: str | None = None
    hosting_ip_continent: str | None = None
    dns_asn: int | None = None
    dns_org: str | None = None
    dns_hq: str | None = None
    dns_ip_continent: str | None = None
    ca_owner: str | None = None
    ca_hq: str | None = None

    def to_json(self) -> str:
        return json.dumps(
            {k: v for k, v in self.__dict__.items() if v is not None}, sort_keys=True
        )

    @classmethod
    def from_json(cls, line: str) -> "WebsiteRecord":
        return cls(**json.loads(line))


@dataclass
class AnnotationStats:
    toplist_entries: int = 0
    annotated: int = 0
    missing_measurement: int = 0
    layer_resolved: dict[str, int] = field(default_factory=dict)
    layer_unknown: dict[str, int] = field(default_factory=dict)

    def count(self, layer: str, resolved: bool) -> None:
        bucket = self.layer_resolved if resolved else self.layer_unknown
        bucket[layer] = bucket.get(layer, 0) + 1

    def merge(self, other: "AnnotationStats") -> "AnnotationStats":
        merged = AnnotationStats(
            toplist_entries=self.toplist_entries + other.toplist_entries,
            annotated=self.annotated + other.annotated,
            missing_measurement=self.missing_measurement + other.missing_measurement,
        )
        for src in (self, other):
            for layer, n in src.layer_resolved.items():
                merged.layer_resolved[layer] = merged.layer_resolved.get(layer, 0) + n
            for layer, n in src.layer_unknown.items():
                merged.layer_unknown[layer] = merged.layer_unknown.get(layer, 0) + n
        return merged

    def to_dict(self) -> dict:
        return {
            "toplist_entries": self.toplist_entries,
            "annotated": self.annotated,
            "missing_measurement": self.missing_measurement,
            "layer_resolved": dict(sorted(self.layer_resolved.items())),
            "layer_unknown": dict(sorted(self.layer_unknown.items())),
        }


@dataclass(frozen=True)
class AnnotationConfig:
    """Annotation knobs; the defaults favor determinism.

    ``multi_ip`` picks the record that keys the hosting and DNS layers when
    a domain resolves to several addresses: "lowest" takes the numerically
    lowest address, "majority" the organization covering most addresses
    (ties broken toward the lexically smallest org).
    """

    layers: frozenset[str] = frozenset({"hosting", "dns", "tld", "ca"})
    multi_ip: str = "lowest"

    def __post_init__(self) -> None:
        unknown = self.layers - {"hosting", "dns", "tld", "ca"}
        if unknown:
            raise ValueError(f"unknown layers: {sorted(unknown)}")
        if self.multi_ip not in ("lowest", "majority"):
            raise ValueError(f"multi_ip must be 'lowest' or 'majority', not {self.multi_ip!r}")


def _is_hostname(name: str) -> bool:
    name = name.rstrip(".")
    if not name or len(name) > 253:
        return False
    return all(_HOSTNAME_LABEL.match(label) for label in name.split("."))


def _valid_bucket(value: int) -> bool:
    # rank-magnitude buckets: 1000, 5000, 10000, 50000, ...
    if value < 1000:
        return False
    text = str(value)
    return text[0] in "15" and set(text[1:]) == {"0"}


def _iter_lines(source) -> Iterator[tuple[int, str]]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            yield from enumerate(handle, 1)
    else:
        yield from enumerate(source, 1)


def parse_toplist(
    source, countries: CountryTable, *, max_error_rate: float = 0.01
) -> tuple[list[ToplistEntry], ParseReport]:
    """Parse `country,rank_bucket,origin` rows.

    Unknown countries, bad buckets, and unparseable origins land in the
    report; duplicate (country, origin) pairs keep the smallest bucket.
    """
    report = ParseReport(source=str(source) if isinstance(source, (str, Path)) else "<stream>")
    best: dict[tuple[str, str], ToplistEntry] = {}
    header_seen = False
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line:
            continue
        if not header_seen:
            header_seen = True
            if line != "country,rank_bucket,origin":
                raise IngestError(f"{report.source}: missing toplist header, got {line!r}")
            continue
        report.total_rows += 1
        parts = line.split(",")
        if len(parts) != 3:
            report.add(lineno, f"expected 3 fields, got {len(parts)}")
            continue
        country, bucket_text, origin = (p.strip() for p in parts)
        if country not in countries:
            report.add(lineno, f"unknown country {country!r}")
            continue
        try:
            bucket = int(bucket_text)
        except ValueError:
            report.add(lineno, f"bad rank bucket {bucket_text!r}")
            continue
        if not _valid_bucket(bucket):
            report.add(lineno, f"bad rank bucket {bucket}")
            continue
        entry = ToplistEntry(country=country, rank_bucket=bucket, origin=origin)
        if not entry.domain or not _is_hostname(entry.domain):
            report.add(lineno, f"unparseable origin {origin!r}")
            continue
        key = (country, origin)
        if key not in best or bucket < best[key].rank_bucket:
            best[key] = entry
    report.raise_if_excessive(max_error_rate)
    return list(best.values()), report


def parse_measurements(
    source, *, max_error_rate: float = 0.01
) -> tuple[dict[str, MeasurementRecord], ParseReport]:
    """Parse measurement JSONL into a domain-keyed map (last record wins)."""
    report = ParseReport(source=str(source) if isinstance(source, (str, Path)) else "<stream>")
    records: dict[str, MeasurementRecord] = {}
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line:
            continue
        report.total_rows += 1
        try:
            doc = json.loads(line)
            domain = doc["domain"].rstrip(".").lower()
            if not _is_hostname(domain):
                raise ValueError(f"invalid domain {doc['domain']!r}")
            a_records = tuple(str(ipaddress.ip_address(ip)) for ip in doc.get("a", []))
            ns_addresses = {
                str(name).rstrip(".").lower(): tuple(
                    str(ipaddress.ip_address(ip)) for ip in ips
                )
                for name, ips in doc.get("ns_a", {}).items()
            }
            record = MeasurementRecord(
                domain=domain,
                a_records=a_records,
                ns_names=tuple(str(n).rstrip(".").lower() for n in doc.get("ns", [])),
                ns_addresses=ns_addresses,
                leaf_issuer=doc.get("issuer"),
                probe_time=str(doc.get("ts", "")),
                errors=dict(doc.get("errors", {})),
            )
        except (KeyError, TypeError, ValueError) as exc:
            report.add(lineno, str(exc))
            continue
        records[record.domain] = record
    report.raise_if_excessive(max_error_rate)
    return records, report


def load_countries(source) -> CountryTable:
    infos = []
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line or line == "code,name,subregion,continent":
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise IngestError(f"countries line {lineno}: expected 4 fields, got {line!r}")
        infos.append(CountryInfo(*(p.strip() for p in parts)))
    return CountryTable(infos)


def load_pfx2as(source, *, max_error_rate: float = 0.01) -> tuple[PrefixTable, ParseReport]:
    """Parse whitespace-separated `prefix length asn` rows.

    Merged origin sets like ``12_34`` keep the first ASN; the table counts
    how many rows carried one.
    """
    report = ParseReport(source=str(source) if isinstance(source, (str, Path)) else "<stream>")
    table = PrefixTable()
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        report.total_rows += 1
        parts = line.split()
        if len(parts) != 3:
            report.add(lineno, f"expected 3 fields, got {len(parts)}")
            continue
        prefix_text, length_text, asn_text = parts
        if "_" in asn_text or "," in asn_text:
            asn_text = re.split("[_,]", asn_text)[0]
            table.merged_origin_rows += 1
        try:
            length = int(length_text)
            asn = int(asn_text)
            table.add(f"{prefix_text}/{length}", asn)
        except ValueError as exc:
            report.add(lineno, str(exc))
            continue
    report.raise_if_excessive(max_error_rate)
    return table, report


def load_as2org(source, *, max_error_rate: float = 0.01) -> tuple[AsOrgTable, ParseReport]:
    report = ParseReport(source=str(source) if isinstance(source, (str, Path)) else "<stream>")
    table = AsOrgTable()
    for lineno, raw in _iter_lines(source):
        line = raw.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        report.total_rows += 1
        parts = line.split("\t")
        if len(parts) != 4:
            report.add(lineno, f"expected 4 tab-separated fields, got {len(parts)}")
            continue
        asn_text, org_id, org_name, country = parts
        try:
            table.add(int(asn_text), org_id.strip(), org_name.strip(), country.strip())
        except ValueError:
            report.add(lineno, f"bad ASN {asn_text!r}")
    report.raise_if_excessive(max_error_rate)
    return table, report


def load_geo(source) -> GeoTable:
    """Parse `start_ip,end_ip,country,continent` rows; overlaps are fatal."""
    ranges = []
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line or line == "start_ip,end_ip,country,continent":
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            raise IngestError(f"geo line {lineno}: expected 4 fields, got {line!r}")
        ranges.append(tuple(parts))
    try:
        return GeoTable(ranges)
    except ValueError as exc:
        raise IngestError(f"geo table: {exc}") from exc


def load_anycast(source) -> AnycastSet:
    prefixes = []
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            ipaddress.ip_network(line, strict=False)
        except ValueError as exc:
            raise IngestError(f"anycast line {lineno}: {exc}") from exc
        prefixes.append(line)
    return AnycastSet(prefixes)


def load_ca_owners(source, *, max_error_rate: float = 0.01) -> tuple[CaOwnerTable, ParseReport]:
    report = ParseReport(source=str(source) if isinstance(source, (str, Path)) else "<stream>")
    table = CaOwnerTable()
    for lineno, raw in _iter_lines(source):
        line = raw.strip()
        if not line or line == "issuer_org,ca_owner,country":
            continue
        report.total_rows += 1
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            report.add(lineno, f"expected 3 fields, got {len(parts)}")
            continue
        table.add(parts[0], parts[1], parts[2])
    report.raise_if_excessive(max_error_rate)
    return table, report


def lookup_asn(table: PrefixTable, ip) -> int | None:
    """ASN owning the longest prefix that covers ``ip``, if any."""
    return table.lookup(ip)


def lookup_geo(table: GeoTable, ip) -> tuple[str, str] | None:
    return table.lookup(ip)


def is_anycast(anycast: AnycastSet, ip) -> bool:
    return anycast.covers(ip)


def extract_tld(domain: str) -> str:
    """Final DNS label, lowercased ("site.co.uk" -> "uk")."""
    labels = domain.rstrip(".").lower().split(".")
    if len(labels) < 2 or not labels[-1]:
        raise ValueError(f"no TLD in {domain!r}")
    return labels[-1]


def normalize_issuer(issuer: str) -> str:
    """Trim, collapse internal whitespace, casefold."""
    return " ".join(issuer.split()).casefold()


def _sort_ip_key(ip: str) -> tuple[int, int]:
    addr = ipaddress.ip_address(ip)
    return (addr.version, int(addr))


def _key_ip(
    ips: Sequence[str],
    prefixes: PrefixTable,
    orgs: AsOrgTable,
    multi_ip: str,
) -> str | None:
    """The address that keys a layer for a multi-address domain."""
    if not ips:
        return None
    ordered = sorted(ips, key=_sort_ip_key)
    if multi_ip == "lowest":
        return ordered[0]
    by_org: dict[str, list[str]] = {}
    unattributed: list[str] = []
    for ip in ordered:
        asn = prefixes.lookup(ip)
        org = orgs.get(asn) if asn is not None else None
        if org is None:
            unattributed.append(ip)
        else:
            by_org.setdefault(org[1], []).append(ip)
    if not by_org:
        return ordered[0]
    winner = max(by_org.items(), key=lambda kv: (len(kv[1]), kv[0]))
    return winner[1][0]


def annotate(
    entries: Sequence[ToplistEntry],
    measurements: Mapping[str, MeasurementRecord],
    *,
    prefixes: PrefixTable,
    orgs: AsOrgTable,
    geo: GeoTable,
    anycast: AnycastSet,
    ca_owners: CaOwnerTable,
    config: AnnotationConfig = AnnotationConfig(),
) -> tuple[list[WebsiteRecord], AnnotationStats]:
    """Join the toplist with measurements and attribute every layer.

    Entries without a measurement are skipped and counted. A layer that
    cannot be attributed (unresolvable address, unknown ASN or issuer)
    leaves its fields None and increments the layer's unknown counter.
    """
    stats = AnnotationStats(toplist_entries=len(entries))
    records: list[WebsiteRecord] = []
    for entry in entries:
        measurement = measurements.get(entry.domain)
        if measurement is None:
            stats.missing_measurement += 1
            continue
        record = WebsiteRecord(domain=entry.domain, country=entry.country)

        if "tld" in config.layers:
            try:
                record = replace(record, tld=extract_tld(entry.domain))
                stats.count("tld", True)
            except ValueError:
                stats.count("tld", False)

        if "hosting" in config.layers:
            record = _annotate_address_layer(
                record, measurement.a_records, "hosting", prefixes, orgs, geo,
                anycast, config, stats,
            )

        if "dns" in config.layers:
            ns_ips = [ip for name in sorted(measurement.ns_addresses)
                      for ip in measurement.ns_addresses[name]]
            record = _annotate_address_layer(
                record, ns_ips, "dns", prefixes, orgs, geo, anycast, config, stats,
            )

        if "ca" in config.layers:
            owner = (
                ca_owners.get(measurement.leaf_issuer)
                if measurement.leaf_issuer
                else None
            )
            if owner is None:
                stats.count("ca", False)
            else:
                record = replace(record, ca_owner=owner[0], ca_hq=owner[1])
                stats.count("ca", True)

        records.append(record)
        stats.annotated += 1
    return records, stats


def _annotate_address_layer(
    record: WebsiteRecord,
    ips: Sequence[str],
    layer: str,
    prefixes: PrefixTable,
    orgs: AsOrgTable,
    geo: GeoTable,
    anycast: AnycastSet,
    config: AnnotationConfig,
    stats: AnnotationStats,
) -> WebsiteRecord:
    """Attribute one address-keyed layer (hosting or dns) of a record."""
    ip = _key_ip(ips, prefixes, orgs, config.multi_ip)
    asn = prefixes.lookup(ip) if ip is not None else None
    org = orgs.get(asn) if asn is not None else None
    if ip is not None:
        if anycast.covers(ip):
            continent = ANYCAST
        else:
            located = geo.lookup(ip)
            continent = located[1] if located else None
    else:
        continent = None
    if org is None:
        stats.count(layer, False)
        if continent is not None:
            record = replace(record, **{f"{layer}_ip_continent": continent})
        return record
    stats.count(layer, True)
    return replace(
        record,
        **{
            f"{layer}_asn": asn,
            f"{layer}_org": org[1],
            f"{layer}_hq": org[2],
            f"{layer}_ip_continent": continent,
        },
    )
