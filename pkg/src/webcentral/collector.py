"""Active measurement client: DNS resolution and TLS issuer retrieval.

A stub resolver speaking the DNS wire format directly (UDP with TCP
fallback on truncation) gathers A/NS data against a configurable resolver
endpoint, and a plain TLS client handshake retrieves the leaf certificate
to extract its issuer organization. No certificate validation is performed.
Remote failures never abort a run: they degrade to empty fields with an
error note on the record.
"""

from __future__ import annotations

import json
import socket
import ssl
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, IO, Sequence

from cryptography import x509
from cryptography.x509.oid import NameOID

from .ingest import MeasurementRecord

__all__ = [
    "ProbeConfig",
    "CollectStats",
    "CollectorAborted",
    "DnsError",
    "resolve_domain",
    "fetch_leaf_issuer",
    "collect",
]

QTYPE_A = 1
QTYPE_NS = 2
QTYPE_CNAME = 5
QTYPE_AAAA = 28


@dataclass(frozen=True)
class ProbeConfig:
    """Probe parameters; flags take precedence over environment overrides."""

    resolver: str = "127.0.0.1:53"
    tls_port: int = 443
    timeout_ms: int = 3000
    max_inflight: int = 16
    retries: int = 2
    probe_tls: bool = True
    probe_ipv6: bool = False
    fixed_timestamp: str | None = None

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")
        if self.max_inflight < 1:
            raise ValueError("max in-flight probes must be at least 1")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    @property
    def resolver_addr(self) -> tuple[str, int]:
        host, _, port = self.resolver.rpartition(":")
        host = host.strip("[]")
        if not host or not port.isdigit():
            raise ValueError(f"resolver must be address:port, got {self.resolver!r}")
        return host, int(port)

    @property
    def timeout(self) -> float:
        return self.timeout_ms / 1000.0


@dataclass
class CollectStats:
    domains: int = 0
    resolved: int = 0
    tls_ok: int = 0
    failed: int = 0

    def to_dict(self) -> dict:
        return {
            "domains": self.domains,
            "resolved": self.resolved,
            "tls_ok": self.tls_ok,
            "failed": self.failed,
        }


class CollectorAborted(Exception):
    """The output sink failed; a partial-output marker was attempted."""


class DnsError(Exception):
    def __init__(self, kind: str):
        super().__init__(kind)
        self.kind = kind


def _encode_name(name: str) -> bytes:
    out = bytearray()
    for label in name.rstrip(".").split("."):
        raw = label.encode("ascii")
        if not 0 < len(raw) < 64:
            raise DnsError(f"bad label in {name!r}")
        out.append(len(raw))
        out += raw
    out.append(0)
    return bytes(out)


def _decode_name(message: bytes, offset: int) -> tuple[str, int]:
    labels: list[str] = []
    jumps = 0
    end = -1
    while True:
        if offset >= len(message):
            raise DnsError("truncated name")
        length = message[offset]
        if length & 0xC0 == 0xC0:
            if offset + 1 >= len(message):
                raise DnsError("truncated pointer")
            pointer = ((length & 0x3F) << 8) | message[offset + 1]
            if end < 0:
                end = offset + 2
            offset = pointer
            jumps += 1
            if jumps > 64:
                raise DnsError("compression loop")
            continue
        offset += 1
        if length == 0:
            break
        labels.append(message[offset : offset + length].decode("ascii", "replace"))
        offset += length
    return ".".join(labels).lower(), (end if end >= 0 else offset)


def _build_query(qid: int, qname: str, qtype: int) -> bytes:
    header = struct.pack("!6H", qid, 0x0100, 1, 0, 0, 0)  # RD set
    return header + _encode_name(qname) + struct.pack("!HH", qtype, 1)


@dataclass
class _Response:
    rcode: int
    truncated: bool
    answers: list[tuple[str, int, bytes, int]]  # name, type, rdata, rdata offset
    message: bytes


def _parse_response(message: bytes, expect_qid: int) -> _Response:
    if len(message) < 12:
        raise DnsError("short response")
    qid, flags, qdcount, ancount, _, _ = struct.unpack_from("!6H", message, 0)
    if qid != expect_qid:
        raise DnsError("mismatched query id")
    offset = 12
    for _ in range(qdcount):
        _, offset = _decode_name(message, offset)
        offset += 4
    answers = []
    for _ in range(ancount):
        name, offset = _decode_name(message, offset)
        rtype, _, _, rdlength = struct.unpack_from("!HHIH", message, offset)
        offset += 10
        answers.append((name, rtype, message[offset : offset + rdlength], offset))
        offset += rdlength
    return _Response(
        rcode=flags & 0xF,
        truncated=bool(flags & 0x0200),
        answers=answers,
        message=message,
    )


def _udp_exchange(packet: bytes, addr: tuple[str, int], timeout: float) -> bytes:
    family = socket.AF_INET6 if ":" in addr[0] else socket.AF_INET
    with socket.socket(family, socket.SOCK_DGRAM) as sock:
        sock.settimeout(timeout)
        sock.sendto(packet, addr)
        data, _ = sock.recvfrom(65535)
        return data


def _tcp_exchange(packet: bytes, addr: tuple[str, int], timeout: float) -> bytes:
    with socket.create_connection(addr, timeout=timeout) as sock:
        sock.settimeout(timeout)
        sock.sendall(struct.pack("!H", len(packet)) + packet)
        header = _recv_exact(sock, 2)
        (length,) = struct.unpack("!H", header)
        return _recv_exact(sock, length)


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = bytearray()
    while len(chunks) < n:
        chunk = sock.recv(n - len(chunks))
        if not chunk:
            raise DnsError("connection closed")
        chunks += chunk
    return bytes(chunks)


def _query(qname: str, qtype: int, config: ProbeConfig) -> _Response:
    """One lookup with retries; falls back to TCP when truncated."""
    addr = config.resolver_addr
    qid = zlib.crc32(f"{qname}/{qtype}".encode()) & 0xFFFF
    packet = _build_query(qid, qname, qtype)
    last_error = DnsError("timeout")
    for _ in range(config.retries + 1):
        try:
            response = _parse_response(_udp_exchange(packet, addr, config.timeout), qid)
        except (TimeoutError, socket.timeout, OSError):
            last_error = DnsError("timeout")
            continue
        except DnsError as exc:
            last_error = exc
            continue
        if response.truncated:
            try:
                response = _parse_response(_tcp_exchange(packet, addr, config.timeout), qid)
            except (TimeoutError, socket.timeout, OSError):
                last_error = DnsError("tcp fallback failed")
                continue
        if response.rcode == 3:
            raise DnsError("nxdomain")
        if response.rcode != 0:
            raise DnsError(f"rcode{response.rcode}")
        return response
    raise last_error


def _addresses_from(response: _Response, want_ipv6: bool) -> list[str]:
    addresses = []
    for _, rtype, rdata, _ in response.answers:
        if rtype == QTYPE_A and len(rdata) == 4:
            addresses.append(socket.inet_ntop(socket.AF_INET, rdata))
        elif want_ipv6 and rtype == QTYPE_AAAA and len(rdata) == 16:
            addresses.append(socket.inet_ntop(socket.AF_INET6, rdata))
    return sorted(set(addresses), key=_ip_sort_key)


def _ip_sort_key(ip: str) -> tuple[int, bytes]:
    if ":" in ip:
        return (6, socket.inet_pton(socket.AF_INET6, ip))
    return (4, socket.inet_pton(socket.AF_INET, ip))


def resolve_domain(domain: str, config: ProbeConfig) -> MeasurementRecord:
    """A records, NS names, and NS addresses for one domain.

    Lookup failures leave the affected field empty and add a note under the
    field's name in the record's ``errors`` map.
    """
    errors: dict[str, str] = {}
    a_records: list[str] = []
    ns_names: list[str] = []
    ns_addresses: dict[str, tuple[str, ...]] = {}
    try:
        a_records = _addresses_from(_query(domain, QTYPE_A, config), config.probe_ipv6)
    except DnsError as exc:
        errors["a"] = exc.kind
    try:
        ns_response = _query(domain, QTYPE_NS, config)
        for _, rtype, _, rdata_offset in ns_response.answers:
            if rtype == QTYPE_NS:
                name, _ = _decode_name(ns_response.message, rdata_offset)
                ns_names.append(name)
        ns_names = sorted(set(ns_names))
    except DnsError as exc:
        errors["ns"] = exc.kind
    for ns_name in ns_names:
        try:
            ns_addresses[ns_name] = tuple(
                _addresses_from(_query(ns_name, QTYPE_A, config), config.probe_ipv6)
            )
        except DnsError as exc:
            ns_addresses[ns_name] = ()
            errors[f"ns_a:{ns_name}"] = exc.kind
    return MeasurementRecord(
        domain=domain.rstrip(".").lower(),
        a_records=tuple(a_records),
        ns_names=tuple(ns_names),
        ns_addresses=ns_addresses,
        leaf_issuer=None,
        probe_time=config.fixed_timestamp or _now(),
        errors=errors,
    )


def fetch_leaf_issuer(
    ip: str, sni_hostname: str, config: ProbeConfig
) -> tuple[str | None, str | None]:
    """Issuer organization (O=) of the leaf certificate served at ``ip``.

    Completes a TLS handshake without any chain validation, takes the first
    (leaf) certificate, and returns its issuer O attribute with whitespace
    collapsed. Returns (None, note) on any failure.
    """
    context = ssl.SSLContext(ssl.PROTOCOL_TLS_CLIENT)
    context.check_hostname = False
    context.verify_mode = ssl.CERT_NONE
    try:
        with socket.create_connection((ip, config.tls_port), timeout=config.timeout) as sock:
            sock.settimeout(config.timeout)
            with context.wrap_socket(sock, server_hostname=sni_hostname) as tls:
                der = tls.getpeercert(binary_form=True)
    except ConnectionRefusedError:
        return None, "connection refused"
    except (TimeoutError, socket.timeout):
        return None, "timeout"
    except (ssl.SSLError, OSError) as exc:
        return None, f"tls error: {exc.__class__.__name__}"
    if not der:
        return None, "no certificate"
    certificate = x509.load_der_x509_certificate(der)
    orgs = certificate.issuer.get_attributes_for_oid(NameOID.ORGANIZATION_NAME)
    if not orgs:
        return None, "no issuer organization"
    return " ".join(str(orgs[0].value).split()), None


def _probe(domain: str, config: ProbeConfig) -> MeasurementRecord:
    record = resolve_domain(domain, config)
    if config.probe_tls and record.a_records:
        issuer, note = fetch_leaf_issuer(record.a_records[0], domain, config)
        errors = dict(record.errors)
        if note is not None:
            errors["tls"] = note
        record = MeasurementRecord(
            domain=record.domain,
            a_records=record.a_records,
            ns_names=record.ns_names,
            ns_addresses=record.ns_addresses,
            leaf_issuer=issuer,
            probe_time=record.probe_time,
            errors=errors,
        )
    return record


def collect(
    domains: Sequence[str],
    config: ProbeConfig,
    sink: IO[str],
    *,
    probe: Callable[[str, ProbeConfig], MeasurementRecord] | None = None,
) -> CollectStats:
    """Probe every domain and write one JSONL record each, in input order.

    A worker pool bounded by ``max_inflight`` runs the probes; completed
    records are buffered just long enough to restore input order. A sink
    write failure aborts the run after attempting to write a partial-output
    marker.
    """
    if not domains:
        raise ValueError("empty domain list")
    probe = probe or _probe
    stats = CollectStats(domains=len(domains))

    pending: dict[int, MeasurementRecord] = {}
    next_index = 0
    with ThreadPoolExecutor(max_workers=config.max_inflight) as pool:
        futures = {
            pool.submit(probe, domain, config): index
            for index, domain in enumerate(domains)
        }
        for future in as_completed(futures):
            pending[futures[future]] = future.result()
            while next_index in pending:
                ready = pending.pop(next_index)
                if ready.a_records:
                    stats.resolved += 1
                else:
                    stats.failed += 1
                if ready.leaf_issuer is not None:
                    stats.tls_ok += 1
                try:
                    sink.write(ready.to_json() + "\n")
                except OSError as exc:
                    try:
                        sink.write(json.dumps({"partial_output": next_index}) + "\n")
                    except OSError:
                        pass
                    raise CollectorAborted(
                        f"sink failed after {next_index} records: {exc}"
                    ) from exc
                next_index += 1
    return stats


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()
