"""Streaming CSV parsers for the five observation files.

A file with the wrong header is rejected outright. Inside a file, rows that
fail to parse are skipped and reported with their line number: scan data is
dirty and one bad row should not sink a month of observations.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import ipaddress
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from ._io import atomic_write_text, open_text
from .errors import DataError


class RecordKind(enum.Enum):
    TLS = "tls"
    SERVICES = "services"
    SEEDERS = "seeders"
    INFECTIONS = "infections"
    BREACHES = "breaches"


class TlsVersion(enum.IntEnum):
    # ordered, so "<= SSLv3" is a comparison
    SSLv2 = 0
    SSLv3 = 1
    TLSv1_0 = 2
    TLSv1_1 = 3
    TLSv1_2 = 4
    TLSv1_3 = 5


class KeyAlgo(enum.Enum):
    RSA = "RSA"
    DSA = "DSA"
    ECC = "ECC"


class SigAlgo(enum.Enum):
    SHA256_OR_BETTER = "SHA256_OR_BETTER"
    SHA1 = "SHA1"
    MD5 = "MD5"
    MD2 = "MD2"
    OTHER = "OTHER"


@dataclass(frozen=True)
class TlsObservation:
    ip: ipaddress.IPv4Address
    port: int
    month: str
    scan_date: dt.date
    tls_version: TlsVersion
    heartbleed: bool
    freak: bool
    dh_bits: int
    dh_common_prime: bool
    key_algo: KeyAlgo
    key_bits: int
    sig_algo: SigAlgo
    not_before: dt.date
    not_after: dt.date
    self_signed: bool
    nonstandard_root: bool
    chain_broken: bool


@dataclass(frozen=True)
class ServiceObservation:
    ip: ipaddress.IPv4Address
    port: int
    month: str
    service: str


@dataclass(frozen=True)
class SeederObservation:
    ip: ipaddress.IPv4Address
    infohash: str
    month: str


@dataclass(frozen=True)
class InfectionEvent:
    ip: ipaddress.IPv4Address
    date: dt.date
    family: str

    @property
    def month(self) -> str:
        return self.date.strftime("%Y-%m")


@dataclass(frozen=True)
class BreachEvent:
    org_id: str
    year: int


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass
class ParseResult:
    kind: RecordKind
    records: list = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def skipped(self) -> int:
        return len(self.diagnostics)


HEADERS: dict[RecordKind, list[str]] = {
    RecordKind.TLS: [
        "ip", "port", "month", "scan_date", "tls_version", "heartbleed", "freak",
        "dh_bits", "dh_common_prime", "key_algo", "key_bits", "sig_algo",
        "not_before", "not_after", "self_signed", "nonstandard_root", "chain_broken",
    ],
    RecordKind.SERVICES: ["ip", "port", "month", "service"],
    RecordKind.SEEDERS: ["ip", "infohash", "month"],
    RecordKind.INFECTIONS: ["ip", "date", "family"],
    RecordKind.BREACHES: ["org_id", "year"],
}

_MONTH_RE = re.compile(r"^\d{4}-(0[1-9]|1[0-2])$")
_TOKEN_RE = re.compile(r"^[A-Z0-9_\-]+$")


# -- field parsers; each raises ValueError with a readable message --

def _ip(s: str) -> ipaddress.IPv4Address:
    try:
        return ipaddress.IPv4Address(s)
    except ValueError:
        raise ValueError(f"bad IPv4 address {s!r}") from None


def _port(s: str) -> int:
    p = int(s)
    if not 1 <= p <= 65535:
        raise ValueError(f"port out of range: {p}")
    return p


def _month(s: str) -> str:
    if not _MONTH_RE.match(s):
        raise ValueError(f"bad month {s!r}, expected YYYY-MM")
    return s


def _date(s: str) -> dt.date:
    try:
        return dt.date.fromisoformat(s)
    except ValueError:
        raise ValueError(f"bad date {s!r}, expected YYYY-MM-DD") from None


def _bool(s: str) -> bool:
    if s == "1":
        return True
    if s == "0":
        return False
    raise ValueError(f"bad boolean {s!r}, expected 0 or 1")


def _nonneg(s: str) -> int:
    v = int(s)
    if v < 0:
        raise ValueError(f"negative value {v}")
    return v


def _positive(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError(f"non-positive value {v}")
    return v


def _enum(cls, by_name=True):
    def parse(s: str):
        try:
            return cls[s] if by_name else cls(s)
        except (KeyError, ValueError):
            raise ValueError(f"unknown {cls.__name__} {s!r}") from None
    return parse


def _nonempty(s: str) -> str:
    if not s:
        raise ValueError("empty value")
    return s


def _service(s: str) -> str:
    s = s.strip().upper()
    if not s or not _TOKEN_RE.match(s):
        raise ValueError(f"bad service token {s!r}")
    return s


def _build_tls(f: list[str]) -> TlsObservation:
    obs = TlsObservation(
        ip=_ip(f[0]), port=_port(f[1]), month=_month(f[2]), scan_date=_date(f[3]),
        tls_version=_enum(TlsVersion)(f[4]), heartbleed=_bool(f[5]), freak=_bool(f[6]),
        dh_bits=_nonneg(f[7]), dh_common_prime=_bool(f[8]),
        key_algo=_enum(KeyAlgo)(f[9]), key_bits=_positive(f[10]), sig_algo=_enum(SigAlgo)(f[11]),
        not_before=_date(f[12]), not_after=_date(f[13]), self_signed=_bool(f[14]),
        nonstandard_root=_bool(f[15]), chain_broken=_bool(f[16]),
    )
    if obs.not_before > obs.not_after:
        raise ValueError("not_before after not_after")
    if obs.scan_date.strftime("%Y-%m") != obs.month:
        raise ValueError(f"scan_date {obs.scan_date} outside month {obs.month}")
    return obs


def _build_breach(f: list[str]) -> BreachEvent:
    return BreachEvent(_nonempty(f[0].strip()), int(f[1]))


_BUILDERS: dict[RecordKind, Callable[[list[str]], object]] = {
    RecordKind.TLS: _build_tls,
    RecordKind.SERVICES: lambda f: ServiceObservation(_ip(f[0]), _port(f[1]), _month(f[2]), _service(f[3])),
    RecordKind.SEEDERS: lambda f: SeederObservation(_ip(f[0]), _nonempty(f[1].strip()), _month(f[2])),
    RecordKind.INFECTIONS: lambda f: InfectionEvent(_ip(f[0]), _date(f[1]), f[2].strip()),
    RecordKind.BREACHES: _build_breach,
}


def iter_records(kind: RecordKind, source, diagnostics: list[Diagnostic]) -> Iterator:
    """Lazily yield records in file order, appending skipped rows to ``diagnostics``."""
    kind = RecordKind(kind)
    header = HEADERS[kind]
    build = _BUILDERS[kind]
    with open_text(source) as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got is None or [h.strip() for h in got] != header:
            raise DataError(f"{kind.value} file: bad header {got!r}, expected {','.join(header)}")
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                diagnostics.append(Diagnostic(reader.line_num, f"expected {len(header)} fields, got {len(row)}"))
                continue
            try:
                rec = build(row)
            except ValueError as exc:
                diagnostics.append(Diagnostic(reader.line_num, str(exc)))
                continue
            yield rec


def parse_records(kind: RecordKind, source) -> ParseResult:
    """Parse a whole file. ``source`` is a path, binary stream or text stream."""
    result = ParseResult(RecordKind(kind))
    result.records = list(iter_records(kind, source, result.diagnostics))
    return result


# -- serialization (inverse of parsing) --

def _b(v: bool) -> str:
    return "1" if v else "0"


def record_row(kind: RecordKind, r) -> list[str]:
    kind = RecordKind(kind)
    if kind is RecordKind.TLS:
        return [
            str(r.ip), str(r.port), r.month, r.scan_date.isoformat(), r.tls_version.name,
            _b(r.heartbleed), _b(r.freak), str(r.dh_bits), _b(r.dh_common_prime),
            r.key_algo.name, str(r.key_bits), r.sig_algo.name, r.not_before.isoformat(),
            r.not_after.isoformat(), _b(r.self_signed), _b(r.nonstandard_root), _b(r.chain_broken),
        ]
    if kind is RecordKind.SERVICES:
        return [str(r.ip), str(r.port), r.month, r.service]
    if kind is RecordKind.SEEDERS:
        return [str(r.ip), r.infohash, r.month]
    if kind is RecordKind.INFECTIONS:
        return [str(r.ip), r.date.isoformat(), r.family]
    return [r.org_id, str(r.year)]


def serialize_records(kind: RecordKind, records: Iterable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADERS[RecordKind(kind)])
    for r in records:
        w.writerow(record_row(kind, r))
    return buf.getvalue()


def read_table(source) -> tuple[list[str], list[dict[str, str]]]:
    """Generic header + rows reader used for profiles and figure-data files."""
    with open_text(source) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError("empty CSV file")
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"line {reader.line_num}: expected {len(header)} fields, got {len(row)}")
            rows.append(dict(zip(header, row)))
    return header, rows


def write_records(path, kind: RecordKind, records: Sequence) -> None:
    atomic_write_text(path, serialize_records(kind, records))
