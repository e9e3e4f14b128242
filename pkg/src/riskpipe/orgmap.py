"""Organization registry and IPv4 CIDR attribution.

Addresses are attributed to the organization owning the most specific
(longest) prefix that covers them, so a subsidiary block nested inside a
parent allocation wins over the parent.
"""

from __future__ import annotations

import csv
import ipaddress
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Union

from ._io import open_text
from .errors import DataError

ORGS_HEADER = ["org_id", "name", "industry", "employees"]
IPMAP_HEADER = ["org_id", "cidr"]

IPv4Like = Union[str, int, ipaddress.IPv4Address]


@dataclass(frozen=True)
class Organization:
    org_id: str
    name: str
    industry: str
    employees: int


@dataclass(frozen=True)
class IpRange:
    network: ipaddress.IPv4Network
    org_id: str

    @property
    def base(self) -> int:
        return int(self.network.network_address)

    @property
    def prefixlen(self) -> int:
        return self.network.prefixlen


def parse_ipv4(value: IPv4Like) -> int:
    """Return the address as an int. IPv6 and garbage raise DataError."""
    if isinstance(value, int):
        if not 0 <= value < 1 << 32:
            raise DataError(f"IPv4 address out of range: {value}")
        return value
    if isinstance(value, ipaddress.IPv4Address):
        return int(value)
    try:
        return int(ipaddress.IPv4Address(str(value).strip()))
    except ValueError:
        raise DataError(f"not an IPv4 address: {value!r}") from None


def parse_cidr(text: str) -> ipaddress.IPv4Network:
    text = text.strip()
    if "/" not in text:
        raise DataError(f"CIDR needs an explicit prefix length: {text!r}")
    try:
        net = ipaddress.ip_network(text, strict=True)
    except ValueError as exc:
        # strict=True rejects host bits set in the base address
        raise DataError(f"invalid CIDR {text!r}: {exc}") from None
    if net.version != 4:
        raise DataError(f"IPv6 not supported: {text!r}")
    return net


def _check_header(reader, expected, what):
    header = next(reader, None)
    if header is None:
        raise DataError(f"{what}: empty file, expected header {','.join(expected)}")
    if [h.strip() for h in header] != expected:
        raise DataError(f"{what}: bad header {header!r}, expected {','.join(expected)}")


def load_registry(source) -> dict[str, Organization]:
    """Read an orgs CSV into a dict keyed by org_id.

    Any bad row is fatal: the registry is the denominator for every rate.
    """
    registry: dict[str, Organization] = {}
    with open_text(source) as fh:
        reader = csv.reader(fh)
        _check_header(reader, ORGS_HEADER, "orgs file")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(ORGS_HEADER):
                raise DataError(f"orgs file line {line}: expected 4 fields, got {len(row)}")
            org_id, name, industry, employees = (c.strip() for c in row)
            if not org_id:
                raise DataError(f"orgs file line {line}: empty org_id")
            try:
                n_emp = int(employees)
            except ValueError:
                raise DataError(f"orgs file line {line}: employees not an integer: {employees!r}") from None
            if n_emp < 1:
                raise DataError(f"orgs file line {line}: employees must be >= 1, got {n_emp}")
            if org_id in registry:
                raise DataError(f"orgs file line {line}: duplicate org_id {org_id!r}")
            registry[org_id] = Organization(org_id, name, industry, n_emp)
    return registry


def load_ipmap(source) -> list[IpRange]:
    ranges = []
    with open_text(source) as fh:
        reader = csv.reader(fh)
        _check_header(reader, IPMAP_HEADER, "ipmap file")
        for row in reader:
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"ipmap file line {reader.line_num}: expected 2 fields")
            try:
                net = parse_cidr(row[1])
            except DataError as exc:
                raise DataError(f"ipmap file line {reader.line_num}: {exc}") from None
            ranges.append(IpRange(net, row[0].strip()))
    return ranges


class IpIndex:
    """Immutable longest-prefix-match index.

    One hash table per prefix length; a lookup probes the lengths present
    from most to least specific, at most 33 probes.
    """

    __slots__ = ("_tables", "_lengths", "_size")

    def __init__(self, tables: Mapping[int, Mapping[int, str]]):
        self._tables = {plen: dict(t) for plen, t in tables.items() if t}
        self._lengths = tuple(sorted(self._tables, reverse=True))
        self._size = sum(len(t) for t in self._tables.values())

    def __len__(self) -> int:
        return self._size

    def lookup(self, ip: int) -> Optional[str]:
        for plen in self._lengths:
            key = (ip >> (32 - plen)) if plen else 0
            org = self._tables[plen].get(key)
            if org is not None:
                return org
        return None

    def entries(self) -> list[tuple[str, str]]:
        """All (cidr, org_id) pairs, most specific first."""
        out = []
        for plen in self._lengths:
            for key, org in sorted(self._tables[plen].items()):
                base = (key << (32 - plen)) if plen else 0
                out.append((f"{ipaddress.IPv4Address(base)}/{plen}", org))
        return out


def build_ip_index(ranges: Iterable[IpRange], registry: Optional[Mapping[str, Organization]] = None) -> IpIndex:
    """Build the lookup index.

    Nested ranges are fine. The same CIDR mapped to two different orgs is an
    error, as is an org_id missing from ``registry`` (when one is given).
    """
    tables: dict[int, dict[int, str]] = {}
    for r in ranges:
        net = r.network if isinstance(r.network, ipaddress.IPv4Network) else parse_cidr(str(r.network))
        if int(net.network_address) & int(net.hostmask):
            raise DataError(f"host bits set in {net}")
        if registry is not None and r.org_id not in registry:
            raise DataError(f"ipmap references unknown org_id {r.org_id!r} ({net})")
        plen = net.prefixlen
        key = (int(net.network_address) >> (32 - plen)) if plen else 0
        table = tables.setdefault(plen, {})
        prev = table.get(key)
        if prev is not None and prev != r.org_id:
            raise DataError(f"{net} mapped to both {prev!r} and {r.org_id!r}")
        table[key] = r.org_id
    return IpIndex(tables)


def resolve(index: IpIndex, ip: IPv4Like) -> Optional[str]:
    """org_id owning ``ip`` by longest prefix, or None when unmapped."""
    return index.lookup(parse_ipv4(ip))
