"""Risk-vector classification and per-organization yearly aggregation.

Counting units:

* infection day: one distinct (ip, date) pair; the botnet family is ignored.
* shared file: one distinct infohash per org per month, however many of the
  org's addresses seed it.
* TLS service: one distinct (ip, port) per month; all observations of it in
  that month have their error sets unioned.
* classified service: one distinct (ip, port) per month whose token is in the
  service table.

Monthly values are combined into yearly means with exact rational arithmetic,
so the result does not depend on record order and integer-derived fractions
come out exactly.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from ._io import fmt_float, write_csv
from .errors import DataError
from .ingest import (
    InfectionEvent,
    KeyAlgo,
    SeederObservation,
    ServiceObservation,
    SigAlgo,
    TlsObservation,
    TlsVersion,
    read_table,
)
from .orgmap import IpIndex, Organization


class ConfigError(enum.Enum):
    ObsoleteVersion = "ObsoleteVersion"
    Heartbleed = "Heartbleed"
    Freak = "Freak"
    WeakDhBits = "WeakDhBits"
    CommonDhPrime = "CommonDhPrime"


class CertError(enum.Enum):
    SelfSigned = "SelfSigned"
    Expired = "Expired"
    FutureIssued = "FutureIssued"
    NonstandardRoot = "NonstandardRoot"
    ChainBroken = "ChainBroken"
    WeakKey = "WeakKey"
    WeakSignature = "WeakSignature"


class ServiceClass(enum.Enum):
    Risky = "Risky"
    Neutral = "Neutral"
    Reasonable = "Reasonable"
    Unclassified = "Unclassified"


SERVICE_CLASSES: dict[str, ServiceClass] = {
    "FTP": ServiceClass.Risky,
    "TELNET": ServiceClass.Risky,
    "SMTP": ServiceClass.Risky,
    "POP3": ServiceClass.Risky,
    "SUNRPC": ServiceClass.Risky,
    "NETBIOS": ServiceClass.Risky,
    "IMAP": ServiceClass.Risky,
    "SNMP": ServiceClass.Risky,
    "SMB": ServiceClass.Risky,
    "MYSQL": ServiceClass.Risky,
    "MSSQL": ServiceClass.Risky,
    "RDP": ServiceClass.Risky,
    "POSTGRES": ServiceClass.Risky,
    "DNS": ServiceClass.Neutral,
    "HTTP": ServiceClass.Neutral,
    "NTP": ServiceClass.Neutral,
    "SSH": ServiceClass.Reasonable,
    "HTTPS": ServiceClass.Reasonable,
    "SMTPS": ServiceClass.Reasonable,
    "IMAPS": ServiceClass.Reasonable,
    "POP3S": ServiceClass.Reasonable,
}

MIN_DH_BITS = 2048
WEAK_SIGNATURES = frozenset({SigAlgo.SHA1, SigAlgo.MD5, SigAlgo.MD2})


def classify_tls_config(obs: TlsObservation) -> set[ConfigError]:
    errors = set()
    if obs.tls_version <= TlsVersion.SSLv3:
        errors.add(ConfigError.ObsoleteVersion)
    if obs.heartbleed:
        errors.add(ConfigError.Heartbleed)
    if obs.freak:
        errors.add(ConfigError.Freak)
    # dh_bits == 0 means no DH exchange was negotiated
    if 0 < obs.dh_bits < MIN_DH_BITS:
        errors.add(ConfigError.WeakDhBits)
    if obs.dh_common_prime:
        errors.add(ConfigError.CommonDhPrime)
    return errors


def _weak_key(algo: KeyAlgo, bits: int) -> bool:
    if algo in (KeyAlgo.RSA, KeyAlgo.DSA):
        return bits <= 1024
    return bits < 224


def classify_tls_cert(obs: TlsObservation) -> set[CertError]:
    errors = set()
    if obs.self_signed:
        errors.add(CertError.SelfSigned)
    if obs.scan_date > obs.not_after:
        errors.add(CertError.Expired)
    if obs.not_before > obs.scan_date:
        errors.add(CertError.FutureIssued)
    if obs.nonstandard_root:
        errors.add(CertError.NonstandardRoot)
    if obs.chain_broken:
        errors.add(CertError.ChainBroken)
    if _weak_key(obs.key_algo, obs.key_bits):
        errors.add(CertError.WeakKey)
    if obs.sig_algo in WEAK_SIGNATURES:
        errors.add(CertError.WeakSignature)
    return errors


def classify_service(service: str) -> ServiceClass:
    return SERVICE_CLASSES.get(service, ServiceClass.Unclassified)


class _Resolver:
    """Memoizing address -> org lookup; scan files repeat addresses heavily."""

    def __init__(self, index: IpIndex):
        self.index = index
        self._cache: dict[int, Optional[str]] = {}

    def __call__(self, ip) -> Optional[str]:
        key = int(ip)
        try:
            return self._cache[key]
        except KeyError:
            org = self._cache[key] = self.index.lookup(key)
            return org


@dataclass
class MonthlyCounts:
    """Per-org, per-month distinct-key counts.

    ``unattributed`` and ``out_of_window`` count distinct keys, so together
    with the attributed counts they partition the distinct keys in the input.
    """

    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    unattributed: int = 0
    out_of_window: int = 0

    def get(self, org_id: str, month: str) -> int:
        return self.counts.get(org_id, {}).get(month, 0)

    def total(self) -> int:
        return sum(sum(m.values()) for m in self.counts.values())


def _count_distinct(keyed: Iterable[tuple], resolver, months) -> MonthlyCounts:
    """``keyed`` yields (ip, month, key) triples; distinct keys are counted per org-month."""
    window = set(months) if months is not None else None
    seen: dict[tuple[str, str], set] = defaultdict(set)
    unattributed = set()
    outside = set()
    for ip, month, key in keyed:
        org = resolver(ip)
        if org is None:
            unattributed.add((month, key))
        elif window is not None and month not in window:
            outside.add((org, month, key))
        else:
            seen[(org, month)].add(key)
    out = MonthlyCounts(unattributed=len(unattributed), out_of_window=len(outside))
    for (org, month), keys in seen.items():
        out.counts.setdefault(org, {})[month] = len(keys)
    return out


def infection_days(events: Iterable[InfectionEvent], index: IpIndex,
                   months: Optional[Sequence[str]] = None) -> MonthlyCounts:
    """Distinct (ip, date) pairs per org per month."""
    resolver = index if isinstance(index, _Resolver) else _Resolver(index)
    return _count_distinct(
        ((e.ip, e.month, (int(e.ip), e.date)) for e in events), resolver, months)


def shared_files(seeders: Iterable[SeederObservation], index: IpIndex,
                 months: Optional[Sequence[str]] = None) -> MonthlyCounts:
    """Distinct infohashes per org per month (files, not addresses)."""
    resolver = index if isinstance(index, _Resolver) else _Resolver(index)
    out = MonthlyCounts()
    window = set(months) if months is not None else None
    seen: dict[tuple[str, str], set] = defaultdict(set)
    unattributed = set()
    outside = set()
    for s in seeders:
        org = resolver(s.ip)
        if org is None:
            # keyed by ip too: unmapped sources must not merge with each other
            unattributed.add((int(s.ip), s.month, s.infohash))
        elif window is not None and s.month not in window:
            outside.add((org, s.month, s.infohash))
        else:
            seen[(org, s.month)].add(s.infohash)
    out.unattributed = len(unattributed)
    out.out_of_window = len(outside)
    for (org, month), keys in seen.items():
        out.counts.setdefault(org, {})[month] = len(keys)
    return out


@dataclass(frozen=True)
class RiskProfile:
    org_id: str
    industry: str
    employees: int
    bot_rate: float
    bot_present: bool
    p2p_rate: float
    p2p_present: bool
    tls_cfg_frac: float
    tls_cert_frac: float
    risky_frac: float
    neutral_frac: float
    reasonable_frac: float
    n_tls_services: int
    n_classified_services: int

    def validate(self) -> None:
        for name in ("tls_cfg_frac", "tls_cert_frac", "risky_frac", "neutral_frac", "reasonable_frac"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{self.org_id}: {name}={v} outside [0,1]")
        if self.employees < 1:
            raise DataError(f"{self.org_id}: employees must be >= 1")
        for name in ("bot_rate", "p2p_rate"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DataError(f"{self.org_id}: {name}={v} must be finite and >= 0")
        if self.bot_present != (self.bot_rate > 0):
            raise DataError(f"{self.org_id}: bot_present inconsistent with bot_rate")
        if self.p2p_present != (self.p2p_rate > 0):
            raise DataError(f"{self.org_id}: p2p_present inconsistent with p2p_rate")
        s = self.risky_frac + self.neutral_frac + self.reasonable_frac
        if self.n_classified_services > 0 and abs(s - 1.0) > 1e-9:
            raise DataError(f"{self.org_id}: service fractions sum to {s}")


PROFILE_HEADER = [f.name for f in fields(RiskProfile)]


@dataclass
class AggregationDiagnostics:
    unattributed: dict[str, int] = field(default_factory=dict)
    out_of_window: dict[str, int] = field(default_factory=dict)
    orgs_without_tls: list[str] = field(default_factory=list)
    orgs_without_services: list[str] = field(default_factory=list)
    unclassified_services: int = 0

    def as_dict(self) -> dict:
        return {
            "unattributed": dict(sorted(self.unattributed.items())),
            "out_of_window": dict(sorted(self.out_of_window.items())),
            "orgs_without_tls": len(self.orgs_without_tls),
            "orgs_without_services": len(self.orgs_without_services),
            "unclassified_services": self.unclassified_services,
        }


@dataclass
class Observations:
    tls: Sequence[TlsObservation] = ()
    services: Sequence[ServiceObservation] = ()
    seeders: Sequence[SeederObservation] = ()
    infections: Sequence[InfectionEvent] = ()


def _mean(values: list[Fraction]) -> Fraction:
    return sum(values, Fraction(0)) / len(values) if values else Fraction(0)


def aggregate_profiles(obs: Observations, registry: Mapping[str, Organization], index: IpIndex,
                       months: Sequence[str]) -> tuple[list[RiskProfile], AggregationDiagnostics]:
    """Fold all observations into one yearly RiskProfile per registered org.

    Rates (bot, p2p) average over every requested month, zeros included.
    Fractions average only over months where their denominator is nonzero.
    """
    months = list(dict.fromkeys(months))
    if not months:
        raise DataError("months list is empty")
    window = set(months)
    resolver = _Resolver(index)
    diag = AggregationDiagnostics()

    bots = infection_days(obs.infections, resolver, months)
    files = shared_files(obs.seeders, resolver, months)
    diag.unattributed.update(infections=bots.unattributed, seeders=files.unattributed)
    diag.out_of_window.update(infections=bots.out_of_window, seeders=files.out_of_window)

    # (org, month) -> {(ip, port): [has_cfg_error, has_cert_error]}
    tls: dict[tuple[str, str], dict[tuple[int, int], list[bool]]] = defaultdict(dict)
    unattr = outside = 0
    for o in obs.tls:
        org = resolver(o.ip)
        if org is None:
            unattr += 1
            continue
        if o.month not in window:
            outside += 1
            continue
        flags = tls[(org, o.month)].setdefault((int(o.ip), o.port), [False, False])
        if not flags[0] and classify_tls_config(o):
            flags[0] = True
        if not flags[1] and classify_tls_cert(o):
            flags[1] = True
    diag.unattributed["tls"] = unattr
    diag.out_of_window["tls"] = outside

    # (org, month) -> {(ip, port): token}; conflicting tokens on one key keep the
    # smallest classified token so the result is order independent
    svc: dict[tuple[str, str], dict[tuple[int, int], str]] = defaultdict(dict)
    unattr = outside = unclassified = 0
    for s in obs.services:
        org = resolver(s.ip)
        if org is None:
            unattr += 1
            continue
        if s.month not in window:
            outside += 1
            continue
        if classify_service(s.service) is ServiceClass.Unclassified:
            unclassified += 1
            continue
        slot = svc[(org, s.month)]
        key = (int(s.ip), s.port)
        prev = slot.get(key)
        if prev is None or s.service < prev:
            slot[key] = s.service
    diag.unattributed["services"] = unattr
    diag.out_of_window["services"] = outside
    diag.unclassified_services = unclassified

    profiles = []
    for org_id in sorted(registry):
        org = registry[org_id]
        emp = org.employees
        bot = Fraction(sum(bots.get(org_id, m) for m in months), emp * len(months))
        p2p = Fraction(sum(files.get(org_id, m) for m in months), emp * len(months))

        cfg_m, cert_m, n_tls = [], [], 0
        for m in months:
            services = tls.get((org_id, m))
            if not services:
                continue
            n = len(services)
            n_tls += n
            cfg_m.append(Fraction(sum(f[0] for f in services.values()), n))
            cert_m.append(Fraction(sum(f[1] for f in services.values()), n))
        if n_tls == 0:
            diag.orgs_without_tls.append(org_id)

        risky_m, neutral_m, reason_m, n_cls = [], [], [], 0
        for m in months:
            tokens = svc.get((org_id, m))
            if not tokens:
                continue
            n = len(tokens)
            n_cls += n
            counts = {c: 0 for c in ServiceClass}
            for t in tokens.values():
                counts[SERVICE_CLASSES[t]] += 1
            risky_m.append(Fraction(counts[ServiceClass.Risky], n))
            neutral_m.append(Fraction(counts[ServiceClass.Neutral], n))
            reason_m.append(Fraction(counts[ServiceClass.Reasonable], n))
        if n_cls == 0:
            diag.orgs_without_services.append(org_id)

        profiles.append(RiskProfile(
            org_id=org_id, industry=org.industry, employees=emp,
            bot_rate=float(bot), bot_present=bot > 0,
            p2p_rate=float(p2p), p2p_present=p2p > 0,
            tls_cfg_frac=float(_mean(cfg_m)), tls_cert_frac=float(_mean(cert_m)),
            risky_frac=float(_mean(risky_m)), neutral_frac=float(_mean(neutral_m)),
            reasonable_frac=float(_mean(reason_m)),
            n_tls_services=n_tls, n_classified_services=n_cls,
        ))
    return profiles, diag


def profile_row(p: RiskProfile) -> list[str]:
    out = []
    for f in fields(RiskProfile):
        v = getattr(p, f.name)
        if isinstance(v, bool):
            out.append("1" if v else "0")
        elif isinstance(v, float):
            out.append(fmt_float(v))
        else:
            out.append(str(v))
    return out


def write_profiles(path, profiles: Iterable[RiskProfile]) -> None:
    write_csv(path, PROFILE_HEADER, (profile_row(p) for p in profiles))


def read_profiles(source) -> list[RiskProfile]:
    header, rows = read_table(source)
    if header != PROFILE_HEADER:
        raise DataError(f"profiles file: bad header, expected {','.join(PROFILE_HEADER)}")
    out = []
    for i, r in enumerate(rows, start=2):
        try:
            p = RiskProfile(
                org_id=r["org_id"], industry=r["industry"], employees=int(r["employees"]),
                bot_rate=float(r["bot_rate"]), bot_present=_flag(r["bot_present"]),
                p2p_rate=float(r["p2p_rate"]), p2p_present=_flag(r["p2p_present"]),
                tls_cfg_frac=float(r["tls_cfg_frac"]), tls_cert_frac=float(r["tls_cert_frac"]),
                risky_frac=float(r["risky_frac"]), neutral_frac=float(r["neutral_frac"]),
                reasonable_frac=float(r["reasonable_frac"]),
                n_tls_services=int(r["n_tls_services"]),
                n_classified_services=int(r["n_classified_services"]),
            )
        except ValueError as exc:
            raise DataError(f"profiles file line {i}: {exc}") from None
        p.validate()
        out.append(p)
    return out


def _flag(s: str) -> bool:
    if s not in ("0", "1"):
        raise ValueError(f"bad boolean {s!r}")
    return s == "1"
