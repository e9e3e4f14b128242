"""Seeded synthetic organizations with known regression ground truth.

Infected organizations get ``ln(bot_rate) = x . beta + Normal(0, sigma)``
where ``x`` holds the p2p indicator/log-rate split and the four fraction
regressors. Regressor distributions are loose approximations of the shapes
seen in real rating data (point masses at 0 and 1 with a smooth middle for
the TLS and service fractions, log-normal sharing rates); they are defaults,
not measurements.

Every TLS and service fraction is generated as an integer ratio, so
``Events`` mode can emit observation files that re-aggregate to exactly the
same fractions. Rates are quantized to whole infection days and files.
"""

from __future__ import annotations

import calendar
import datetime as dt
import enum
import ipaddress
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ._io import fmt_float, write_csv
from .errors import DataError
from .ingest import (
    BreachEvent,
    InfectionEvent,
    KeyAlgo,
    RecordKind,
    SeederObservation,
    ServiceObservation,
    SigAlgo,
    TlsObservation,
    TlsVersion,
    write_records,
)
from .models.design import COEFFICIENT_LABELS, REGRESSORS, regressor_row
from .orgmap import IpRange, Organization
from .riskvectors import SERVICE_CLASSES, Observations, RiskProfile, ServiceClass, write_profiles

# published pooled estimates, keyed by design column
REFERENCE_COEFFICIENTS = {
    "t0": -5.763,
    "t_hat": 0.841,
    "T_CF": 0.512,
    "T_CT": 0.638,
    "S_Ri": 0.509,
    "S_Re": -0.493,
    "intercept": -0.167,
}

INDUSTRIES = [
    "Aerospace/Defense", "Agriculture", "Business Services", "Construction", "Consumer Goods",
    "Education", "Energy/Utilities", "Finance", "Government/Politics", "Healthcare",
    "Hospitality", "Insurance", "Legal", "Manufacturing", "Media/Entertainment",
    "Nonprofit/NGO", "Pharmaceuticals", "Real Estate", "Retail", "Technology",
    "Telecommunications", "Transportation",
]

FAMILIES = ["conficker", "zeus", "ramnit", "necurs", "sality", "gameover", "bamital", "tinba"]
UNCLASSIFIED_TOKENS = ["GOPHER", "IRC", "XMPP", "VNC", "LDAP"]
SERVICE_PORTS = {
    "FTP": 21, "TELNET": 23, "SMTP": 25, "POP3": 110, "SUNRPC": 111, "NETBIOS": 139,
    "IMAP": 143, "SNMP": 161, "SMB": 445, "MYSQL": 3306, "MSSQL": 1433, "RDP": 3389,
    "POSTGRES": 5432, "DNS": 53, "HTTP": 80, "NTP": 123, "SSH": 22, "HTTPS": 443,
    "SMTPS": 465, "IMAPS": 993, "POP3S": 995, "GOPHER": 70, "IRC": 6667, "XMPP": 5222,
    "VNC": 5900, "LDAP": 389,
}
TOKENS_BY_CLASS = {
    c: sorted(t for t, k in SERVICE_CLASSES.items() if k is c)
    for c in (ServiceClass.Risky, ServiceClass.Neutral, ServiceClass.Reasonable)
}


class Mode(enum.Enum):
    Profiles = "profiles"
    Events = "events"


@dataclass(frozen=True)
class FractionMixture:
    """Point mass at 0, point mass at 1, Beta(a, b) in between (binomial-rounded)."""

    p_zero: float
    p_one: float
    a: float
    b: float


@dataclass(frozen=True)
class ServiceMixture:
    p_all_risky: float = 0.08
    p_all_neutral: float = 0.10
    p_all_reasonable: float = 0.12
    dirichlet: tuple[float, float, float] = (1.2, 1.8, 1.5)


@dataclass
class SynthConfig:
    n_orgs: int = 1000
    n_industries: int = 22
    seed: int = 0
    true_coefficients: dict[str, float] = field(default_factory=lambda: dict(REFERENCE_COEFFICIENTS))
    sigma: float = 1.0
    zero_bot_share: float = 0.67
    zero_p2p_given_bots: float = 0.135
    p2p_share_without_bots: float = 0.10
    # log-normal employees; median ~500
    employee_log_mean: float = math.log(500.0)
    employee_log_sd: float = 1.3
    employee_max: int = 50_000
    # log-normal files per employee per month for sharing orgs; ~90% below 0.02
    p2p_log_mean: float = math.log(0.005)
    p2p_log_sd: float = 1.08
    tls_cfg_mixture: FractionMixture = FractionMixture(0.45, 0.15, 1.5, 3.0)
    tls_cert_mixture: FractionMixture = FractionMixture(0.35, 0.25, 2.0, 2.0)
    service_mixture: ServiceMixture = ServiceMixture()
    no_tls_share: float = 0.05
    no_services_share: float = 0.03
    industry_coefficient_spread: float = 0.0
    breach_rate_with_bots: float = 0.04
    breach_rate_without_bots: float = 0.01
    year: int = 2015

    def validate(self) -> None:
        if self.n_orgs < 20:
            raise DataError("n_orgs must be >= 20")
        if self.n_industries < 1:
            raise DataError("n_industries must be >= 1")
        for name in ("zero_bot_share", "zero_p2p_given_bots", "p2p_share_without_bots",
                     "no_tls_share", "no_services_share", "breach_rate_with_bots",
                     "breach_rate_without_bots"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DataError(f"{name} must lie in [0, 1], got {v}")
        if self.zero_bot_share >= 1.0:
            raise DataError("infeasible config: zero_bot_share = 1 leaves no infected organizations")
        for mix_name in ("tls_cfg_mixture", "tls_cert_mixture"):
            mix = getattr(self, mix_name)
            if min(mix.p_zero, mix.p_one) < 0 or mix.p_zero + mix.p_one > 1 or mix.a <= 0 or mix.b <= 0:
                raise DataError(f"invalid {mix_name}")
        sm = self.service_mixture
        if min(sm.p_all_risky, sm.p_all_neutral, sm.p_all_reasonable) < 0 or \
                sm.p_all_risky + sm.p_all_neutral + sm.p_all_reasonable > 1:
            raise DataError("invalid service_mixture")
        missing = set(REGRESSORS) - set(self.true_coefficients)
        if missing:
            raise DataError(f"true_coefficients missing {sorted(missing)}")
        if self.sigma < 0 or self.industry_coefficient_spread < 0:
            raise DataError("sigma and industry_coefficient_spread must be >= 0")
        if self.employee_max < 1:
            raise DataError("employee_max must be >= 1")

    @property
    def months(self) -> list[str]:
        return [f"{self.year:04d}-{m:02d}" for m in range(1, 13)]


def industry_labels(n: int) -> list[str]:
    if n <= len(INDUSTRIES):
        return INDUSTRIES[:n]
    return INDUSTRIES + [f"Industry {i:02d}" for i in range(len(INDUSTRIES) + 1, n + 1)]


@dataclass
class GroundTruth:
    coefficients: dict[str, float]
    # per-industry coefficients actually used (equal to ``coefficients`` when spread is 0)
    industry_coefficients: dict[str, dict[str, float]]
    sigma: float
    # per-org residual draw, NaN for orgs without infections
    noise: np.ndarray
    org_ids: list[str]
    profiles: list[RiskProfile]

    def response(self, i: int) -> float:
        """Recompute ln(bot_rate) for org ``i`` from coefficients and stored noise."""
        p = self.profiles[i]
        beta = self.industry_coefficients[p.industry]
        return float(np.dot(regressor_row(p), [beta[r] for r in REGRESSORS]) + self.noise[i])


@dataclass
class SynthDataset:
    config: SynthConfig
    mode: Mode
    orgs: list[Organization]
    profiles: list[RiskProfile]
    truth: GroundTruth
    breaches: list[BreachEvent]
    ranges: list[IpRange] = field(default_factory=list)
    observations: Optional[Observations] = None


@dataclass
class _Structure:
    """Integer scaffolding behind every fraction."""

    n_tls: np.ndarray
    k_cfg: np.ndarray
    k_cert: np.ndarray
    n_svc: np.ndarray
    svc_counts: np.ndarray  # (n, 3): risky, neutral, reasonable


def _draw_mixture(rng, n_services: np.ndarray, mix: FractionMixture) -> np.ndarray:
    n = n_services.size
    u = rng.random(n)
    middle = rng.beta(mix.a, mix.b, n)
    k = rng.binomial(np.maximum(n_services, 0), middle)
    k = np.where(u < mix.p_zero, 0, k)
    k = np.where((u >= mix.p_zero) & (u < mix.p_zero + mix.p_one), n_services, k)
    return np.where(n_services > 0, k, 0)


def _service_count(rng, employees: np.ndarray, scale: float) -> np.ndarray:
    lam = scale * (employees / 500.0) ** 0.3
    return np.minimum(1 + rng.poisson(lam), 60)


def _draw_structure(rng, cfg: SynthConfig, employees: np.ndarray) -> _Structure:
    n = employees.size
    n_tls = _service_count(rng, employees, 4.0)
    n_tls = np.where(rng.random(n) < cfg.no_tls_share, 0, n_tls)
    k_cfg = _draw_mixture(rng, n_tls, cfg.tls_cfg_mixture)
    k_cert = _draw_mixture(rng, n_tls, cfg.tls_cert_mixture)

    n_svc = _service_count(rng, employees, 5.0)
    n_svc = np.where(rng.random(n) < cfg.no_services_share, 0, n_svc)
    sm = cfg.service_mixture
    u = rng.random(n)
    shares = rng.dirichlet(sm.dirichlet, n)
    counts = np.array([rng.multinomial(int(m), s) for m, s in zip(n_svc, shares)]).reshape(n, 3)
    edges = np.cumsum([sm.p_all_risky, sm.p_all_neutral, sm.p_all_reasonable])
    for col, (lo, hi) in enumerate(zip(np.r_[0.0, edges[:-1]], edges)):
        pure = (u >= lo) & (u < hi)
        counts[pure] = 0
        counts[pure, col] = n_svc[pure]
    return _Structure(n_tls, k_cfg, k_cert, n_svc, counts)


def _ratio(k: np.ndarray, n: np.ndarray) -> list[float]:
    return [k_i / n_i if n_i else 0.0 for k_i, n_i in zip(k.tolist(), n.tolist())]


def generate_dataset(config: SynthConfig, mode: Mode | str = Mode.Profiles) -> SynthDataset:
    """Draw a dataset; ``Events`` mode also expands it into observation records."""
    config.validate()
    mode = Mode(mode)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0]))
    n = config.n_orgs
    labels = industry_labels(config.n_industries)

    industry_idx = rng.integers(0, config.n_industries, n)
    employees = np.exp(rng.normal(config.employee_log_mean, config.employee_log_sd, n))
    employees = np.clip(np.rint(employees), 1, config.employee_max).astype(int)
    infected = rng.random(n) >= config.zero_bot_share

    p2p_present = np.where(infected,
                           rng.random(n) >= config.zero_p2p_given_bots,
                           rng.random(n) < config.p2p_share_without_bots)
    p2p_draw = np.exp(rng.normal(config.p2p_log_mean, config.p2p_log_sd, n))
    p2p_rate = np.where(p2p_present, p2p_draw, 0.0)

    s = _draw_structure(rng, config, employees)
    cfg_frac = _ratio(s.k_cfg, s.n_tls)
    cert_frac = _ratio(s.k_cert, s.n_tls)
    risky = _ratio(s.svc_counts[:, 0], s.n_svc)
    neutral = _ratio(s.svc_counts[:, 1], s.n_svc)
    reasonable = _ratio(s.svc_counts[:, 2], s.n_svc)

    base = np.array([config.true_coefficients[r] for r in REGRESSORS])
    spread = config.industry_coefficient_spread
    ind_beta = {}
    for lab in labels:
        offset = rng.normal(0.0, spread, base.size) if spread > 0 else np.zeros(base.size)
        ind_beta[lab] = base + offset

    eps = rng.normal(0.0, 1.0, n) * config.sigma
    noise = np.where(infected, eps, np.nan)

    orgs, profiles = [], []
    width = max(5, len(str(n)))
    for i in range(n):
        org_id = f"org{i + 1:0{width}d}"
        industry = labels[industry_idx[i]]
        t = float(p2p_rate[i])
        x = [1.0 if t == 0 else 0.0, math.log(t) if t > 0 else 0.0,
             cfg_frac[i], cert_frac[i], risky[i], reasonable[i], 1.0]
        bot = math.exp(float(np.dot(x, ind_beta[industry])) + noise[i]) if infected[i] else 0.0
        orgs.append(Organization(org_id, f"Synthetic Org {i + 1}", industry, int(employees[i])))
        profiles.append(RiskProfile(
            org_id=org_id, industry=industry, employees=int(employees[i]),
            bot_rate=bot, bot_present=bot > 0, p2p_rate=t, p2p_present=t > 0,
            tls_cfg_frac=cfg_frac[i], tls_cert_frac=cert_frac[i],
            risky_frac=risky[i], neutral_frac=neutral[i], reasonable_frac=reasonable[i],
            n_tls_services=int(s.n_tls[i]) * 12, n_classified_services=int(s.n_svc[i]) * 12,
        ))

    breach_p = np.where(infected, config.breach_rate_with_bots, config.breach_rate_without_bots)
    breached = rng.random(n) < breach_p
    breaches = [BreachEvent(orgs[i].org_id, config.year) for i in np.flatnonzero(breached)]

    truth = GroundTruth(
        coefficients={r: float(config.true_coefficients[r]) for r in REGRESSORS},
        industry_coefficients={lab: dict(zip(REGRESSORS, map(float, b))) for lab, b in ind_beta.items()},
        sigma=config.sigma, noise=noise, org_ids=[o.org_id for o in orgs], profiles=profiles,
    )
    ds = SynthDataset(config, mode, orgs, profiles, truth, breaches)
    if mode is Mode.Events:
        ds.ranges, ds.observations = _expand_events(config, orgs, profiles, s)
    return ds


# -- events expansion --

_START = int(ipaddress.IPv4Address("16.0.0.0"))
_UNMAPPED = int(ipaddress.IPv4Address("203.0.113.0"))


def _pow2_at_least(x: int) -> int:
    return 1 << max(2, (max(1, x) - 1).bit_length())


def _split_months(total: int, rng) -> np.ndarray:
    per = np.full(12, total // 12)
    extra = total % 12
    if extra:
        per[rng.choice(12, extra, replace=False)] += 1
    return per


def _tls_obs(ip, month_idx, year, cfg_err, cert_err) -> TlsObservation:
    scan = dt.date(year, month_idx, 15)
    month = f"{year:04d}-{month_idx:02d}"
    fields = dict(
        ip=ip, port=443, month=month, scan_date=scan, tls_version=TlsVersion.TLSv1_2,
        heartbleed=False, freak=False, dh_bits=2048, dh_common_prime=False,
        key_algo=KeyAlgo.RSA, key_bits=2048, sig_algo=SigAlgo.SHA256_OR_BETTER,
        not_before=dt.date(year - 1, 1, 1), not_after=dt.date(year + 1, 12, 31),
        self_signed=False, nonstandard_root=False, chain_broken=False,
    )
    if cfg_err is not None:
        fields.update([
            {"tls_version": TlsVersion.SSLv3},
            {"heartbleed": True},
            {"freak": True},
            {"dh_bits": 1024},
            {"dh_common_prime": True},
        ][cfg_err])
    if cert_err is not None:
        fields.update([
            {"self_signed": True},
            {"not_after": dt.date(year - 1, 6, 30)},
            {"not_before": dt.date(year + 1, 1, 1), "not_after": dt.date(year + 2, 1, 1)},
            {"nonstandard_root": True},
            {"chain_broken": True},
            {"key_bits": 1024},
            {"key_algo": KeyAlgo.ECC, "key_bits": 192},
            {"sig_algo": SigAlgo.SHA1},
        ][cert_err])
    return TlsObservation(**fields)


def _expand_events(cfg: SynthConfig, orgs, profiles, s: _Structure):
    ranges: list[IpRange] = []
    tls, services, seeders, infections = [], [], [], []
    cursor = _START
    year = cfg.year
    for i, (org, prof) in enumerate(zip(orgs, profiles)):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, i]))
        emp12 = org.employees * 12
        days_total = max(1, round(prof.bot_rate * emp12)) if prof.bot_rate > 0 else 0
        files_total = max(1, round(prof.p2p_rate * emp12)) if prof.p2p_rate > 0 else 0
        n_tls, n_svc = int(s.n_tls[i]), int(s.n_svc[i])
        n_uncl = int(rng.integers(0, 3))
        need = max(n_tls, n_svc + n_uncl, math.ceil(math.ceil(days_total / 12 + 1) / 28))
        size = _pow2_at_least(need)
        cursor = (cursor + size - 1) // size * size
        base = cursor
        cursor += size
        prefix = 32 - (size.bit_length() - 1)
        ranges.append(IpRange(ipaddress.IPv4Network((base, prefix)), org.org_id))
        ip = [ipaddress.IPv4Address(base + j) for j in range(size)]

        # TLS: first k_cfg services misconfigured; cert errors on a random subset
        k_cfg, k_cert = int(s.k_cfg[i]), int(s.k_cert[i])
        cert_set = set(rng.permutation(n_tls)[:k_cert].tolist()) if n_tls else set()
        cfg_kind = rng.integers(0, 5, max(n_tls, 1))
        cert_kind = rng.integers(0, 8, max(n_tls, 1))
        for m in range(1, 13):
            for j in range(n_tls):
                obs = _tls_obs(ip[j], m, year,
                               int(cfg_kind[j]) if j < k_cfg else None,
                               int(cert_kind[j]) if j in cert_set else None)
                tls.append(obs)
                if rng.random() < 0.02:
                    tls.append(obs)

        # services: one classified token per address, then a few unclassified ones
        tokens = []
        for col, cls in enumerate((ServiceClass.Risky, ServiceClass.Neutral, ServiceClass.Reasonable)):
            pool = TOKENS_BY_CLASS[cls]
            tokens += [pool[int(t)] for t in rng.integers(0, len(pool), int(s.svc_counts[i, col]))]
        tokens += [UNCLASSIFIED_TOKENS[int(t)] for t in rng.integers(0, len(UNCLASSIFIED_TOKENS), n_uncl)]
        for m in range(1, 13):
            month = f"{year:04d}-{m:02d}"
            for j, tok in enumerate(tokens):
                services.append(ServiceObservation(ip[j], SERVICE_PORTS[tok], month, tok))

        # infection days: distinct (address, day) pairs inside the block
        for m, count in enumerate(_split_months(days_total, rng), start=1):
            if not count:
                continue
            ndays = calendar.monthrange(year, m)[1]
            picks = rng.choice(size * ndays, int(count), replace=False)
            picks.sort()
            for idx in picks.tolist():
                ev = InfectionEvent(ip[idx // ndays], dt.date(year, m, idx % ndays + 1),
                                    FAMILIES[int(rng.integers(len(FAMILIES)))])
                infections.append(ev)
                if rng.random() < 0.03:
                    infections.append(replace(ev, family=FAMILIES[int(rng.integers(len(FAMILIES)))]))

        # shared files: one infohash per file-month, sometimes seeded from two addresses
        for m, count in enumerate(_split_months(files_total, rng), start=1):
            month = f"{year:04d}-{m:02d}"
            for j in range(int(count)):
                infohash = f"{i:010x}{m:02x}{j:028x}"
                seeders.append(SeederObservation(ip[j % size], infohash, month))
                if rng.random() < 0.2:
                    seeders.append(SeederObservation(ip[(j + 1) % size], infohash, month))

    # a little traffic from unmapped space, which aggregation must ignore
    noise_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))
    for k in range(5):
        d = dt.date(year, int(noise_rng.integers(1, 13)), 1)
        infections.append(InfectionEvent(ipaddress.IPv4Address(_UNMAPPED + k), d, "zeus"))
    return ranges, Observations(tls=tls, services=services, seeders=seeders, infections=infections)


# -- writing --

def write_ground_truth(path, truth: GroundTruth) -> None:
    rows = [("*", r, COEFFICIENT_LABELS[r], fmt_float(v)) for r, v in truth.coefficients.items()]
    rows.append(("*", "sigma", "sigma", fmt_float(truth.sigma)))
    for ind in sorted(truth.industry_coefficients):
        for r, v in truth.industry_coefficients[ind].items():
            rows.append((ind, r, COEFFICIENT_LABELS[r], fmt_float(v)))
    write_csv(path, ["industry", "regressor", "coefficient", "value"], rows)


def write_dataset(ds: SynthDataset, out_dir) -> list[str]:
    """Write the dataset files; returns the file names written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def track(name):
        written.append(name)
        return out / name

    write_csv(track("orgs.csv"), ["org_id", "name", "industry", "employees"],
              ((o.org_id, o.name, o.industry, o.employees) for o in ds.orgs))
    write_ground_truth(track("ground_truth.csv"), ds.truth)
    write_csv(track("truth_noise.csv"), ["org_id", "noise"],
              ((oid, "" if math.isnan(e) else fmt_float(e)) for oid, e in zip(ds.truth.org_ids, ds.truth.noise)))
    write_records(track("breaches.csv"), RecordKind.BREACHES, ds.breaches)
    if ds.mode is Mode.Profiles:
        write_profiles(track("profiles.csv"), ds.profiles)
    else:
        write_profiles(track("truth_profiles.csv"), ds.profiles)
        write_csv(track("ipmap.csv"), ["org_id", "cidr"], ((r.org_id, str(r.network)) for r in ds.ranges))
        obs = ds.observations
        write_records(track("tls.csv"), RecordKind.TLS, obs.tls)
        write_records(track("services.csv"), RecordKind.SERVICES, obs.services)
        write_records(track("seeders.csv"), RecordKind.SEEDERS, obs.seeders)
        write_records(track("infections.csv"), RecordKind.INFECTIONS, obs.infections)
    return written
