"""Acceptance criteria, one test each.

Every test prints a single ``ACCEPTANCE <n> PASS|FAIL`` line with the measured
numbers; under pytest the lines are repeated in the terminal summary. Run as a
script (``python tests/test_acceptance.py``) to get just the summary lines.
"""

import datetime as dt
import filecmp
import ipaddress
import math
import random
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from oracles import exact_mww_p, g_direct, ks_breakpoints, pearson_of_ranks  # noqa: E402
from test_synth import events_round_trip, round_trip_mismatches  # noqa: E402

from riskpipe.cli import main as cli_main  # noqa: E402
from riskpipe.ingest import InfectionEvent, SeederObservation, ServiceObservation  # noqa: E402
from riskpipe.models import (  # noqa: E402
    REGRESSORS,
    Variant,
    build_design,
    compare_models,
    effect_multiplier,
    fit_ols,
    fit_variants,
)
from riskpipe.orgmap import IpRange, Organization, build_ip_index, parse_cidr  # noqa: E402
from riskpipe.riskvectors import (  # noqa: E402
    SERVICE_CLASSES,
    Observations,
    ServiceClass,
    aggregate_profiles,
    classify_service,
    infection_days,
)
from riskpipe.stats import g_test, ks_two_sample, mann_whitney, spearman  # noqa: E402
from riskpipe.synth import REFERENCE_COEFFICIENTS, SynthConfig, generate_dataset  # noqa: E402

SEEDS = range(20)


# collected lines, echoed by the terminal-summary hook in conftest.py
SUMMARY: dict[int, str] = {}


def report(n, passed, detail):
    line = f"ACCEPTANCE {n:>2} {'PASS' if passed else 'FAIL'}: {detail}"
    SUMMARY[n] = line
    print(line, flush=True)
    return passed


# 1. coefficient recovery

def criterion_1():
    hits = {r: 0 for r in REGRESSORS}
    slowest = 0.0
    for seed in SEEDS:
        t = time.perf_counter()
        ps = generate_dataset(SynthConfig(n_orgs=5000, seed=seed)).profiles
        d = build_design(ps)
        fit = fit_ols(d.X, d.y, d.names, ci_level=0.99)
        slowest = max(slowest, time.perf_counter() - t)
        for i, r in enumerate(fit.names):
            hits[r] += fit.ci_low[i] <= REFERENCE_COEFFICIENTS[r] <= fit.ci_high[i]
    ok = all(h >= 18 for h in hits.values()) and slowest < 10.0
    counts = " ".join(f"{r}={h}" for r, h in hits.items())
    return report(1, ok, f"seeds covering truth in 99% CI (of 20): {counts}; slowest seed {slowest:.2f}s")


# 2. effect-size constants

def criterion_2():
    m1 = effect_multiplier(-5.763, 1.0)
    m2 = effect_multiplier(0.841, math.log(1.1))
    ok = abs(m1 - 0.00314) <= 5e-5 and abs(1 / m1 - 318) <= 1 and abs(m2 - 1.083) <= 1e-3
    return report(2, ok, f"exp(-5.763)={m1:.6f}, reciprocal={1 / m1:.2f}, exp(0.841 ln 1.1)={m2:.5f}")


# 3. parameter accounting

def criterion_3():
    ps = generate_dataset(SynthConfig(n_orgs=5000, seed=0, n_industries=22)).profiles
    counts = {v.value: fit_variants(ps, v).n_coefficients for v in Variant}
    ok = counts == {"Pooled": 7, "FixedEffects": 28, "Unpooled": 154}
    return report(3, ok, f"coefficients per variant: {counts}")


# 4. model selection

def criterion_4():
    pooled = sum(compare_models(generate_dataset(SynthConfig(n_orgs=5000, seed=s)).profiles).selected == "Pooled"
                 for s in SEEDS)
    unpooled = sum(compare_models(generate_dataset(
        SynthConfig(n_orgs=5000, seed=s, industry_coefficient_spread=0.5)).profiles).selected == "Unpooled"
        for s in SEEDS)
    ok = pooled >= 18 and unpooled >= 18
    return report(4, ok, f"homogeneous -> Pooled in {pooled}/20, spread 0.5 -> Unpooled in {unpooled}/20")


# 5. statistical oracles

def criterion_5():
    rng = np.random.default_rng(2024)
    sp_err = 0.0
    done = 0
    while done < 1000:
        n = int(rng.integers(5, 60))
        x, y = rng.integers(0, 8, n), rng.integers(0, 8, n)
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            continue
        sp_err = max(sp_err, abs(spearman(x, y).statistic - pearson_of_ranks(x, y)))
        done += 1
    mww_err = 0.0
    for _ in range(200):
        a, b = rng.normal(size=6), rng.normal(rng.uniform(0, 1.5), 1, size=6)
        mww_err = max(mww_err, abs(mann_whitney(a, b).p_value - exact_mww_p(a, b)))
    ks_bad = 0
    for _ in range(200):
        n1, n2 = rng.integers(5, 80, 2)
        a = np.round(rng.normal(size=n1), 1)
        b = np.round(rng.normal(rng.uniform(-1, 1), 1, size=n2), 1)
        ks_bad += ks_two_sample(a, b).statistic != ks_breakpoints(a, b)
    table = [[50, 10], [10, 50]]
    g, g_ref = g_test(table).statistic, g_direct(table)
    ok = sp_err < 1e-12 and mww_err <= 0.02 and ks_bad == 0 and abs(g - g_ref) < 1e-9
    return report(5, ok, f"spearman max err {sp_err:.1e}; MWW max |p-exact| {mww_err:.4f}; "
                         f"KS mismatches {ks_bad}/200; G={g:.6f} vs direct {g_ref:.6f}")


# 6. null calibration

def criterion_6():
    rng = np.random.default_rng(6)
    sims = 5000
    rates = {}
    rates["spearman"] = np.mean([spearman(rng.normal(size=50), rng.normal(size=50)).p_value < 0.05
                                 for _ in range(sims)])
    rates["mww"] = np.mean([mann_whitney(rng.normal(size=50), rng.normal(size=50)).p_value < 0.05
                            for _ in range(sims)])
    rej = 0
    for _ in range(sims):
        a, b = rng.random(500) < 0.3, rng.random(500) < 0.5
        t = [[int(np.sum(a & b)), int(np.sum(a & ~b))], [int(np.sum(~a & b)), int(np.sum(~a & ~b))]]
        rej += g_test(t).p_value < 0.05
    rates["g"] = rej / sims
    rates["ks"] = np.mean([ks_two_sample(rng.normal(size=500), rng.normal(size=500)).p_value < 0.05
                           for _ in range(sims)])
    ok = all(abs(r - 0.05) <= 0.02 for r in rates.values())
    return report(6, ok, "rejection rates at alpha=0.05: " + ", ".join(f"{k}={v:.4f}" for k, v in rates.items()))


# 7. pipeline round trip

def criterion_7(tmp_path):
    pairs, _ = events_round_trip(tmp_path, 1000, 7)
    bad = round_trip_mismatches(pairs)
    return report(7, not bad and len(pairs) == 1000,
                  f"{len(pairs)} orgs re-aggregated, {len(bad)} outside quantum" + (f"; first {bad[0]}" if bad else ""))


# 8. aggregation unit checks

def criterion_8():
    idx = build_ip_index([IpRange(parse_cidr("10.0.0.0/24"), "A")])
    ip = ipaddress.IPv4Address("10.0.0.7")
    seven = infection_days([InfectionEvent(ip, dt.date(2015, 3, d), "zeus") for d in range(1, 8)], idx).get("A", "2015-03")
    one = infection_days([InfectionEvent(ip, dt.date(2015, 3, 4), "zeus")], idx).get("A", "2015-03")
    service_table = {**{t: ServiceClass.Risky for t in "FTP TELNET SMTP POP3 SUNRPC NETBIOS IMAP SNMP SMB MYSQL MSSQL RDP POSTGRES".split()},
              **{t: ServiceClass.Neutral for t in "DNS HTTP NTP".split()},
              **{t: ServiceClass.Reasonable for t in "SSH HTTPS SMTPS IMAPS POP3S".split()}}
    services_ok = len(service_table) == 21 and all(classify_service(t) is c for t, c in service_table.items()) \
        and SERVICE_CLASSES == service_table
    # duplicate-row invariance on fuzzed inputs
    registry = {"A": Organization("A", "a", "R", 7)}
    rnd = random.Random(8)
    months = [f"2015-{m:02d}" for m in range(1, 13)]
    dup_fail = 0
    for _ in range(200):
        def addr():
            return ipaddress.IPv4Address((10 << 24) + rnd.randrange(0, 300))
        inf = [InfectionEvent(addr(), dt.date(2015, rnd.randint(1, 12), rnd.randint(1, 28)), rnd.choice("xy"))
               for _ in range(rnd.randint(0, 40))]
        seeds = [SeederObservation(addr(), rnd.choice("abc"), rnd.choice(months)) for _ in range(rnd.randint(0, 20))]
        svc = [ServiceObservation(addr(), rnd.choice([22, 80]), rnd.choice(months), rnd.choice(["SSH", "HTTP", "FTP"]))
               for _ in range(rnd.randint(0, 20))]
        obs = Observations(services=svc, seeders=seeds, infections=inf)

        def dup(rows):
            rows = rows + [r for r in rows if rnd.random() < 0.5]
            rnd.shuffle(rows)
            return rows
        base, _ = aggregate_profiles(obs, registry, idx, months)
        other, _ = aggregate_profiles(Observations(services=dup(svc), seeders=dup(seeds), infections=dup(inf)),
                                      registry, idx, months)
        dup_fail += base != other
    ok = seven == 7 and one == 1 and services_ok and dup_fail == 0
    return report(8, ok, f"7-day -> {seven}, 1-day -> {one}, 21-service table {'exact' if services_ok else 'WRONG'}, "
                         f"duplicate-invariance failures {dup_fail}/200")


# 9. IP resolution

def criterion_9():
    rng = np.random.default_rng(9)
    seen, bases, plens = set(), [], []
    while len(bases) < 10_000:
        plen = int(rng.integers(8, 33))
        mask = ((1 << 32) - 1) ^ ((1 << (32 - plen)) - 1)
        # half the ranges cluster in a few /8s so nesting is frequent
        addr = int(rng.integers(0, 1 << 32)) if rng.random() < 0.5 else (int(rng.integers(10, 13)) << 24) | int(rng.integers(0, 1 << 24))
        key = (addr & mask, plen)
        if key not in seen:
            seen.add(key)
            bases.append(addr & mask)
            plens.append(plen)
    bases_a = np.array(bases, dtype=np.int64)
    plens_a = np.array(plens, dtype=np.int64)
    masks = ((1 << 32) - 1) ^ ((1 << (32 - plens_a)) - 1)
    idx = build_ip_index([IpRange(ipaddress.IPv4Network((b, p)), f"org{i}") for i, (b, p) in enumerate(zip(bases, plens))])
    # half uniform over the address space, half drawn from inside a random range
    pick = rng.integers(0, 10_000, 5000)
    inside = bases_a[pick] + rng.integers(0, 1 << 32, 5000) % (1 << (32 - plens_a[pick]))
    ips = np.concatenate([rng.integers(0, 1 << 32, 5000), inside])
    mismatches = hits = 0
    for chunk in np.array_split(ips, 20):
        match = (chunk[:, None] & masks[None, :]) == bases_a[None, :]
        score = np.where(match, plens_a[None, :], -1)
        best = score.argmax(axis=1)
        for ip, row, b in zip(chunk, score, best):
            want = f"org{b}" if row[b] >= 0 else None
            got = idx.lookup(int(ip))
            hits += want is not None
            mismatches += got != want
    return report(9, mismatches == 0, f"{len(ips)} lookups over {len(bases)} CIDRs, {hits} resolved, {mismatches} mismatches")


# 10. determinism

def _chain(out: Path):
    d = str(out)
    codes = [
        cli_main(["synth", "--orgs", "1000", "--seed", "7", "--mode", "events", "--out", d]),
        cli_main(["aggregate", "--data", d, "--out", d]),
        cli_main(["analyze", "--profiles", f"{d}/profiles.csv", "--breaches", f"{d}/breaches.csv", "--out", d]),
        cli_main(["report", "--profiles", f"{d}/profiles.csv", "--breaches", f"{d}/breaches.csv", "--out", d]),
    ]
    return codes


def _tree_diff(a: Path, b: Path):
    cmp = filecmp.dircmp(a, b)
    diffs = cmp.left_only + cmp.right_only
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return diffs + mismatch + errors, len(cmp.common_files)


def criterion_10(tmp_path):
    codes = _chain(tmp_path / "run1") + _chain(tmp_path / "run2")
    diffs, n = _tree_diff(tmp_path / "run1", tmp_path / "run2")
    ok = set(codes) == {0} and not diffs
    return report(10, ok, f"exit codes {codes}; {n} files compared, differing: {diffs or 'none'}")


# -- pytest wrappers --

def test_criterion_1_coefficient_recovery():
    assert criterion_1()


def test_criterion_2_effect_constants():
    assert criterion_2()


def test_criterion_3_parameter_accounting():
    assert criterion_3()


def test_criterion_4_model_selection():
    assert criterion_4()


def test_criterion_5_statistical_oracles():
    assert criterion_5()


def test_criterion_6_null_calibration():
    assert criterion_6()


def test_criterion_7_round_trip(tmp_path):
    assert criterion_7(tmp_path)


def test_criterion_8_aggregation():
    assert criterion_8()


def test_criterion_9_ip_resolution():
    assert criterion_9()


def test_criterion_10_determinism(tmp_path):
    assert criterion_10(tmp_path)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as tmp:
        results = [criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6(),
                   criterion_7(Path(tmp) / "c7"), criterion_8(), criterion_9(), criterion_10(Path(tmp) / "c10")]
    sys.exit(0 if all(results) else 1)
