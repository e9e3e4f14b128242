import filecmp
import math

import numpy as np
import pytest

from riskpipe.errors import DataError
from riskpipe.ingest import RecordKind, parse_records
from riskpipe.models import REGRESSORS
from riskpipe.orgmap import build_ip_index, load_ipmap, load_registry
from riskpipe.riskvectors import Observations, aggregate_profiles
from riskpipe.synth import REFERENCE_COEFFICIENTS, Mode, SynthConfig, generate_dataset, write_dataset

FRACTIONS = ("tls_cfg_frac", "tls_cert_frac", "risky_frac", "neutral_frac", "reasonable_frac")


def test_reference_coefficients():
    assert REFERENCE_COEFFICIENTS == {"t0": -5.763, "t_hat": 0.841, "T_CF": 0.512, "T_CT": 0.638,
                                   "S_Ri": 0.509, "S_Re": -0.493, "intercept": -0.167}


def test_zero_bot_share():
    ps = generate_dataset(SynthConfig(n_orgs=10000, seed=0)).profiles
    share = sum(not p.bot_present for p in ps) / len(ps)
    assert abs(share - 0.67) <= 0.02


@pytest.mark.parametrize("kw", [dict(zero_bot_share=1.0), dict(n_orgs=5), dict(sigma=-1.0),
                                dict(no_tls_share=1.5)])
def test_infeasible_configs(kw):
    with pytest.raises(DataError):
        generate_dataset(SynthConfig(**kw))


def test_profiles_valid():
    ps = generate_dataset(SynthConfig(n_orgs=3000, seed=5)).profiles
    for p in ps:
        p.validate()
        assert all(0.0 <= getattr(p, f) <= 1.0 for f in FRACTIONS)
        if p.n_classified_services:
            assert abs(p.risky_frac + p.neutral_frac + p.reasonable_frac - 1) <= 1e-9
    # the point masses at 0 and 1 are present
    assert any(p.tls_cfg_frac == 0 for p in ps) and any(p.tls_cfg_frac == 1 for p in ps)


def test_ground_truth_recomputes_responses():
    ds = generate_dataset(SynthConfig(n_orgs=500, seed=9, industry_coefficient_spread=0.3))
    for i, p in enumerate(ds.profiles):
        if p.bot_present:
            assert ds.truth.response(i) == pytest.approx(math.log(p.bot_rate), rel=1e-12, abs=1e-12)
        else:
            assert math.isnan(ds.truth.noise[i])
    spread = np.array([[b[r] for r in REGRESSORS] for b in ds.truth.industry_coefficients.values()])
    assert spread.std(axis=0).min() > 0


@pytest.mark.parametrize("mode", list(Mode))
def test_same_seed_same_bytes(tmp_path, mode):
    cfg = SynthConfig(n_orgs=120, seed=3)
    a = write_dataset(generate_dataset(cfg, mode), tmp_path / "a")
    b = write_dataset(generate_dataset(cfg, mode), tmp_path / "b")
    assert a == b
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", a, shallow=False)
    assert mismatch == [] and errors == []


def test_different_seed_differs():
    a = generate_dataset(SynthConfig(n_orgs=100, seed=1)).profiles
    b = generate_dataset(SynthConfig(n_orgs=100, seed=2)).profiles
    assert a != b


def events_round_trip(tmp_path, n_orgs, seed):
    """Generate events, write them, re-read and aggregate; returns (truth, aggregated) profile pairs."""
    cfg = SynthConfig(n_orgs=n_orgs, seed=seed)
    ds = generate_dataset(cfg, Mode.Events)
    write_dataset(ds, tmp_path)
    registry = load_registry(tmp_path / "orgs.csv")
    index = build_ip_index(load_ipmap(tmp_path / "ipmap.csv"), registry)
    recs = {k: parse_records(RecordKind(k), tmp_path / f"{k}.csv") for k in ("tls", "services", "seeders", "infections")}
    assert all(r.skipped == 0 for r in recs.values())
    obs = Observations(*(recs[k].records for k in ("tls", "services", "seeders", "infections")))
    got, diag = aggregate_profiles(obs, registry, index, cfg.months)
    truth = {p.org_id: p for p in ds.profiles}
    return [(truth[p.org_id], p) for p in got], diag


def round_trip_mismatches(pairs):
    bad = []
    for want, got in pairs:
        quantum = 1.0 / (want.employees * 12)
        for f in FRACTIONS:
            if getattr(got, f) != getattr(want, f):
                bad.append((want.org_id, f, getattr(want, f), getattr(got, f)))
        for f in ("bot_rate", "p2p_rate"):
            if abs(getattr(got, f) - getattr(want, f)) > quantum * (1 + 1e-9):
                bad.append((want.org_id, f, getattr(want, f), getattr(got, f)))
        if (got.bot_present, got.p2p_present) != (want.bot_present, want.p2p_present):
            bad.append((want.org_id, "presence"))
        if (got.n_tls_services, got.n_classified_services) != (want.n_tls_services, want.n_classified_services):
            bad.append((want.org_id, "counts"))
    return bad


def test_events_round_trip(tmp_path):
    pairs, diag = events_round_trip(tmp_path, 300, 4)
    assert len(pairs) == 300
    assert round_trip_mismatches(pairs) == []
    assert diag.unattributed["infections"] == 5
