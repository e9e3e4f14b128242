import datetime as dt
import ipaddress
import sys

import pytest

from riskpipe.ingest import KeyAlgo, SigAlgo, TlsObservation, TlsVersion
from riskpipe.riskvectors import RiskProfile


def make_profile(org_id="o1", industry="Retail", employees=100, bot_rate=0.0, p2p_rate=0.0,
                 tls_cfg_frac=0.0, tls_cert_frac=0.0, risky_frac=0.0, neutral_frac=1.0,
                 reasonable_frac=0.0, n_tls=1, n_svc=1) -> RiskProfile:
    return RiskProfile(org_id, industry, employees, bot_rate, bot_rate > 0, p2p_rate, p2p_rate > 0,
                       tls_cfg_frac, tls_cert_frac, risky_frac, neutral_frac, reasonable_frac, n_tls, n_svc)


def clean_tls(**overrides) -> TlsObservation:
    base = dict(
        ip=ipaddress.IPv4Address("10.0.0.1"), port=443, month="2015-03", scan_date=dt.date(2015, 3, 10),
        tls_version=TlsVersion.TLSv1_2, heartbleed=False, freak=False, dh_bits=2048, dh_common_prime=False,
        key_algo=KeyAlgo.RSA, key_bits=2048, sig_algo=SigAlgo.SHA256_OR_BETTER,
        not_before=dt.date(2015, 1, 1), not_after=dt.date(2016, 1, 1), self_signed=False,
        nonstandard_root=False, chain_broken=False,
    )
    base.update(overrides)
    return TlsObservation(**base)


@pytest.fixture
def profile_factory():
    return make_profile


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "SUMMARY", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
