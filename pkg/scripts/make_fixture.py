#!/usr/bin/env python3
"""Regenerate the 3-country end-to-end fixture under tests/data/fixture/.

The fixture is fully deterministic: three countries (US, DE, TH), twenty
popular sites each, synthetic providers with known hosting/DNS/TLD/CA
splits, plus the matching lookup tables. One US domain is present in the
toplist but missing from the measurements, one US site resolves to an
address with no covering prefix, one TH site sits on an anycast prefix,
and one TH site has no TLS issuer, so the annotation counters are all
exercised.
"""

from __future__ import annotations

import json
from pathlib import Path

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "tests" / "data" / "fixture"

TS = "2024-05-01T00:00:00+00:00"

# org -> (asn, ip prefix base, hq country, continent)
ORGS = {
    "CloudNine": (65001, "198.51.100.", "US", "NA"),
    "HostCo": (65002, "203.0.113.", "US", "NA"),
    "RheinHost": (65003, "192.0.2.", "DE", "EU"),
    "SiamWeb": (65004, "10.10.0.", "TH", "AS"),
    "SmallUS": (65005, "172.16.0.", "US", "NA"),
    "BayerNet": (65006, "10.20.0.", "DE", "EU"),
    "NameGrid": (65007, "10.30.0.", "US", "NA"),
    "RheinDNS": (65008, "10.40.0.", "DE", "EU"),
}

CA_OWNERS = {
    "FreeCert Authority": ("FreeCert", "US"),
    "Trusty CA GmbH": ("Trusty", "DE"),
    "Siam Secure Co": ("SiamSecure", "TH"),
}

# per country: list of (hosting_org, dns_org, tld, issuer) repeated per count
PLANS = {
    "US": (
        [("CloudNine", "NameGrid", "com", "FreeCert Authority")] * 10
        + [("HostCo", "CloudNine", "com", "FreeCert Authority")] * 5
        + [("HostCo", "CloudNine", "org", "FreeCert Authority")] * 1
        + [("RheinHost", "CloudNine", "org", "Trusty CA GmbH")] * 2
        + [("SmallUS", "HostCo", "us", "Trusty CA GmbH")] * 2
    ),
    "DE": (
        [("RheinHost", "RheinDNS", "de", "Trusty CA GmbH")] * 8
        + [("CloudNine", "RheinDNS", "com", "FreeCert Authority")] * 6
        + [("BayerNet", "RheinDNS", "de", "Trusty CA GmbH")] * 1
        + [("BayerNet", "NameGrid", "org", "Trusty CA GmbH")] * 3
        + [("HostCo", "NameGrid", "com", "FreeCert Authority")] * 2
    ),
    "TH": (
        [("CloudNine", "CloudNine", "com", "FreeCert Authority")] * 12
        + [("CloudNine", "CloudNine", "th", "FreeCert Authority")] * 2
        + [("SiamWeb", "SiamWeb", "th", "Siam Secure Co")] * 4
        + [("HostCo", "NameGrid", "com", "Siam Secure Co")] * 2
    ),
}

# toplist rows present but absent from measurements.jsonl
MISSING_FROM_MEASUREMENTS = {"us-site-20.us"}
# hosting address replaced with one that no pfx2as row covers
UNKNOWN_PREFIX_SITES = {"us-site-16.org"}
UNKNOWN_PREFIX_IP = "10.99.0.1"
# hosting address moved into the anycast half of CloudNine's block
ANYCAST_SITES = {"th-site-01.com"}
# TLS probe failed: no issuer recorded
NO_ISSUER_SITES = {"th-site-19.com"}


def main() -> None:
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    toplist = ["country,rank_bucket,origin"]
    measurements = []
    host_counter = {org: 0 for org in ORGS}
    dns_counter = {org: 100 for org in ORGS}

    for country, plan in PLANS.items():
        for index, (host_org, dns_org, tld, issuer) in enumerate(plan, 1):
            domain = f"{country.lower()}-site-{index:02d}.{tld}"
            bucket = 1000 if index <= 10 else 5000
            toplist.append(f"{country},{bucket},https://{domain}")
            if domain in MISSING_FROM_MEASUREMENTS:
                continue
            if domain in UNKNOWN_PREFIX_SITES:
                host_ip = UNKNOWN_PREFIX_IP
            elif domain in ANYCAST_SITES:
                host_ip = ORGS[host_org][1] + "200"  # inside the /25 anycast half
            else:
                host_counter[host_org] += 1
                host_ip = ORGS[host_org][1] + str(host_counter[host_org])
            dns_counter[dns_org] += 1
            dns_ip = ORGS[dns_org][1] + str(dns_counter[dns_org] % 250)
            ns_name = f"ns1.{domain}"
            measurements.append(
                json.dumps(
                    {
                        "domain": domain,
                        "a": [host_ip],
                        "ns": [ns_name],
                        "ns_a": {ns_name: [dns_ip]},
                        "issuer": None if domain in NO_ISSUER_SITES else issuer,
                        "ts": TS,
                    },
                    sort_keys=True,
                )
            )

    (FIXTURE_DIR / "toplist.csv").write_text("\n".join(toplist) + "\n")
    (FIXTURE_DIR / "measurements.jsonl").write_text("\n".join(measurements) + "\n")

    pfx2as = [f"{base}0 24 {asn}" for asn, base, _, _ in ORGS.values()]
    (FIXTURE_DIR / "pfx2as.txt").write_text("\n".join(sorted(pfx2as)) + "\n")

    as2org = [
        f"{asn}\torg-{name.lower()}\t{name}\t{hq}"
        for name, (asn, _, hq, _) in sorted(ORGS.items())
    ]
    (FIXTURE_DIR / "as2org.tsv").write_text("\n".join(as2org) + "\n")

    geo = ["start_ip,end_ip,country,continent"]
    for name, (_, base, hq, continent) in sorted(ORGS.items()):
        # CloudNine's upper half (.128+) is the anycast range: keep it out
        # of the geo table so anycast precedence is what labels it
        end = "127" if name == "CloudNine" else "255"
        geo.append(f"{base}0,{base}{end},{hq},{continent}")
    geo.append("10.99.0.0,10.99.0.255,US,NA")
    (FIXTURE_DIR / "geo.csv").write_text("\n".join(geo) + "\n")

    (FIXTURE_DIR / "anycast.txt").write_text("198.51.100.128/25\n")

    ca_rows = ["issuer_org,ca_owner,country"]
    for issuer, (owner, hq) in sorted(CA_OWNERS.items()):
        ca_rows.append(f"{issuer},{owner},{hq}")
    (FIXTURE_DIR / "ca_owners.csv").write_text("\n".join(ca_rows) + "\n")

    countries = [
        "code,name,subregion,continent",
        "DE,Germany,Western Europe,EU",
        "TH,Thailand,South-eastern Asia,AS",
        "US,United States,Northern America,NA",
    ]
    (FIXTURE_DIR / "countries.csv").write_text("\n".join(countries) + "\n")
    print(f"fixture written to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
