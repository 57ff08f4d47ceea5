import json
import os
from pathlib import Path

import pytest

from mockservers import MockDnsServer
from webcentral.cli import main

FIXTURE = Path(__file__).parent / "data" / "fixture"


def fixture_args():
    return [
        "--toplist", str(FIXTURE / "toplist.csv"),
        "--measurements", str(FIXTURE / "measurements.jsonl"),
        "--pfx2as", str(FIXTURE / "pfx2as.txt"),
        "--as2org", str(FIXTURE / "as2org.tsv"),
        "--geo", str(FIXTURE / "geo.csv"),
        "--anycast", str(FIXTURE / "anycast.txt"),
        "--ca-owners", str(FIXTURE / "ca_owners.csv"),
        "--countries", str(FIXTURE / "countries.csv"),
    ]


@pytest.fixture
def annotated(tmp_path):
    records = tmp_path / "records.jsonl"
    stats = tmp_path / "stats.json"
    code = main(["annotate", *fixture_args(), "--out", str(records),
                 "--stats", str(stats)])
    assert code == 0
    return records, stats


class TestCollectCommand:
    ZONES = {
        "site.example.com": {"a": ["198.51.100.9"], "ns": ["ns1.example.com"]},
        "ns1.example.com": {"a": ["198.51.100.53"]},
    }

    def test_writes_output(self, tmp_path):
        domains = tmp_path / "domains.txt"
        domains.write_text("site.example.com\nmissing.example.com\n")
        out = tmp_path / "m.jsonl"
        stats_path = tmp_path / "stats.json"
        with MockDnsServer(self.ZONES) as mock:
            code = main([
                "collect",
                "--domains", str(domains),
                "--resolver", f"{mock.address[0]}:{mock.address[1]}",
                "--out", str(out),
                "--no-tls",
                "--fixed-ts", "2024-06-01T00:00:00+00:00",
                "--stats", str(stats_path),
            ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 2
        assert json.loads(lines[0])["domain"] == "site.example.com"
        stats = json.loads(stats_path.read_text())
        assert stats == {"domains": 2, "resolved": 1, "tls_ok": 0, "failed": 1}

    def test_missing_input_file(self, tmp_path, capsys):
        code = main([
            "collect", "--domains", str(tmp_path / "nope.txt"),
            "--resolver", "127.0.0.1:5300", "--out", str(tmp_path / "m.jsonl"),
        ])
        assert code != 0
        assert "nope.txt" in capsys.readouterr().err

    def test_zero_inflight_usage_error(self, tmp_path, capsys):
        domains = tmp_path / "domains.txt"
        domains.write_text("site.example.com\n")
        code = main([
            "collect", "--domains", str(domains), "--resolver", "127.0.0.1:5300",
            "--out", str(tmp_path / "m.jsonl"), "--max-inflight", "0",
        ])
        assert code != 0
        assert "max-inflight" in capsys.readouterr().err

    def test_env_override(self, tmp_path, monkeypatch):
        domains = tmp_path / "domains.txt"
        domains.write_text("site.example.com\n")
        out = tmp_path / "m.jsonl"
        with MockDnsServer(self.ZONES) as mock:
            monkeypatch.setenv(
                "WEBCENTRAL_RESOLVER", f"{mock.address[0]}:{mock.address[1]}"
            )
            code = main([
                "collect", "--domains", str(domains), "--out", str(out),
                "--no-tls", "--fixed-ts", "t",
            ])
        assert code == 0
        assert json.loads(out.read_text().splitlines()[0])["a"] == ["198.51.100.9"]


class TestAnnotateCommand:
    def test_fixture_run(self, annotated):
        records, stats = annotated
        lines = records.read_text().splitlines()
        assert len(lines) == 59
        doc = json.loads(stats.read_text())
        assert doc["missing_measurement"] == 1
        assert doc["layer_unknown"] == {"ca": 1, "hosting": 1}

    def test_corrupt_pfx2as(self, tmp_path, capsys):
        bad = tmp_path / "pfx2as.txt"
        bad.write_text("one two three four\n" * 10)
        args = fixture_args()
        args[args.index("--pfx2as") + 1] = str(bad)
        code = main(["annotate", *args, "--out", str(tmp_path / "r.jsonl")])
        assert code == 1
        err = capsys.readouterr().err
        assert "malformed" in err

    def test_layer_restriction(self, tmp_path):
        records = tmp_path / "records.jsonl"
        code = main(["annotate", *fixture_args(), "--out", str(records),
                     "--stats", str(tmp_path / "s.json"),
                     "--layers", "hosting,tld"])
        assert code == 0
        docs = [json.loads(l) for l in records.read_text().splitlines()]
        assert all("dns_org" not in d and "ca_owner" not in d for d in docs)
        assert any("hosting_org" in d for d in docs)

    def test_idempotent(self, tmp_path):
        out_a = tmp_path / "a.jsonl"
        out_b = tmp_path / "b.jsonl"
        for out in (out_a, out_b):
            assert main(["annotate", *fixture_args(), "--out", str(out),
                         "--stats", str(tmp_path / (out.stem + ".json"))]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()


class TestScoreCommand:
    def test_scores_with_band_and_oracle(self, annotated, tmp_path, capsys):
        records, _ = annotated
        out = tmp_path / "scores"
        code = main(["score", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--out", str(out), "--band", "--oracle-check"])
        assert code == 0
        header, first, *_ = (out / "scores_hosting.csv").read_text().splitlines()
        assert header == "rank,country,continent,score,band"
        assert first == "1,TH,AS,0.4900,highly_concentrated"

    def test_json_format(self, annotated, tmp_path):
        records, _ = annotated
        out = tmp_path / "scores.json"
        code = main(["score", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--out", str(out), "--format", "json"])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["scores"]["hosting"]["rankings"] == ["TH", "US", "DE"]

    def test_layer_selection(self, annotated, tmp_path):
        records, _ = annotated
        out = tmp_path / "scores"
        code = main(["score", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--out", str(out), "--layers", "hosting,tld"])
        assert code == 0
        assert (out / "scores_hosting.csv").exists()
        assert not (out / "scores_dns.csv").exists()


class TestClassifyCommand:
    def test_class_csv_and_features(self, annotated, tmp_path):
        records, _ = annotated
        out = tmp_path / "classes.csv"
        features = tmp_path / "features.csv"
        code = main(["classify", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--out", str(out), "--dump-features", str(features)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "provider,cluster_id,exemplar,class"
        assert len(lines) > 1
        feature_lines = features.read_text().splitlines()
        assert feature_lines[0] == "provider,usage,endemicity_ratio"
        assert any(l.startswith("CloudNine,") for l in feature_lines)

    def test_bad_rules_file(self, annotated, tmp_path, capsys):
        records, _ = annotated
        rules = tmp_path / "rules.conf"
        rules.write_text("er_regional_min = 0.2\nlgpr_er_min = 0.4\n")
        code = main(["classify", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--out", str(tmp_path / "c.csv"), "--rules", str(rules)])
        assert code == 1
        assert "overlap" in capsys.readouterr().err


class TestReportCommand:
    def test_json_single_document(self, annotated, tmp_path):
        records, stats = annotated
        out = tmp_path / "report.json"
        code = main(["report", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--stats", str(stats), "--out", str(out),
                     "--format", "json"])
        assert code == 0
        doc = json.loads(out.read_text())
        assert set(doc["scores"]) == {"hosting", "dns", "tld", "ca"}
        assert doc["annotation_stats"]["annotated"] == 59

    def test_exclusions_listed(self, annotated, tmp_path):
        records, _ = annotated
        # a countries file with an extra country that has no records
        countries = tmp_path / "countries.csv"
        countries.write_text(
            (FIXTURE / "countries.csv").read_text() + "FR,France,Western Europe,EU\n"
        )
        out = tmp_path / "report"
        code = main(["report", "--records", str(records),
                     "--countries", str(countries), "--out", str(out)])
        assert code == 0
        text = (out / "scores_hosting.csv").read_text()
        assert "# excluded: no usable records" in text
        assert "FR" in text.splitlines()


class TestManifest:
    def test_manifest_supplies_paths_flags_win(self, annotated, tmp_path):
        records, _ = annotated
        manifest = tmp_path / "run.manifest"
        manifest.write_text(
            f"records = {records}\n"
            f"countries = {FIXTURE / 'countries.csv'}\n"
            f"out = {tmp_path / 'from_manifest'}\n"
            "format = json\n"
        )
        flag_out = tmp_path / "from_flag"
        code = main(["score", "--manifest", str(manifest), "--out", str(flag_out),
                     "--format", "csv"])
        assert code == 0
        assert (flag_out / "scores_hosting.csv").exists()
        assert not (tmp_path / "from_manifest").exists()

    def test_unknown_manifest_key(self, tmp_path, capsys):
        manifest = tmp_path / "run.manifest"
        manifest.write_text("bogus = 1\n")
        code = main(["score", "--manifest", str(manifest)])
        assert code == 1
        assert "unknown manifest key" in capsys.readouterr().err

    def test_manifest_path_must_exist(self, tmp_path, capsys):
        manifest = tmp_path / "run.manifest"
        manifest.write_text(f"records = {tmp_path / 'ghost.jsonl'}\n")
        code = main(["score", "--manifest", str(manifest),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--out", str(tmp_path / "s")])
        assert code == 1
        assert "input not found" in capsys.readouterr().err


class TestOracleCheckCommand:
    def test_passes_on_fixture(self, annotated, capsys):
        records, _ = annotated
        code = main(["oracle-check", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv")])
        assert code == 0
        assert "oracle check passed" in capsys.readouterr().err

    def test_sampling(self, annotated, capsys):
        records, _ = annotated
        code = main(["oracle-check", "--records", str(records),
                     "--countries", str(FIXTURE / "countries.csv"),
                     "--sample", "2", "--seed", "7"])
        assert code == 0
