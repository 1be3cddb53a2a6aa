"""Command line: exit codes, file headers, manifests and reproducibility."""

import json
import subprocess
import sys

import pytest

from fbmclt import __version__
from fbmclt.cli import EXIT_CONFIG, EXIT_OK, EXIT_REGIME, EXIT_VERIFY, main
from fbmclt.config import ConfigError, load_config, parse_config_text

BASE = "H = 0.75\nd = 2\nt1 = 1.0\nt2 = 1.0\n"
FAST = ("n_values = 4, 8\nreplications = 16\nepsilon_schedule = 0.2\n"
        "qmc_points = 1024\nqmc_replicates = 4\n")


@pytest.fixture
def cfg(tmp_path):
    def write(text=BASE + FAST, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


class TestConfigParsing:
    def test_minimal(self):
        rc = parse_config_text(BASE)
        assert rc.params.H == 0.75 and rc["replications"] == 1000
        assert rc.experiment().n_values == (16, 32, 64)

    def test_comments_and_lists(self):
        rc = parse_config_text(BASE + "n_values = 8, 16  # two sizes\na1_pairs = 1:1, 1:10\n")
        assert rc["n_values"] == (8, 16) and rc["a1_pairs"] == ((1, 1), (1, 10))

    def test_all_problems_reported(self):
        with pytest.raises(ConfigError) as info:
            parse_config_text("H = 0.75\nfoo = 1\nd = two\nd = 3\njunk\n")
        text = str(info.value)
        for needle in ("unknown key 'foo'", "duplicate key 'd'", "bad value for 'd'",
                       "expected 'key = value'", "missing required key 't1'"):
            assert needle in text

    @pytest.mark.parametrize("extra,needle", [("H = 1.5", "H must"), ("kappa = 2", "kappa"),
                                              ("n_values = 8, 4", "increasing"),
                                              ("replications = 2.5", "integer"),
                                              ("substitution = cubic", "substitution")])
    def test_semantic_checks(self, extra, needle):
        text = BASE.replace("H = 0.75\n", "") if extra.startswith("H") else BASE
        with pytest.raises(ConfigError, match=needle):
            parse_config_text(text + extra + "\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.cfg")


class TestExitCodes:
    def test_simulate_ok(self, cfg, tmp_path, capsys):
        out = tmp_path / "fresh" / "nested"
        assert main(["simulate", "--config", cfg(), "--out", str(out)]) == EXIT_OK
        assert "n=8:" in capsys.readouterr().out
        man = json.loads((out / "manifest-simulate.json").read_text())
        assert man["output_dir_created"] is True
        assert man["tool_version"] == __version__
        assert {p.split("/")[-1] for p in man["outputs"]} == {"moments.csv", "moments.json"}
        assert "wall_clock" in man and "simulate" in man["timings"]

    def test_regime_violation(self, cfg, tmp_path, capsys):
        path = cfg("H = 0.9\nd = 3\nt1 = 1\nt2 = 1\n")
        assert main(["simulate", "--config", path, "--out", str(tmp_path)]) == EXIT_REGIME
        assert "Hd < 2" in capsys.readouterr().err

    def test_clt_regime_violation(self, cfg, tmp_path):
        path = cfg("H = 0.6\nd = 2\nt1 = 1\nt2 = 1\n")
        assert main(["constants", "--config", path, "--out", str(tmp_path)]) == EXIT_REGIME

    def test_bad_config(self, cfg, tmp_path, capsys):
        assert main(["verify", "--config", cfg(BASE + "trials = 0\n"),
                     "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "trials" in capsys.readouterr().err

    def test_bad_arguments(self, cfg, tmp_path):
        assert main(["simulate"]) == EXIT_CONFIG
        assert main(["simulate", "--config", cfg(), "--seed", "-3",
                     "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["limit-sample", "--config", cfg(), "--draws", "1",
                     "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_broken_beta_fails_verification(self, cfg, tmp_path):
        out = tmp_path / "v"
        assert main(["verify", "--config", cfg(BASE + "beta = -1\n"),
                     "--out", str(out)]) == EXIT_VERIFY
        report = json.loads((out / "verify.json").read_text())
        failed = [c["check"] for c in report["checks"] if not c["passed"]]
        assert failed == ["beta_norm_cross"]

    @pytest.mark.parametrize("point", ["H = 0.75\nd = 2", "H = 0.55\nd = 3"])
    def test_verify_default_matrix(self, cfg, tmp_path, point):
        out = tmp_path / "v"
        assert main(["verify", "--config", cfg(point + "\nt1 = 1\nt2 = 1\n"),
                     "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "verify.json").read_text())
        assert report["passed"] and len(report["checks"]) == 6

    def test_version(self):
        res = subprocess.run([sys.executable, "-m", "fbmclt", "--version"],
                             capture_output=True, text=True)
        assert res.returncode == 0 and __version__ in res.stdout


class TestOutputs:
    def test_constants(self, cfg, tmp_path, capsys):
        assert main(["constants", "--config", cfg(), "--out", str(tmp_path)]) == EXIT_OK
        lines = (tmp_path / "constants.json").read_text().splitlines()
        assert lines[0].startswith('{"header": "fbmclt ' + __version__ + " config=")
        data = json.loads("\n".join(lines))
        assert data["D"] == pytest.approx(1.8732835013083, rel=1e-9)
        assert [a["m"] for a in data["alpha_moments"]] == [1, 2, 3]
        assert json.loads(capsys.readouterr().out)["D"] == data["D"]

    def test_simulate_reproducible(self, cfg, tmp_path, monkeypatch):
        path = cfg()
        assert main(["simulate", "--config", path, "--out", str(tmp_path / "a")]) == EXIT_OK
        monkeypatch.setenv("FBMCLT_THREADS", "2")
        assert main(["simulate", "--config", path, "--out", str(tmp_path / "b")]) == EXIT_OK
        for name in ("moments.csv", "moments.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override_changes_hash(self, cfg, tmp_path):
        path = cfg()
        main(["simulate", "--config", path, "--out", str(tmp_path / "a")])
        main(["simulate", "--config", path, "--seed", "99", "--out", str(tmp_path / "b")])
        ha = (tmp_path / "a" / "moments.csv").read_text().splitlines()[0]
        hb = (tmp_path / "b" / "moments.csv").read_text().splitlines()[0]
        assert ha.startswith("# fbmclt") and ha != hb

    def test_limit_sample_and_compare(self, cfg, tmp_path, capsys):
        path = cfg()
        for seed, sub in (("1", "a"), ("2", "b")):
            assert main(["limit-sample", "--config", path, "--seed", seed, "--draws", "50",
                         "--out", str(tmp_path / sub)]) == EXIT_OK
        a, b = tmp_path / "a" / "limit_sample.csv", tmp_path / "b" / "limit_sample.csv"
        lines = a.read_text().splitlines()
        assert lines[0].startswith("# fbmclt") and lines[1] == "index,alpha_eps,value"
        assert len(lines) == 52
        capsys.readouterr()
        assert main(["compare", str(a), str(a), "--out", str(tmp_path / "c")]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["ks"] == 0.0
        assert main(["compare", str(a), str(b), "--out", str(tmp_path / "c")]) == EXIT_OK
        data = json.loads((tmp_path / "c" / "compare.json").read_text())
        assert data["size_a"] == 50 and 0 < data["ks"] < 1

    def test_compare_unreadable(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("value\nabc\n")
        assert main(["compare", str(bad), str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["compare", str(tmp_path / "missing.csv"), str(bad),
                     "--out", str(tmp_path)]) == EXIT_CONFIG
