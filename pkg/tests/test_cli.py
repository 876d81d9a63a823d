"""Command-line behaviour: exit codes, reports, and emitted artifacts.

Runs the in-process entry point against the shipped data files; every
emitted certificate must survive the verify subcommand, and reports must
be byte-stable across repeated runs.
"""

import json
from pathlib import Path

import pytest

from spectracert.certificates import load_certificate
from spectracert.cli import main
from spectracert.pencil import load_pencil
from spectracert.polynomials import EXACT

DATA = Path(__file__).resolve().parent.parent / "data"
PENCILS = DATA / "pencils"
CERTS = DATA / "certs"


@pytest.fixture(autouse=True)
def run_in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out


class TestClassify:
    def test_level_one_refutation(self, capsys):
        code, out = run(capsys, "classify",
                        str(PENCILS / "weakly-infeasible-2x2.json"))
        assert code == 0
        assert "weakly infeasible, level 1" in out
        cert = load_certificate("weakly-infeasible-2x2.cert.json")
        assert cert.level == 1

    def test_level_two_refutation(self, capsys):
        code, out = run(capsys, "classify",
                        str(PENCILS / "weakly-infeasible-3x3.json"))
        assert code == 0
        assert "weakly infeasible, level 2" in out

    def test_interior_point_witness(self, capsys):
        code, out = run(capsys, "classify", str(PENCILS / "box-2.json"))
        assert code == 0
        assert "strongly feasible" in out
        payload = json.loads(Path("box-2.cert.json").read_text())
        assert payload["kind"] == "witness"
        code, out = run(capsys, "verify", str(PENCILS / "box-2.json"),
                        "box-2.cert.json")
        assert code == 0

    def test_exact_upgrade(self, capsys):
        code, out = run(capsys, "classify",
                        str(PENCILS / "weakly-infeasible-2x2.json"),
                        "--mode", "exact", "-o", "up.json")
        assert code == 0
        assert "exact" in out
        assert load_certificate("up.json").mode == EXACT
        code, _ = run(capsys, "verify",
                      str(PENCILS / "weakly-infeasible-2x2.json"),
                      "up.json", "--mode", "exact")
        assert code == 0

    def test_json_report_is_byte_stable(self, capsys):
        argv = ("classify", str(PENCILS / "weakly-infeasible-2x2.json"),
                "--json", "-o", "c.json")
        _, first = run(capsys, *argv)
        _, second = run(capsys, *argv)
        assert first == second
        report = json.loads(first)
        assert report["status"] == "weakly_infeasible"
        assert report["details"]["level"] == 1
        assert "sha256" in report["inputs"]["pencil"]
        assert "timings_ms" not in report


class TestVerify:
    def test_shipped_exact_certificates_pass(self, capsys):
        pairs = [("weakly-infeasible-2x2.json",
                  "weakly-infeasible-2x2.level1.json"),
                 ("weakly-infeasible-3x3.json",
                  "weakly-infeasible-3x3.level2.json")]
        for pencil, cert in pairs:
            code, out = run(capsys, "verify", str(PENCILS / pencil),
                            str(CERTS / cert))
            assert code == 0, out
            assert "residual is exactly zero" in out

    def test_wrong_pencil_pairing_fails(self, capsys):
        code, out = run(capsys, "verify",
                        str(PENCILS / "single-point.json"),
                        str(CERTS / "weakly-infeasible-2x2.level1.json"))
        assert code == 1
        assert "FAIL" in out and "identity" in out

    def test_perturbed_certificate_fails(self, capsys):
        data = json.loads(
            (CERTS / "weakly-infeasible-2x2.level1.json").read_text())
        data["scalar_gram"][0][0] = "1/1000"
        Path("tampered.json").write_text(json.dumps(data))
        code, out = run(capsys, "verify",
                        str(PENCILS / "weakly-infeasible-2x2.json"),
                        "tampered.json")
        assert code == 1
        assert "verification: fail" in out

    def test_unknown_kind_is_schema_error(self, capsys):
        Path("weird.json").write_text(json.dumps({"kind": "nonsense"}))
        code = main(["verify", str(PENCILS / "weakly-infeasible-2x2.json"),
                     "weird.json"])
        assert code == 2


class TestDualSos:
    def test_gap_instance_report_and_artifact(self, capsys):
        code, out = run(capsys, "dual-sos", str(PENCILS / "finite-gap.json"),
                        "--objective", "x2", "--json", "-o", "dual.json")
        assert code == 0
        report = json.loads(out)
        assert abs(report["details"]["primal"]["value"]) <= 1e-6
        assert abs(report["details"]["dual"]["value"] + 1.0) <= 1e-6
        assert abs(report["details"]["sos"]["value"]) <= 1e-5
        assert report["details"]["sos"]["attained"] is True
        assert report["details"]["closed"] is True
        code, _ = run(capsys, "verify", str(PENCILS / "finite-gap.json"),
                      "dual.json")
        assert code == 0

    def test_nonlinear_objective_rejected(self, capsys):
        code = main(["dual-sos", str(PENCILS / "finite-gap.json"),
                     "--objective", "x1^2"])
        assert code == 2


class TestCertifySearches:
    def test_infeasible_level_cap_blocks_search(self, capsys):
        code, out = run(capsys, "certify-infeasible",
                        str(PENCILS / "weakly-infeasible-2x2.json"),
                        "--max-level", "0")
        assert code == 1
        assert "no refutation" in out
        assert not list(Path(".").glob("*.json"))

    def test_infeasible_auto_bound_succeeds(self, capsys):
        code, out = run(capsys, "certify-infeasible",
                        str(PENCILS / "weakly-infeasible-2x2.json"),
                        "--auto-bound", "-o", "r.json")
        assert code == 0
        assert "level 1" in out
        assert load_certificate("r.json").level == 1

    def test_lowdim_names_the_hyperplane(self, capsys):
        code, out = run(capsys, "certify-lowdim", str(PENCILS / "ray.json"))
        assert code == 0
        assert "hyperplane" in out and "x1" in out
        assert Path("ray.lowdim.json").exists()

    def test_bounded_box(self, capsys):
        code, out = run(capsys, "certify-bounded",
                        str(PENCILS / "box-2.json"))
        assert code == 0
        assert "N = 1 at level 0" in out

    def test_unbounded_halfline_not_found(self, capsys):
        code, out = run(capsys, "certify-bounded",
                        str(PENCILS / "halfline.json"), "--max-level", "2")
        assert code == 1
        assert "no boundedness certificate" in out


class TestFunctional:
    def test_positive_writes_certificate(self, capsys):
        Path("basis.json").write_text("[[[1,0],[0,1]]]")
        code, out = run(capsys, "functional", "--basis", "basis.json",
                        "--values", "1", "-o", "pos.json")
        assert code == 0
        assert "nonnegative" in out
        assert Path("pos.json").exists()

    def test_negative_reports_witness(self, capsys):
        Path("basis.json").write_text("[[[1,0],[0,0]],[[0,0],[0,1]]]")
        code, out = run(capsys, "functional", "--basis", "basis.json",
                        "--values", "1,-1", "--json")
        assert code == 1
        report = json.loads(out)
        assert report["status"] == "not-positive"
        assert report["details"]["witness_value"] <= -0.9


class TestImportAndErrors:
    def test_import_sdpa_round_trip(self, capsys):
        Path("tiny.dat-s").write_text(
            "1\n1\n2\n1.0\n0 1 1 2 1.0\n1 1 1 1 1.0\n")
        code, out = run(capsys, "import-sdpa", "tiny.dat-s")
        assert code == 0
        pencil = load_pencil("tiny.pencil.json")
        assert pencil.nvars == 1 and pencil.size == 2

    def test_missing_file(self, capsys):
        assert main(["classify", "nope.json"]) == 2

    def test_malformed_json(self, capsys):
        Path("bad.json").write_text("{not json")
        assert main(["classify", "bad.json"]) == 2

    def test_timings_flag_adds_timings(self, capsys):
        code, out = run(capsys, "classify",
                        str(PENCILS / "weakly-infeasible-2x2.json"),
                        "--json", "--timings", "-o", "c.json")
        assert code == 0
        assert "timings_ms" in json.loads(out)
