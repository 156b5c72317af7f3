import json
from fractions import Fraction

import pytest

import gammaflow
from lib.errors import DomainError


def run(capsys, *argv):
    status = gammaflow.main([*argv, "--emit", "json"])
    out = capsys.readouterr().out
    return status, json.loads(out)


def checks(payload):
    return {c["name"]: c["passed"] for c in payload.get("checks", [])}


class TestParsing:
    def test_grid_forms(self):
        assert gammaflow.parse_grid("10:40:4") == [10, 20, 30, 40]
        assert gammaflow.parse_grid("0.5, 1/4") == [Fraction(1, 2), Fraction(1, 4)]

    @pytest.mark.parametrize("raw", ["1:2", "1:2:1", "1:2:x", "", "abc"])
    def test_bad_grids(self, raw):
        with pytest.raises(DomainError):
            gammaflow.parse_grid(raw)

    def test_points(self, ctx):
        assert gammaflow.parse_point("2").abs_z == 2
        p = gammaflow.parse_point("3@1/5pi")
        assert p.abs_z == 3
        assert abs(p.arg(ctx) - ctx.pi / 5) < ctx.mpf(10) ** -40
        with pytest.raises(DomainError):
            gammaflow.parse_point("-1")

    def test_phase(self, ctx):
        assert gammaflow.parse_phase(None, ctx) is None
        assert gammaflow.parse_phase("auto", ctx) is None
        assert abs(gammaflow.parse_phase("1/2pi", ctx) - ctx.pi / 2) < ctx.mpf(10) ** -40
        assert abs(gammaflow.parse_phase("-pi", ctx) + ctx.pi) < ctx.mpf(10) ** -40

    def test_matrix(self):
        assert gammaflow.parse_matrix("[[1,2],[0,1]]") == [[1, 2], [0, 1]]
        for raw in ("[[1,2]]", "[[1.5,0],[0,1]]", "[[true,0],[0,1]]", "not json"):
            with pytest.raises(DomainError):
                gammaflow.parse_matrix(raw)

    def test_word(self):
        assert gammaflow.parse_word("R0, l1") == [("R", 0), ("L", 1)]
        assert gammaflow.parse_word("") == []
        with pytest.raises(DomainError):
            gammaflow.parse_word("X2")

    def test_slugify(self):
        assert gammaflow.slugify("check-hrr-P1xP1") == "check-hrr-p1xp1"
        assert gammaflow.slugify("***") == "gammaflow"


@pytest.mark.usefixtures("clean_config")
class TestMain:
    def test_hrr_on_p1(self, capsys):
        status, payload = run(capsys, "check", "hrr", "--space", "P1")
        assert status == 0
        assert payload["passed"]
        assert payload["values"]["gram"] == [[1, 2], [0, 1]]
        assert payload["config"]["digits"] == 50

    def test_algebra_of_p2(self, capsys):
        status, payload = run(capsys, "check", "algebra", "--space", "P2")
        assert status == 0
        assert payload["values"]["basis"] == ["1", "p", "p^2"]

    def test_pairing_on_p1(self, capsys):
        status, payload = run(capsys, "check", "pairing", "--space", "P1")
        assert status == 0
        assert payload["values"]["gram"] == [[1, 2], [0, 1]]

    def test_blowup(self, capsys):
        status, payload = run(capsys, "blowup", "check")
        assert status == 0
        assert payload["values"]["c1^2"] == "8"
        assert payload["values"]["blocks"] == ["base", "base", "base", "exceptional"]

    def test_blowup_in_the_wrong_order_fails(self, capsys):
        status, payload = run(capsys, "blowup", "check", "--order", "exceptional,base")
        assert status == 1
        assert not checks(payload)["semiorthogonal"]

    def test_mutate_p1(self, capsys):
        status, payload = run(capsys, "stokes", "mutate", "--space", "P1", "--word", "R0")
        assert status == 0
        assert payload["values"]["gram"] == [[1, -2], [0, 1]]
        assert payload["values"]["labels"] == ["O(1)", "O - 2·O(1)"]

    def test_mutate_gram_with_orbit_search(self, capsys):
        status, payload = run(capsys, "stokes", "mutate", "--gram", "[[1,-2],[0,1]]", "--space", "P1")
        assert status == 0
        assert checks(payload)["braid orbit match"]
        assert payload["values"]["word"] == []
        assert payload["values"]["signs"] == [1, -1]

    @pytest.mark.slow
    def test_stokes_compute_with_loop_check(self, capsys):
        status, payload = run(capsys, "stokes", "compute", "--space", "P1", "--loop")
        assert status == 0
        assert checks(payload)["loop monodromy factorization"]

    def test_spectrum_from_user_data(self, capsys, data_dir):
        status, payload = run(capsys, "spectrum", "--data", str(data_dir / "P1.json"))
        assert status == 0
        assert checks(payload)["Conjecture O"]
        assert payload["values"]["distinct eigenvalues"]

    def test_spectrum_refuses_classical_data(self, capsys, clean_config, data_dir):
        doc = json.loads((data_dir / "P1.json").read_text(encoding="utf-8"))
        del doc["quantum"]
        path = clean_config / "classical.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        status, payload = run(capsys, "spectrum", "--data", str(path))
        assert status == 2
        assert "no quantum product" in payload["error"]

    def test_spectrum_with_hypersurface_pattern(self, capsys):
        _, payload = run(capsys, "spectrum", "--space", "P1xP1", "--hypersurface", "3,2")
        assert checks(payload)["hypersurface pattern"]
        assert checks(payload)["Conjecture O"]

    def test_broken_data_file(self, capsys, data_dir):
        status, payload = run(capsys, "data", "validate", "--data", str(data_dir / "broken_associativity.json"))
        assert status == 1
        assert not payload["passed"]
        assert not checks(payload)["axioms"]

    @pytest.mark.parametrize("argv", [
        ("check", "hrr"),
        ("check", "hrr", "--space", "P9x"),
        ("check", "hrr", "--space", "P1", "--digits", "10"),
        ("check", "kunneth", "--space", "P2"),
    ])
    def test_usage_errors_exit_with_two(self, capsys, argv):
        status, payload = run(capsys, *argv)
        assert status == 2
        assert payload["error"]
        assert not payload["passed"]

    def test_flat_form_reports_the_required_precision(self, capsys):
        status, payload = run(capsys, "gamma1", "flat-form", "--space", "P1", "--z", "0.001", "--max-digits", "100")
        assert status == 1
        assert payload["error"].startswith("PrecisionError")
        assert payload["values"]["required digits"] > 100

    def test_output_file(self, capsys, clean_config):
        target = clean_config / "run.json"
        status = gammaflow.main(["check", "hrr", "--space", "P1", "--output", str(target)])
        captured = capsys.readouterr()
        assert status == 0
        assert "PASS HRR integrality" in captured.out
        saved = json.loads(target.read_text())
        assert saved["config"]["command"] == "check"
        assert saved["config"]["subcommand"] == "hrr"
        assert str(target) in captured.err

    def test_digits_from_the_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("GAMMAFLOW_DIGITS", "60")
        _, payload = run(capsys, "check", "hrr", "--space", "P1")
        assert payload["config"]["digits"] == 60
