import json
import math
import os
import subprocess
import sys

import pytest

from marclab.cli import main, parse_rates

DATA = os.path.join(os.path.dirname(__file__), "..", "demos", "data")


def data(name):
    return os.path.join(DATA, name)


def run(capsys, tmp_path, *argv):
    code = main([*argv, "--out", str(tmp_path)])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(tmp_path, name):
    with open(tmp_path / name) as fh:
        return json.load(fh)


def test_region_passes(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "region", "--theorem", "1", "--model", data("xor_model.json"),
                       "--channel", data("pipe_k16.json"), "--input", data("pipe_k16_input.json"))
    assert code == 0 and "thm1.dst.S1S2" in out
    d = report(tmp_path, "region-1.json")
    assert d["command"] == "region" and d["report"]["verdict"] == "ACHIEVABLE"
    assert d["config"]["theorem"] == "1" and "version" in d


def test_region_fails_with_exit_two(capsys, tmp_path):
    code, _, _ = run(capsys, tmp_path, "region", "--theorem", "1", "--model", data("somarc_model.json"),
                     "--channel", data("useless_channel.json"), "--input", data("uniform_bits_input.json"))
    assert code == 2
    assert report(tmp_path, "region-1.json")["report"]["verdict"] == "NOT_SHOWN"


def test_region_cpm_needs_kappa_one(capsys, tmp_path):
    code, _, err = run(capsys, tmp_path, "region", "--theorem", "6", "--kappa", "2", "--model",
                       data("somarc_model.json"), "--channel", data("somarc_channel.json"),
                       "--input", data("uniform_bits_input.json"))
    assert code == 1 and "kappa" in err


def test_region_wrong_input_kind(capsys, tmp_path):
    code, _, err = run(capsys, tmp_path, "region", "--theorem", "6", "--model", data("somarc_model.json"),
                       "--channel", data("somarc_channel.json"), "--input", data("uniform_bits_input.json"))
    assert code == 1 and err.startswith("error:")


def test_malformed_json_reports_position(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"preset": "somarc",\n  oops}')
    code, _, err = run(capsys, tmp_path, "region", "--theorem", "1", "--model", str(bad),
                       "--channel", data("somarc_channel.json"), "--input", data("uniform_bits_input.json"))
    assert code == 1 and f"{bad}:2:" in err


def test_missing_field_is_named(capsys, tmp_path):
    bad = tmp_path / "ch.json"
    bad.write_text('{"given": [], "outputs": []}')
    code, _, err = run(capsys, tmp_path, "region", "--theorem", "1", "--model", data("somarc_model.json"),
                       "--channel", str(bad), "--input", data("uniform_bits_input.json"))
    assert code == 1 and "kernel" in err


def test_missing_file_and_bad_flags(capsys, tmp_path):
    code, _, err = run(capsys, tmp_path, "region", "--theorem", "1", "--model", str(tmp_path / "none.json"),
                       "--channel", data("somarc_channel.json"), "--input", data("uniform_bits_input.json"))
    assert code == 1
    code, _, _ = run(capsys, tmp_path, "region", "--theorem", "9")
    assert code == 1
    assert main([]) == 1
    capsys.readouterr()


def test_outer_violated(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "outer", "--theorem", "2", "--family", "product", "--grid", "11",
                       "--restarts", "1", "--aux-cardinality", "2", "--model", data("somarc_model.json"),
                       "--channel", data("somarc_channel.json"))
    assert code == 2 and "violated" in out
    assert report(tmp_path, "outer-2.json")["report"]["verdict"] == "violated"


def test_outer_degenerate_sources_exit_zero(capsys, tmp_path):
    model = tmp_path / "const.json"
    model.write_text(json.dumps({"variables": [{"name": "S1", "size": 1}, {"name": "S2", "size": 1}],
                                 "weights": [1.0]}))
    code, _, _ = run(capsys, tmp_path, "outer", "--theorem", "3", "--model", str(model),
                     "--channel", data("useless_channel.json"))
    assert code == 0
    model.write_text(json.dumps({"variables": [["S1", 1], ["S2", 1]], "weights": [1.0]}))
    code, _, err = run(capsys, tmp_path, "outer", "--theorem", "3", "--model", str(model),
                       "--channel", data("useless_channel.json"))
    assert code == 1 and "variables" in err


def test_fading_region_phase(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "fading", "--check", "region", "--params", data("phase_a2.json"))
    assert code == 0
    thr = report(tmp_path, "fading-region.json")["report"]["thresholds"]
    assert thr == pytest.approx([math.log2(3), math.log2(3), 2.0], abs=1e-12)
    assert "1.584963" in out


def test_fading_df_and_separation(capsys, tmp_path):
    code, _, _ = run(capsys, tmp_path, "fading", "--check", "df", "--params", data("phase_a2.json"))
    assert code == 0
    ent = tmp_path / "e.json"
    ent.write_text(json.dumps({"h1_given_2w": 1.0, "h2_given_1w": 1.0, "h12_given_w": 1.5}))
    code, out, _ = run(capsys, tmp_path, "fading", "--check", "separation", "--params", data("phase_a2.json"),
                       "--entropies", str(ent))
    assert code == 0 and "ACHIEVABLE" in out
    code, out, _ = run(capsys, tmp_path, "fading", "--check", "separation", "--params", data("rayleigh_a2.json"),
                       "--model", data("somarc_model.json"), "--samples", "20000")
    assert code in (0, 2) and "verdict" in out
    code, _, err = run(capsys, tmp_path, "fading", "--check", "separation", "--params", data("phase_a2.json"))
    assert code == 1 and "--entropies" in err


def test_simulate_sweep_with_csv(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "simulate", "--scheme", "sep", "--model", data("xor_model.json"),
                       "--channel", data("pipe_k2.json"), data("pipe_k16.json"),
                       "--input", data("pipe_k2_input.json"), data("pipe_k16_input.json"),
                       "--rates", "R1r=1,R2r=1,R1d=1,R2d=1", "--epsilon", "1000", "--trials", "20", "--csv")
    assert code == 0
    rows = (tmp_path / "simulate-sep.csv").read_text().splitlines()
    assert len(rows) == 3
    margins = [float(r.split(",")[0]) for r in rows[1:]]
    assert margins == sorted(margins)
    points = report(tmp_path, "simulate-sep.json")["report"]["points"]
    assert len(points) == 2 and all("min_margin_bits" in p for p in points)


def test_simulate_input_count_mismatch(capsys, tmp_path):
    code, _, err = run(capsys, tmp_path, "simulate", "--scheme", "sep", "--model", data("xor_model.json"),
                       "--channel", data("pipe_k2.json"), data("pipe_k4.json"), data("pipe_k16.json"),
                       "--input", data("pipe_k2_input.json"), data("pipe_k4_input.json"))
    assert code == 1 and "--input" in err


def test_parse_rates():
    assert parse_rates("R1r=1, R2d=0.5") == {"R1r": 1.0, "R2d": 0.5}
    assert parse_rates("") == {}
    from marclab.cli import InputError
    with pytest.raises(InputError):
        parse_rates("R1r=fast")
    with pytest.raises(InputError):
        parse_rates("R1r")


def test_somarc_demo(capsys, tmp_path):
    code, out, _ = run(capsys, tmp_path, "somarc-demo", "--trials", "20000")
    assert code == 0
    assert "errors: 0" in out and "1.500" in out and "1.585" in out
    d = report(tmp_path, "somarc-demo.json")["report"]
    assert d["sum_capacity_bound_bits"] == pytest.approx(1.5, abs=1e-3)


def test_manifest_defaults_and_override(capsys, tmp_path):
    man = tmp_path / "m.json"
    man.write_text(json.dumps({"params": data("phase_a2.json"), "kappa": 2.0}))
    code, _, _ = run(capsys, tmp_path, "fading", "--check", "region", "--manifest", str(man))
    assert code == 0
    assert report(tmp_path, "fading-region.json")["report"]["thresholds"][2] == pytest.approx(4.0)
    code, _, _ = run(capsys, tmp_path, "fading", "--check", "region", "--manifest", str(man), "--kappa", "1")
    assert report(tmp_path, "fading-region.json")["report"]["thresholds"][2] == pytest.approx(2.0)
    man.write_text(json.dumps({"colour": "blue"}))
    code, _, err = run(capsys, tmp_path, "fading", "--check", "region", "--manifest", str(man))
    assert code == 1 and "colour" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "marclab", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("marclab ")
