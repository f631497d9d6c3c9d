import json
import os
import warnings

import pytest

from lmg_adiabat import cli
from lmg_adiabat.errors import ParseError, RegimeWarning, ValidationError
from lmg_adiabat.protocols import preset
from lmg_adiabat.sweep import SweepGrid


def test_parse_frequency_units():
    assert cli.parse_frequency(1e-4) == 1e-4
    assert cli.parse_frequency("1.0kHz") == pytest.approx(1e-4)
    assert cli.parse_frequency("0.5 kHz") == pytest.approx(5e-5)
    assert cli.parse_frequency("11MHz") == pytest.approx(1.1)
    assert cli.parse_frequency("-1.1") == -1.1
    with pytest.raises(ParseError):
        cli.parse_frequency("fast")


def test_defaulted_case_one_preset():
    cfg = cli.parse_config(overrides=["case=I", "n_spins=4"])
    assert cfg == preset("I", 4)
    assert cfg.delta == -1.1
    assert cfg.t_final == 4000.0
    assert cfg.gamma_dep == 0.0


def test_gamma_khz_conversion():
    cfg = cli.parse_config(overrides=["gamma_dep=1.0kHz"])
    assert cfg.gamma_dep == pytest.approx(1e-4)


def test_parity_validation_exit_code(tmp_path, capsys):
    code = cli.main(["simulate", "--set", "case=II", "--set", "n_spins=4",
                     "--out", str(tmp_path)])
    assert code == 2
    assert "invalid config" in capsys.readouterr().err


def test_unknown_field_rejected():
    with pytest.raises(ValidationError, match="unknown config fields"):
        cli.parse_config(overrides=["coupling_strength=0.1"])


@pytest.mark.parametrize("case,n,mag", [("I", 4, 1.1), ("II", 3, 1.1), ("III", 4, 1.1),
                                        ("I", 4, 0.9)])
def test_config_round_trip(case, n, mag, tmp_path):
    cfg = preset(case, n, detuning_magnitude=mag, gamma=1e-4)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cli.serialize_config(cfg)))
    assert cli.parse_config(str(path)) == cfg


def test_set_dotted_schedule_override():
    cfg = cli.parse_config(overrides=["schedule.ramp2=700", "schedule.zeta=0.25"])
    assert cfg.schedule.ramp2 == 700.0
    assert cfg.schedule.zeta == 0.25


def test_schedule_flag_selects_literal():
    cfg = cli.parse_config(overrides=[], schedule_kind="literal")
    assert cfg.schedule.t0_1 == 0.0 and cfg.schedule.ramp2 == 1500.0


def test_sweep_section_builds_grid():
    cfg = cli.parse_config(overrides=['sweep={"axes": {"gamma_dep": [0, "0.1kHz"]}}'])
    assert isinstance(cfg, SweepGrid)
    assert cfg.axes[0][0] == "gamma_dep"
    assert cfg.axes[0][1][1] == pytest.approx(1e-5)


def _simulate_args(tmp_path, extra=()):
    return [
        "simulate",
        "--set", "case=I", "--set", "n_spins=2", "--set", "t_final=120",
        "--set", "n_samples=5",
        "--out", str(tmp_path),
        *extra,
    ]


def test_simulate_end_to_end(tmp_path, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        code = cli.main(_simulate_args(tmp_path))
    assert code == 0
    csv_path = tmp_path / "trajectory.csv"
    text = csv_path.read_text()
    lines = text.splitlines()
    assert lines[0] == cli.TRAJECTORY_HEADER
    assert len(lines) == 6  # header + 5 samples
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["tool"] == "lmg-adiabat"
    assert manifest["config"]["case"] == "I"
    assert "final population" in capsys.readouterr().out
    # atomic writes leave no temp files behind
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".tmp-")]


def test_simulate_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        assert cli.main(_simulate_args(out1)) == 0
        assert cli.main(_simulate_args(out2)) == 0
    assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()


def test_header_only_trajectory():
    # an empty trajectory serializes to just the header line
    import dataclasses as dc

    cfg = preset("I", 2, t_final=120.0, n_samples=5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        from lmg_adiabat.protocols import run_scenario

        run = run_scenario(cfg)
    empty = dc.replace(run, trajectory=dc.replace(
        run.trajectory,
        times=run.trajectory.times[:0],
        purity=run.trajectory.purity[:0],
        trace_defect=run.trajectory.trace_defect[:0],
        hermiticity_defect=run.trajectory.hermiticity_defect[:0],
        gap=run.trajectory.gap[:0],
    ), pop_target=run.pop_target[:0], pop_target_phase_opt=run.pop_target_phase_opt[:0],
        omega1=run.omega1[:0], omega2=run.omega2[:0])
    assert cli.trajectory_csv_text(empty) == cli.TRAJECTORY_HEADER + "\n"


def test_sweep_cli_partial_failure(tmp_path):
    config = {
        "case": "I", "n_spins": 2, "t_final": 120, "n_samples": 5,
        "sweep": {"axes": {"delta": [-1.1, 1.0]}},
    }
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(config))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        code = cli.main(["sweep", "--config", str(path), "--out", str(tmp_path),
                         "--parallel", "2"])
    assert code == 1  # one resonant point fails
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "delta,pop_final,pop_final_phase_opt,gap_min,trace_defect_max,status,error"
    assert lines[1].startswith("-1.1,") and ",ok," in lines[1]
    assert lines[2].startswith("1.0,") and ",error," in lines[2]


def test_sweep_cli_worker_invariance(tmp_path):
    config = {
        "case": "I", "n_spins": 2, "t_final": 120, "n_samples": 5,
        "sweep": {"axes": {"gamma_dep": [0.0, 5e-5, 1e-4]}},
    }
    path = tmp_path / "grid.json"
    path.write_text(json.dumps(config))
    texts = []
    for sub, workers in (("w1", "1"), ("w4", "4")):
        out = tmp_path / sub
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            assert cli.main(["sweep", "--config", str(path), "--out", str(out),
                             "--parallel", workers]) == 0
        texts.append((out / "sweep.csv").read_bytes())
    assert texts[0] == texts[1]


def test_spectrum_names_polarized_ground(tmp_path, capsys):
    code = cli.main(["spectrum", "--set", "case=I", "--set", "n_spins=4",
                     "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "↑↑↑↑" in out  # |↑↑↑↑>
    assert "isotropic" in out
    lines = (tmp_path / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "m,energy_nu"
    assert len(lines) == 6  # header + N+1 levels


def test_classify_one_axis_x(tmp_path, capsys):
    code = cli.main([
        "classify",
        "--set", 'schedule={"zeta": 0.3, "ramp1": 2000, "ramp2": 2000, "dzeta2": -0.6}',
        "--out", str(tmp_path),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "one-axis-x" in out
    report = json.loads((tmp_path / "classify.json").read_text())
    assert report["final"]["form"] == "one-axis-x"


def test_validate_reduction_cli(tmp_path, capsys):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        code = cli.main([
            "validate-reduction",
            "--set", "case=I", "--set", "n_spins=1",
            "--cutoff", "3", "--window", "40",
            "--out", str(tmp_path),
        ])
    assert code == 0
    summary = json.loads((tmp_path / "reduction.json").read_text())
    assert summary["fock_cutoff"] == 3
    lines = (tmp_path / "reduction.csv").read_text().splitlines()
    assert lines[0] == "t_nu,jz_full,jz_effective,pop_full,pop_effective"


def test_missing_config_file_is_parse_error(tmp_path, capsys):
    code = cli.main(["simulate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)])
    assert code == 2


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"case": "I",}')
    with pytest.raises(ParseError, match="line"):
        cli.parse_config(str(path))
