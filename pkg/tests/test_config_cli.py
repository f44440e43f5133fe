import textwrap

import pytest

from switchforce import cli
from switchforce.config import load, parse, shipped_scenarios
from switchforce.errors import ConfigError

BASE = """\
name: demo
plant: {M: 1.0, b: 0.0}
environment: {k_e: 1.0e+6, b_e: 10.0}
gains: {M_a: 0.8, k_p: 4000.0, k_d: 80.0, k_f: 1.0, b_f: 5.0}
"""


def write(tmp_path, text, name="demo.yaml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return str(p)


def run(args, tmp_path, capsys):
    code = cli.main(list(args) + ["--out", str(tmp_path / "out")])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# ------------------------------------------------------------ config

def test_shipped_scenarios_present():
    assert set(shipped_scenarios()) >= {"s4_bf5", "s4_bf9000", "s54_bt171", "reduced_vs_full",
                                        "s54_bt_search", "s4_bf_search"}


@pytest.mark.parametrize("name", shipped_scenarios())
def test_round_trip(name):
    sc = load(name)
    again = parse(sc.dump(), "dumped")
    assert again == sc
    assert again.dump() == sc.dump()


def test_numeric_strings_are_numbers():
    sc = parse(BASE.replace("1.0e+6", "1.0e6"))
    assert sc.environment.k_e == 1e6


def test_estimates_default_to_perceived_environment():
    sc = load("s54_bt171")
    env = sc.contact_env()
    assert (sc.estimates.k_e, sc.estimates.b_e) == pytest.approx((env.k_e, env.b_e))


def test_error_is_line_located():
    text = BASE.replace("k_e: 1.0e+6", "k_e: -1.0")
    with pytest.raises(ConfigError, match=r"^cfg\.yaml:3: environment"):
        parse(text, "cfg.yaml")


def test_unknown_key_is_line_located():
    with pytest.raises(ConfigError, match=r"cfg\.yaml:2: plant\.mass"):
        parse(BASE.replace("b: 0.0", "mass: 2"), "cfg.yaml")


def test_yaml_syntax_error_is_reported():
    with pytest.raises(ConfigError, match="YAML syntax error"):
        parse("plant: {M: 1\n", "x.yaml")


def test_unknown_section():
    with pytest.raises(ConfigError, match="unknown section"):
        parse(BASE + "extras: {a: 1}\n")


# ------------------------------------------------------------ CLI

def test_missing_section_exit_1_names_it(tmp_path, capsys):
    path = write(tmp_path, BASE)
    code, _, err = run(["design", path], tmp_path, capsys)
    assert code == 1
    assert "design" in err and "missing" in err


def test_inverted_bracket_exit_1(tmp_path, capsys):
    path = write(tmp_path, BASE + "design: {parameter: b_f, lo: 100.0, hi: 5.0, tol: 0.1}\n")
    code, _, err = run(["design", path], tmp_path, capsys)
    assert code == 1
    assert "demo.yaml:5: design.hi" in err


def test_missing_file_exit_1(tmp_path, capsys):
    code, _, err = run(["certify", str(tmp_path / "nope.yaml")], tmp_path, capsys)
    assert code == 1 and "no such file" in err


@pytest.mark.parametrize("name, expected", [("s4_bf5", 2), ("s4_bf9000", 2), ("s54_bt171", 0)])
def test_certify_exit_codes(name, expected, tmp_path, capsys):
    code, out, _ = run(["certify", name], tmp_path, capsys)
    assert code == expected
    doc = (tmp_path / "out" / f"{name}.certificate").read_text()
    assert doc == out
    assert "Lambda:" in doc
    assert (tmp_path / "out" / f"{name}.config.yaml").exists()


def test_design_command(tmp_path, capsys):
    code, out, _ = run(["design", "s54_bt_search"], tmp_path, capsys)
    assert code == 0
    fields = dict(line.split(": ", 1) for line in out.splitlines())
    assert 160.0 <= float(fields["threshold"]) <= 180.0
    sweep = (tmp_path / "out" / "s54_bt_search.sweep.csv").read_text().splitlines()
    assert sweep[0] == "b_t,lambda1,lambda2,Lambda,verdict"
    assert len(sweep) == 65


def test_design_no_bracket_exit_2(tmp_path, capsys):
    path = write(tmp_path, BASE + "design: {parameter: b_f, lo: 5.0, hi: 100.0, tol: 0.1}\n")
    code, _, err = run(["design", path], tmp_path, capsys)
    assert code == 2 and "[lo]" in err and "[hi]" in err


TRAJ = """\
name: push
environment: {k_e: 1.0e+4, b_e: 50.0}
trajectory:
  t_end: 0.6
  gamma1: 200.0
  gamma2: 200.0
  x0: 7.0e-4
  contact: [[0.2, 0.5]]
  x_free: {kind: constant, value: 7.0e-4}
  F_contact: {kind: series, t: [0.2, 0.3, 0.31, 0.5], v: [7.0, 7.0, -2.0, 7.0]}
"""


def test_traj_negative_force_exit_2(tmp_path, capsys):
    code, _, err = run(["traj", write(tmp_path, TRAJ)], tmp_path, capsys)
    assert code == 2 and "desired force" in err


def test_traj_command(tmp_path, capsys):
    code, out, _ = run(["traj", "s4_bf5"], tmp_path, capsys)
    assert code == 0
    assert "passed: true" in out
    rows = (tmp_path / "out" / "s4_bf5.traj.csv").read_text().splitlines()
    assert rows[0] == "t,x_d,xd_dot,xd_ddot,F_d"
    assert len(rows) == 4002


WORST = BASE.replace("b_f: 5.0", "b_f: 9000.0") + """\
sim: {model: worst_case, z0: [1.0, 0.0], step: 1.0e-5, event_tol: 1.0e-13, horizon: 0.2}
"""


def test_simulate_worst_case_outputs(tmp_path, capsys):
    code, out, _ = run(["simulate", write(tmp_path, WORST)], tmp_path, capsys)
    assert code == 0
    events = (tmp_path / "out" / "demo.worst_case.events").read_text().splitlines()
    assert events[0] == "time,direction,z1,z2"
    assert len(events) > 3


def test_simulate_zeno_exit_3_keeps_partial(tmp_path, capsys):
    text = WORST.replace("horizon: 0.2", "horizon: 0.2, min_event_sep: 0.05")
    code, _, err = run(["simulate", write(tmp_path, text)], tmp_path, capsys)
    assert code == 3 and "apart" in err
    assert (tmp_path / "out" / "demo.worst_case.events").exists()


def test_random_initial_state_follows_seed(tmp_path, capsys):
    path = write(tmp_path, WORST.replace("[1.0, 0.0]", "random"))
    texts = []
    for seed in (7, 7, 8):
        assert cli.main(["simulate", path, "--seed", str(seed), "--out", str(tmp_path / "o")]) == 0
        texts.append((tmp_path / "o" / "demo.worst_case.csv").read_text())
    capsys.readouterr()
    assert texts[0] == texts[1] != texts[2]


def test_outputs_are_byte_identical(tmp_path, capsys):
    blobs = []
    for sub in ("a", "b"):
        cli.main(["design", "s54_bt_search", "--out", str(tmp_path / sub)])
        cli.main(["traj", "s54_bt171", "--out", str(tmp_path / sub)])
        blobs.append({p.name: p.read_bytes() for p in sorted((tmp_path / sub).iterdir())})
    capsys.readouterr()
    assert blobs[0] == blobs[1]
    assert len(blobs[0]) == 6


def test_output_dir_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["certify", "s54_bt171"]) == 0
    capsys.readouterr()
    assert (tmp_path / "envout" / "s54_bt171.certificate").exists()


def test_no_negative_zero_in_output():
    assert cli.fmt(-0.0) == "0"
    assert cli.fmt(1.23456789012) == "1.23456789"


def test_profile_missing_key_message():
    text = TRAJ.replace("value: 7.0e-4", "level: 7.0e-4")
    with pytest.raises(ConfigError, match="needs key 'value'"):
        parse(text, "p.yaml")
