import json

import pytest

from strongneg import formats
from strongneg.cli import main
from strongneg.instances import demo_scheduling, star_instance
from strongneg.params import DEFAULT
from strongneg.relax import integral_solution
from strongneg.schedule import Assignment


@pytest.fixture
def files(tmp_path):
    inst, sol = demo_scheduling()
    paths = {"instance": tmp_path / "inst.json", "fractional": tmp_path / "frac.json",
             "star": tmp_path / "star.json", "integral": tmp_path / "int.json", "params": tmp_path / "p.json"}
    paths["instance"].write_text(formats.dumps(formats.instance_to_dict(inst)))
    paths["fractional"].write_text(formats.dumps(formats.fractional_to_dict(sol)))
    paths["star"].write_text(formats.dumps(formats.bipartite_to_dict(star_instance(4))))
    paths["integral"].write_text(formats.dumps(formats.fractional_to_dict(
        integral_solution(Assignment([1, 0, 0, 1]), 2))))
    paths["params"].write_text(formats.dumps(formats.params_to_dict(DEFAULT)))
    return {k: str(v) for k, v in paths.items()}


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_gen_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--machines", "2", "--jobs", "4", "--seed", "7", "--out", str(a)]) == 0
    assert main(["gen", "--machines", "2", "--jobs", "4", "--seed", "7", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    inst = formats.read_instance(a)
    assert inst.n_machines == 2 and inst.n_jobs == 4
    assert ((inst.p >= 1) & (inst.p <= 100)).all() and ((inst.weights >= 0) & (inst.weights <= 1)).all()


def test_round_star(files, tmp_path, capsys):
    csv = tmp_path / "r.csv"
    code, out = run(capsys, "round", "--instance", files["star"], "--trials", "100000", "--report", str(csv))
    assert code == 0 and json.loads(out)["ok"]
    rows = [line.split(",") for line in csv.read_text().splitlines()[1:]]
    a2 = [r for r in rows if r[0].startswith("A2")]
    assert len(a2) == 4 and all(abs(float(r[1]) - float(r[2])) <= 0.01 for r in a2)


def test_round_single_trial(files, capsys):
    code, out = run(capsys, "round", "--instance", files["star"], "--trials", "1")
    chosen = json.loads(out)["chosen"]
    assert code == 0 and len(chosen) == 1 and chosen[0][1] is not None


def test_missing_file_exit_code(capsys, tmp_path):
    assert main(["round", "--instance", str(tmp_path / "nope.json")]) == 2
    assert main(["round", "--instance", str(tmp_path / "nope.json"), "--trials", "10"]) == 2


def test_schedule(files, capsys):
    code, out = run(capsys, "schedule", "--instance", files["instance"], "--fractional", files["fractional"],
                    "--seed", "5")
    code2, out2 = run(capsys, "schedule", "--instance", files["instance"], "--fractional", files["fractional"],
                      "--seed", "5")
    assert code == code2 == 0 and out == out2
    code, out = run(capsys, "schedule", "--instance", files["instance"], "--fractional", files["integral"],
                    "--params", files["params"])
    assert code == 0 and json.loads(out)["assignment"] == [1, 0, 0, 1]


def test_schedule_infeasible(files, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    doc = json.loads(open(files["fractional"]).read())
    m = doc["machines"][0]["matrix"]
    m[0][1] = m[1][0] = 0.99
    bad.write_text(json.dumps(doc))
    code, out = run(capsys, "schedule", "--instance", files["instance"], "--fractional", str(bad))
    assert code == 1 and not json.loads(out)["feasibility"]["ok"]


def test_verify_sampler(capsys):
    code, out = run(capsys, "verify", "--suite", "sampler", "--trials", "20000")
    assert code == 0 and json.loads(out)["ok"]


def test_verify_bad_contract(capsys):
    assert main(["verify", "--suite", "sampler", "--trials", "10"]) == 2


def test_constants_search_grid(capsys, files):
    code, out = run(capsys, "constants", "--params", files["params"], "--grid", "search")
    doc = json.loads(out)
    assert code == 0 and doc["constants"]["ratio"] <= 1.40


def test_constants_inadmissible(tmp_path, capsys):
    p = tmp_path / "p.json"
    p.write_text(formats.dumps(formats.params_to_dict(DEFAULT.with_(beta=60.0))))
    assert main(["constants", "--params", str(p), "--grid", "search"]) == 2


def test_search_small_budget(tmp_path, capsys):
    out = tmp_path / "best.json"
    code, text = run(capsys, "search", "--budget", "6", "--seed", "1", "--out", str(out))
    doc = json.loads(text)
    assert code == (0 if doc["reached"] else 1)
    assert formats.read_params(out).tau == pytest.approx(0.604)
