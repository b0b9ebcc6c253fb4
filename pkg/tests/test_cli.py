import json

import numpy as np
import pytest

from rfplan.cli import main
from rfplan.files import ScenarioFile, read_points
from rfplan.geometry import free_space
from rfplan.scenarios import TOY_POLYGON


@pytest.fixture
def toy_dir(tmp_path):
    assert main(["toy", "--seed", "1", "--out", str(tmp_path)]) == 0
    return tmp_path


def test_toy_files(toy_dir, tmp_path_factory):
    data = read_points(toy_dir / "toy_data.csv", 2)
    assert len(data) == 1500
    c1 = data[:750]
    # component-1 mean within 3 sigma / sqrt(750) of the origin per axis
    assert np.all(np.abs(c1.mean(0)) <= 3 * np.sqrt([10, 20]) / np.sqrt(750))
    c2 = data[750:]
    assert np.all(np.abs(c2.mean(0) - [20, 10]) <= 3 * np.sqrt([45, 35]) / np.sqrt(750))
    sf = ScenarioFile.load(toy_dir / "toy_scenario.json")
    assert sf.H == [2.0, 0.0, 0.0, 2.0] and sf.kernel == "epanechnikov"
    assert sf.boundary == [list(map(float, v)) for v in TOY_POLYGON]
    other = tmp_path_factory.mktemp("again")
    assert main(["toy", "--seed", "1", "--out", str(other)]) == 0
    for name in ("toy_data.csv", "toy_scenario.json"):
        assert (toy_dir / name).read_bytes() == (other / name).read_bytes()


def test_toy_split(tmp_path):
    assert main(["toy", "--seed", "2", "--split", "1000", "500", "--out", str(tmp_path)]) == 0
    assert len(read_points(tmp_path / "toy_data.csv")) == 1500


def test_prepare_outputs(toy_dir):
    scen = str(toy_dir / "toy_scenario.json")
    out = toy_dir / "prep"
    assert main(["prepare", "--scenario", scen, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["rho"] == pytest.approx(2 ** 0.5) and report["dropped_count"] == 409
    assert len(read_points(out / "xbar.csv", 2)) == 1091
    assert json.loads((out / "w2.json").read_text())["epoch"] == "free2"
    assert (out / "density.csv").read_text().splitlines()[0] == "x,y,density"


def test_sample_inside_polygon(toy_dir):
    scen = str(toy_dir / "toy_scenario.json")
    out = toy_dir / "s"
    assert main(["sample", "--scenario", scen, "--mode", "uniform", "--m", "10000",
                 "--bins", "20", "--out", str(out)]) == 0
    hist = (out / "hist.csv").read_text().splitlines()
    assert hist[0] == "axis,bin,count" and len(hist) == 41
    assert sum(int(h.split(",")[2]) for h in hist[1:21]) == 10000
    lines = (out / "samples.csv").read_text().splitlines()
    assert lines[0] == "x,y,source" and len(lines) == 10001
    pts = np.array([[float(v) for v in ln.split(",")[:2]] for ln in lines[1:]])
    assert free_space(TOY_POLYGON).contains_many(pts).all()


def test_sample_baseline_counts_attempts(toy_dir):
    scen = str(toy_dir / "toy_scenario.json")
    out = toy_dir / "b"
    assert main(["sample", "--scenario", scen, "--mode", "baseline", "--m", "500",
                 "--out", str(out)]) == 0
    rep = json.loads((out / "sample_report.json").read_text())
    assert rep["attempts"] > 500


def test_plan_deterministic(toy_dir):
    scen = str(toy_dir / "toy_scenario.json")
    outs = []
    for k in range(2):
        out = toy_dir / f"p{k}"
        assert main(["plan", "--scenario", scen, "--seed", "9", "--out", str(out),
                     "--no-timing"]) == 0
        outs.append(out)
    assert (outs[0] / "path.csv").read_bytes() == (outs[1] / "path.csv").read_bytes()
    assert (outs[0] / "result.json").read_bytes() == (outs[1] / "result.json").read_bytes()
    assert json.loads((outs[0] / "result.json").read_text())["solved"]


def test_bench_jobs_invariant(toy_dir):
    scen = str(toy_dir / "toy_scenario.json")
    csvs = []
    for jobs in ("1", "2"):
        out = toy_dir / f"bench{jobs}"
        assert main(["bench", "--scenario", scen, "--experiment", "first_feasible", "--trials", "6",
                     "--jobs", jobs, "--no-timing", "--out", str(out)]) == 0
        csvs.append((out / "trials.csv").read_bytes())
    assert csvs[0] == csvs[1]


def test_exit_codes(tmp_path, toy_dir, capsys):
    bad = json.loads((toy_dir / "toy_scenario.json").read_text())
    bad["safety_distanse"] = 1.0
    (tmp_path / "typo.json").write_text(json.dumps(bad))
    assert main(["prepare", "--scenario", str(tmp_path / "typo.json"), "--data",
                 str(toy_dir / "toy_data.csv"), "--out", str(tmp_path)]) == 2

    small = json.loads((toy_dir / "toy_scenario.json").read_text())
    small["H"] = [400.0, 0.0, 0.0, 400.0]
    (tmp_path / "big_h.json").write_text(json.dumps(small))
    assert main(["prepare", "--scenario", str(tmp_path / "big_h.json"), "--data",
                 str(toy_dir / "toy_data.csv"), "--out", str(tmp_path)]) == 3

    gauss = json.loads((toy_dir / "toy_scenario.json").read_text())
    gauss["kernel"] = "gaussian"
    (tmp_path / "gauss.json").write_text(json.dumps(gauss))
    assert main(["prepare", "--scenario", str(tmp_path / "gauss.json"), "--data",
                 str(toy_dir / "toy_data.csv"), "--out", str(tmp_path)]) == 2
    assert "unbounded support" in capsys.readouterr().err

    (tmp_path / "bad.csv").write_text("x,y\n1,nan\n")
    assert main(["prepare", "--scenario", str(toy_dir / "toy_scenario.json"), "--data",
                 str(tmp_path / "bad.csv"), "--out", str(tmp_path)]) == 2


def test_scenario_round_trip(tmp_path):
    sf = ScenarioFile(dimension=3, boundary=[0, 0, 0, 5, 5, 5], data_file="d.csv",
                      kernel="box", H=[1, 0, 0, 0, 1, 0, 0, 0, 1], obstacles=[[1, 1, 1, 2, 2, 2]],
                      start=[0.5, 0.5, 0.5], goal=[4, 4, 4], planner={"step": 0.5}, q="inf")
    sf.save(tmp_path / "s.json")
    assert ScenarioFile.load(tmp_path / "s.json") == sf


def test_schema_checks():
    from rfplan.errors import ContractViolation
    import jsonschema
    doc = {"dimension": 2, "boundary": [[0, 0], [1, 0], [1, 1]], "data_file": "d.csv",
           "kernel": "box", "H": [1, 0, 0, 1, 0, 0, 0, 0, 1]}
    with pytest.raises(ContractViolation):
        ScenarioFile.from_dict(doc)
    doc["H"] = [1, 0, 0, 1]
    doc["kernal"] = "box"
    with pytest.raises(jsonschema.ValidationError):
        ScenarioFile.from_dict(doc)


def test_read_points_validation(tmp_path):
    from rfplan.errors import ContractViolation
    for text in ("", "a,b\n1,2\n", "x,y\n", "x,y\n1,2,3\n", "x,y\n1,zz\n"):
        (tmp_path / "p.csv").write_text(text)
        with pytest.raises(ContractViolation):
            read_points(tmp_path / "p.csv", 2)
    (tmp_path / "p.csv").write_text("x,y,z\n1,2,3\n")
    with pytest.raises(ContractViolation):
        read_points(tmp_path / "p.csv", 2)
