import json

import numpy as np
import pytest
from click.testing import CliRunner

from molfgw.cli import bench, conan, fgw, validate
from molfgw.graphs import AttributedGraph
from molfgw.io import graph_from_dict, write_graph_json


def sym(B):
    return 0.5 * (B + B.T)


@pytest.fixture
def graph_files(tmp_path):
    rng = np.random.default_rng(0)
    paths = []
    for i in range(3):
        g = AttributedGraph(
            H=rng.normal(size=(4, 3)), A=sym(rng.uniform(0.1, 2.0, size=(4, 4)))
        )
        p = tmp_path / f"g{i}.json"
        write_graph_json(p, g)
        paths.append(str(p))
    return paths


def test_dist_outputs_json(graph_files):
    r = CliRunner().invoke(
        fgw, ["dist", "--g1", graph_files[0], "--g2", graph_files[1]]
    )
    assert r.exit_code == 0, r.output
    out = json.loads(r.output)
    assert set(out) >= {"cost", "value_entropic", "inner_iterations", "converged", "marginal_err"}
    assert out["value_entropic"] < out["cost"]


def test_dist_missing_flag_exits_1(graph_files):
    r = CliRunner().invoke(fgw, ["dist", "--g1", graph_files[0]])
    assert r.exit_code == 1
    assert "missing required flag --g2" in r.output


def test_unknown_flag_exits_1(graph_files):
    r = CliRunner().invoke(fgw, ["dist", "--g1", graph_files[0], "--bogus", "1"])
    assert r.exit_code == 1
    assert "--bogus" in r.output


def test_dist_missing_file_exits_1(tmp_path, graph_files):
    r = CliRunner().invoke(
        fgw, ["dist", "--g1", graph_files[0], "--g2", str(tmp_path / "nope.json")]
    )
    assert r.exit_code == 1
    assert "no such file" in r.output


def test_dist_bad_json_exits_1(tmp_path, graph_files):
    bad = tmp_path / "bad.json"
    bad.write_text('{"n": 2, "d": 1, "H": [[0.0]], "A": [[0,1],[1,0]]}')
    r = CliRunner().invoke(
        fgw, ["dist", "--g1", graph_files[0], "--g2", str(bad)]
    )
    assert r.exit_code == 1
    assert "invalid graph JSON" in r.output


def test_dist_bad_alpha_exits_1(graph_files):
    r = CliRunner().invoke(
        fgw,
        ["dist", "--g1", graph_files[0], "--g2", graph_files[1], "--alpha", "1.5"],
    )
    assert r.exit_code == 1


def test_dist_byte_reproducible(tmp_path, graph_files):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    args = ["dist", "--g1", graph_files[0], "--g2", graph_files[1]]
    assert CliRunner().invoke(fgw, args + ["--out", str(out1)]).exit_code == 0
    assert CliRunner().invoke(fgw, args + ["--out", str(out2)]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_barycenter_roundtrip_and_order_invariance(tmp_path, graph_files):
    out1, out2 = tmp_path / "b1.json", tmp_path / "b2.json"
    base = ["barycenter", "--epsilon", "0.1", "--outer-iters", "4", "--threads", "2"]
    fwd = sum([["--graphs", p] for p in graph_files], [])
    rev = sum([["--graphs", p] for p in graph_files[::-1]], [])
    assert CliRunner().invoke(fgw, base + fwd + ["--out", str(out1)]).exit_code == 0
    assert CliRunner().invoke(fgw, base + rev + ["--out", str(out2)]).exit_code == 0
    g1 = graph_from_dict(json.loads(out1.read_text()))
    g2 = graph_from_dict(json.loads(out2.read_text()))
    assert np.max(np.abs(g1.A - g2.A)) <= 1e-10
    assert np.max(np.abs(g1.H - g2.H)) <= 1e-10


def test_barycenter_emit_couplings(tmp_path, graph_files):
    out = tmp_path / "b.json"
    args = ["barycenter", "--outer-iters", "2", "--emit-couplings", "--out", str(out)]
    args += sum([["--graphs", p] for p in graph_files[:2]], [])
    assert CliRunner().invoke(fgw, args).exit_code == 0
    obj = json.loads(out.read_text())
    assert len(obj["couplings"]) == 2
    pi = np.array(obj["couplings"][0])
    assert pi.shape == (4, 4)
    assert abs(pi.sum() - 1.0) < 1e-6


def test_barycenter_size_mismatch_needs_nbar(tmp_path, graph_files):
    small = tmp_path / "small.json"
    write_graph_json(
        small, AttributedGraph(H=np.zeros((2, 3)), A=np.zeros((2, 2)))
    )
    args = ["barycenter", "--graphs", graph_files[0], "--graphs", str(small),
            "--out", str(tmp_path / "o.json")]
    r = CliRunner().invoke(fgw, args)
    assert r.exit_code == 1
    assert "n_bar" in r.output
    r = CliRunner().invoke(fgw, args + ["--nbar", "3", "--outer-iters", "2"])
    assert r.exit_code == 0


def test_no_partial_output_on_failure(tmp_path, graph_files):
    out = tmp_path / "never.json"
    args = ["barycenter", "--graphs", graph_files[0], "--graphs", "missing.json",
            "--out", str(out)]
    assert CliRunner().invoke(fgw, args).exit_code == 1
    assert not out.exists()


def test_validate_pass_and_fail(tmp_path, graph_files):
    r = CliRunner().invoke(validate, ["--graph", graph_files[0]])
    assert r.exit_code == 0
    assert "pass" in r.output
    bad = tmp_path / "bad.json"
    bad.write_text(
        '{"n": 2, "d": 1, "H": [[0.0],[0.0]], "A": [[0,1],[1,0]], "omega": [0.9, 0.9]}'
    )
    r = CliRunner().invoke(validate, ["--graph", str(bad)])
    assert r.exit_code == 1
    assert "sum" in r.output
    r = CliRunner().invoke(validate, [])
    assert r.exit_code == 1


def write_conan_inputs(tmp_path):
    rng = np.random.default_rng(1)
    mol = tmp_path / "mol.json"
    mol.write_text(json.dumps({
        "node_features": rng.normal(size=(3, 4)).tolist(),
        "edges": [[0, 1], [1, 2]],
    }))
    xyz = tmp_path / "confs.xyz"
    frames = []
    for _ in range(3):
        R = rng.normal(0.0, 1.0, size=(3, 3))
        body = "\n".join(
            f"{s} {r[0]:.6f} {r[1]:.6f} {r[2]:.6f}"
            for s, r in zip(["O", "H", "H"], R)
        )
        frames.append(f"3\nframe\n{body}")
    xyz.write_text("\n".join(frames) + "\n")
    return str(mol), str(xyz)


def test_conan_forward_runs_and_reproduces(tmp_path):
    mol, xyz = write_conan_inputs(tmp_path)
    out1, out2 = tmp_path / "y1.json", tmp_path / "y2.json"
    args = ["forward", "--graph2d", mol, "--conformers", xyz, "--seed", "11",
            "--dim", "6", "--epsilon", "0.1"]
    assert CliRunner().invoke(conan, args + ["--out", str(out1)]).exit_code == 0
    assert CliRunner().invoke(conan, args + ["--out", str(out2)]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()
    obj = json.loads(out1.read_text())
    assert np.isfinite(obj["y_hat"])
    assert len(obj["h3d"][0]) == 3  # one column per conformer


def test_conan_forward_k_limits_frames(tmp_path):
    mol, xyz = write_conan_inputs(tmp_path)
    r = CliRunner().invoke(
        conan,
        ["forward", "--graph2d", mol, "--conformers", xyz, "--seed", "1",
         "--dim", "6", "--k", "2"],
    )
    assert r.exit_code == 0
    assert len(json.loads(r.output)["h3d"][0]) == 2
    r = CliRunner().invoke(
        conan,
        ["forward", "--graph2d", mol, "--conformers", xyz, "--seed", "1", "--k", "9"],
    )
    assert r.exit_code == 1


def test_conan_missing_seed_exits_1(tmp_path):
    mol, xyz = write_conan_inputs(tmp_path)
    r = CliRunner().invoke(conan, ["forward", "--graph2d", mol, "--conformers", xyz])
    assert r.exit_code == 1
    assert "--seed" in r.output


def test_bench_runtime_emits_all_artifacts(tmp_path):
    out = tmp_path / "rt.json"
    r = CliRunner().invoke(
        bench,
        ["runtime", "--kvalues", "1,2,4", "--n", "5", "--d", "3", "--repeats", "1",
         "--out", str(out)],
    )
    assert r.exit_code == 0, r.output
    assert out.exists()
    assert (tmp_path / "rt.csv").exists()
    assert (tmp_path / "rt.png").exists()
    obj = json.loads(out.read_text())
    assert len(obj["ratios"]) == 2


def test_bench_runtime_too_few_kvalues(tmp_path):
    r = CliRunner().invoke(
        bench, ["runtime", "--kvalues", "1,2", "--out", str(tmp_path / "x.json")]
    )
    assert r.exit_code == 1


def test_bench_bound_small(tmp_path):
    out = tmp_path / "bd.json"
    r = CliRunner().invoke(
        bench, ["bound", "--pairs", "2", "--n", "4", "--out", str(out)]
    )
    assert r.exit_code == 0, r.output
    obj = json.loads(out.read_text())
    assert obj["holds_all"] is True
    assert (tmp_path / "bd.png").exists()


def test_bench_convergence_small(tmp_path):
    out = tmp_path / "cv.json"
    r = CliRunner().invoke(
        bench,
        ["convergence", "--n", "4", "--kmax", "4", "--trials", "2", "--dim", "4",
         "--out", str(out)],
    )
    assert r.exit_code == 0, r.output
    obj = json.loads(out.read_text())
    assert obj["k_values"] == [2, 4]
    assert (tmp_path / "cv.csv").exists()
    assert (tmp_path / "cv.png").exists()
