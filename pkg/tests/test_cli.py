import numpy as np
import pytest

from mscgc import cli, hsi_io, pipeline


def _gen(tmp_path, name, *extra):
    out = tmp_path / name
    argv = ["gen", "--rows", "20", "--cols", "20", "--k", "3", "--bands", "16", "--seed", "1",
            "--out", str(out), *extra]
    assert cli.main(argv) == 0
    return out


def _run(tmp_path, data, name, *extra):
    out = tmp_path / name
    argv = ["run", "--cube", str(data / "cube.hdr"), "--labels", str(data / "labels.pgm"),
            "--output", str(out), "--patch-size", "5", "--emp-radii", "1,2", "--knn", "10",
            "--clusters", "3", "--restarts", "3", *extra]
    return cli.main(argv), out


def _run_log(path):
    values = {}
    for line in path.read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            values[key.strip()] = value.split("#")[0].strip()
    return values


def test_gen_is_deterministic(tmp_path):
    a = _gen(tmp_path, "a")
    b = _gen(tmp_path, "b")
    for name in ("cube.hdr", "cube.f32", "labels.pgm"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_gen_round_trip(tmp_path):
    out = _gen(tmp_path, "d")
    cube = hsi_io.load_cube(out / "cube.hdr")
    labels = hsi_io.load_labels(out / "labels.pgm", cube.rows, cube.cols)
    assert cube.shape == (20, 20, 16)
    assert labels.shape == (20, 20)
    assert set(np.unique(labels.labels)) == {0, 1, 2, 3}


def test_gen_rejects_bad_spec(tmp_path, capsys):
    assert cli.main(["gen", "--rows", "2", "--k", "3", "--out", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_run_writes_artifacts(tmp_path):
    data = _gen(tmp_path, "d")
    code, out = _run(tmp_path, data, "o")
    assert code == 0
    for name in ("labels.pgm", "affinity.pgm", "metrics.txt", "run.txt"):
        assert (out / name).exists()
    report = hsi_io.read_report(out / "metrics.txt")
    assert float(report["oa"]) >= 0.98
    log = _run_log(out / "run.txt")
    assert int(log["spatial_dim"]) == 5 ** 2 * 4
    assert int(log["emp_dim"]) == 4 * (2 * 2 + 1)
    assert hsi_io.read_pgm(out / "labels.pgm").shape == (20, 20)
    n = int(report["samples"])
    assert hsi_io.read_pgm(out / "affinity.pgm").shape == (n, n)


def test_uniform_and_attention_both_complete(tmp_path):
    data = _gen(tmp_path, "d")
    code_u, out_u = _run(tmp_path, data, "u", "--fusion", "uniform")
    code_a, out_a = _run(tmp_path, data, "a", "--fusion", "attention", "--epochs", "10")
    assert code_u == code_a == 0
    uniform = _run_log(out_u / "run.txt")
    attention = _run_log(out_a / "run.txt")
    assert float(uniform["weight_emp"]) == pytest.approx(2 ** -0.5, abs=1e-6)
    assert "weight_emp" in attention and "weight_spatial" in attention
    assert "fusion_loss_final" in attention


def test_config_file_with_override(tmp_path):
    data = _gen(tmp_path, "d")
    config = tmp_path / "run.cfg"
    config.write_text(
        "# synthetic stripes\n"
        f"cube = {data / 'cube.hdr'}\n"
        f"labels = {data / 'labels.pgm'}\n"
        f"output = {tmp_path / 'o'}\n"
        "patch_size = 5\nemp_radii = 1,2\nknn = 10\nclusters = 3\nrestarts = 2\nepochs = 5\n"
    )
    assert cli.main(["run", "--config", str(config), "--knn", "8"]) == 0
    log = _run_log(tmp_path / "o" / "run.txt")
    assert log["knn"] == "8"
    assert log["patch_size"] == "5"
    assert log["lam"] == "100.0"


def test_preset_values():
    config = pipeline.resolve_config({"preset": "indian"})
    assert (config.patch_size, config.knn, config.lam, config.clusters, config.pca_dims) == (13, 30, 100.0, 4, 4)
    config = pipeline.resolve_config({"preset": "indian"}, {"knn": 5})
    assert config.knn == 5


@pytest.mark.parametrize("key, value", [("patch_size", 4), ("knn", 0), ("lam", 0.0), ("clusters", 1)])
def test_config_invariants(key, value):
    with pytest.raises(ValueError):
        pipeline.resolve_config({key: value})


def test_config_parse_errors():
    with pytest.raises(ValueError):
        pipeline.parse_config_text("no equals sign here\n")
    with pytest.raises(ValueError):
        pipeline.parse_config_text("unknown_key = 3\n")


def test_run_failure_names_stage(tmp_path, capsys):
    data = _gen(tmp_path, "d")
    code, _ = _run(tmp_path, data, "o", "--pca-dims", "40")
    assert code == 1
    assert "pca" in capsys.readouterr().err


def test_run_missing_input(tmp_path, capsys):
    code = cli.main(["run", "--cube", str(tmp_path / "absent.hdr"), "--labels", str(tmp_path / "x.pgm"),
                     "--clusters", "3"])
    assert code == 1
    assert "error: load" in capsys.readouterr().err


def test_eval_scores_label_files(tmp_path, capsys):
    truth = np.array([[0, 1, 1], [2, 2, 0]])
    pred = np.array([[5, 7, 7], [3, 3, 9]])
    hsi_io.write_pgm(tmp_path / "truth.pgm", truth)
    hsi_io.write_pgm(tmp_path / "pred.pgm", pred)
    assert cli.main(["eval", str(tmp_path / "pred.pgm"), str(tmp_path / "truth.pgm"),
                     "--out", str(tmp_path / "m.txt")]) == 0
    report = hsi_io.read_report(tmp_path / "m.txt")
    assert float(report["oa"]) == 1.0
    assert int(report["samples"]) == 4
    assert "oa = 1.0000" in capsys.readouterr().out


def test_eval_shape_mismatch(tmp_path):
    hsi_io.write_pgm(tmp_path / "a.pgm", np.zeros((2, 3), dtype=int))
    hsi_io.write_pgm(tmp_path / "b.pgm", np.ones((3, 2), dtype=int))
    assert cli.main(["eval", str(tmp_path / "a.pgm"), str(tmp_path / "b.pgm")]) == 1
