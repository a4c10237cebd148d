import json

import numpy as np
import pytest

from lscl.cli import main
from lscl.dataset import load_dataset, manifest_path, save_dataset, split_two_fold
from lscl.preprocess import write_image


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def synth_csv(tmp_path, capsys):
    path = tmp_path / "data.csv"
    code, _, _ = run(capsys, "synth", "--classes", 4, "--per-class", 8, "--dim", 12, "--seed", 3, "--output", path)
    assert code == 0
    return path


def test_synth_counts_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        code, out, _ = run(capsys, "synth", "--classes", 20, "--per-class", 30, "--dim", 64, "--seed", 7, "--output", p)
        assert code == 0 and "600 samples" in out
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 601
    assert manifest_path(a).read_bytes() == manifest_path(b).read_bytes()
    assert load_dataset(a).class_count == 20


def test_synth_zero_classes_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        main(["synth", "--classes", "0", "--per-class", "3", "--dim", "2", "--output", str(tmp_path / "x.csv")])
    assert e.value.code == 2
    assert not (tmp_path / "x.csv").exists()


def make_image_tree(root, classes=("acer", "betula"), per=3, seed=0):
    rng = np.random.default_rng(seed)
    for ci, name in enumerate(classes):
        d = root / name
        d.mkdir(parents=True)
        for i in range(per):
            img = np.full((40, 36, 3), 240, dtype=np.uint8)
            top, left = 5 + i, 4 + 2 * ci
            img[top : top + 25, left : left + 20] = rng.integers(0, 90, size=3)
            if i % 2:
                write_image(d / f"{i}.ppm", img)
            else:
                write_image(d / f"{i}.pgm", img[..., 1])


def test_preprocess_directory(tmp_path, capsys):
    make_image_tree(tmp_path / "imgs")
    out1, out2 = tmp_path / "f1.csv", tmp_path / "f2.csv"
    code, out, _ = run(capsys, "preprocess", tmp_path / "imgs", "--output", out1)
    assert code == 0 and out.count("ok ") == 6
    run(capsys, "preprocess", tmp_path / "imgs", "--output", out2)
    assert out1.read_bytes() == out2.read_bytes()
    ds = load_dataset(out1)
    assert (ds.n, ds.dim) == (6, 1024)
    assert ds.labels == ("acer", "betula")
    assert np.allclose(np.linalg.norm(ds.vectors, axis=1), 1.0, atol=1e-12)


def test_preprocess_empty_class(tmp_path, capsys):
    make_image_tree(tmp_path / "imgs")
    (tmp_path / "imgs" / "quercus").mkdir()
    code, _, err = run(capsys, "preprocess", tmp_path / "imgs", "--output", tmp_path / "f.csv")
    assert code != 0 and "quercus" in err
    assert not (tmp_path / "f.csv").exists()


def test_preprocess_unreadable_file(tmp_path, capsys):
    make_image_tree(tmp_path / "imgs")
    bad = tmp_path / "imgs" / "acer" / "broken.pgm"
    bad.write_bytes(b"P5 garbage")
    code, out, _ = run(capsys, "preprocess", tmp_path / "imgs", "--output", tmp_path / "f.csv")
    assert code != 0
    assert "FAIL" in out and "broken.pgm" in out
    assert not (tmp_path / "f.csv").exists()


def split_files(tmp_path, synth_csv, labeled=True):
    train, test = split_two_fold(load_dataset(synth_csv), 0)
    save_dataset(train, tmp_path / "train.csv")
    lines = ["label," + ",".join(f"f{i}" for i in range(test.dim))] if labeled else []
    for v, c in zip(test.vectors, test.class_ids):
        vals = ",".join(repr(float(x)) for x in v)
        lines.append(f"{test.labels[c]},{vals}" if labeled else vals)
    (tmp_path / "test.csv").write_text("\n".join(lines) + "\n")
    return tmp_path / "train.csv", tmp_path / "test.csv", test


def test_classify_methods_reported_separately(tmp_path, capsys, synth_csv):
    train, test, ds_test = split_files(tmp_path, synth_csv)
    code, out, _ = run(capsys, "classify", "--train", train, "--test", test, "--method", "lmc",
                       "--methods", "lscl", "--k", 3, "--s-candidates", 2)
    assert code == 0
    assert "== lmc ==" in out and "== lscl ==" in out
    assert "candidates=" in out and "residues=" in out
    assert out.count("accuracy=") == 2

    code, out, _ = run(capsys, "classify", "--train", train, "--test", test, "--methods", "lscl,lmc",
                       "--k", 3, "--s-candidates", 2, "--format", "json")
    res = json.loads(out)
    assert set(res) == {"lscl", "lmc"}
    for method in res:
        summary = res[method]["summary"]
        assert summary["samples"] == ds_test.n and summary["errors"] == 0
        assert all("correct" in d for d in res[method]["decisions"])
    assert "residues" in res["lscl"]["decisions"][0]


def test_classify_unlabeled(tmp_path, capsys, synth_csv):
    train, test, ds_test = split_files(tmp_path, synth_csv, labeled=False)
    code, out, _ = run(capsys, "classify", "--train", train, "--test", test, "--k", 3, "--s-candidates", 2,
                       "--format", "json")
    assert code == 0
    decisions = json.loads(out)["lscl"]["decisions"]
    assert len(decisions) == ds_test.n and "truth" not in decisions[0]


def test_classify_errors(tmp_path, capsys, synth_csv):
    train, test, _ = split_files(tmp_path, synth_csv)
    with pytest.raises(SystemExit) as e:
        main(["classify", "--train", str(train), "--test", str(test), "--s-candidates", "0"])
    assert e.value.code != 0
    (tmp_path / "short.csv").write_text("1,2,3\n")
    code, _, err = run(capsys, "classify", "--train", train, "--test", tmp_path / "short.csv", "--k", 3)
    assert code != 0 and "dimension" in err
    code, _, err = run(capsys, "classify", "--train", train, "--test", test, "--k", 3, "--s-candidates", 9)
    assert code != 0 and "exceeds" in err


def test_classify_partial_failure_exit_code(tmp_path, capsys, synth_csv):
    train, _, _ = split_files(tmp_path, synth_csv)
    rows = [",".join(["1.0"] * 12), ",".join(["0.0"] * 12)]
    (tmp_path / "t.csv").write_text("\n".join(rows) + "\n")
    code, out, _ = run(capsys, "classify", "--train", train, "--test", tmp_path / "t.csv", "--k", 3,
                       "--s-candidates", 2)
    assert code == 1 and "ERROR" in out and "pred=None" in out


def test_bench_shared_splits_and_determinism(capsys, synth_csv):
    args = ["bench", synth_csv, "--methods", "lscl,src", "--k", 3, "--s-candidates", 2, "--reps", 2,
            "--seed", 5, "--format", "json"]
    code, out, _ = run(capsys, *args)
    assert code == 0
    reports = json.loads(out)
    assert [r["method"] for r in reports] == ["lscl", "src"]
    assert all(r["config"]["seed"] == 5 and r["repetitions"] == 2 for r in reports)
    _, again, _ = run(capsys, *args)
    strip = lambda rs: [(r["mean_accuracy"], r["std_accuracy"], r["per_class_accuracy"]) for r in rs]
    assert strip(json.loads(again)) == strip(reports)

    code, out, _ = run(capsys, "bench", synth_csv, "--methods", "lscl,src", "--k", 3, "--s-candidates", 2,
                       "--reps", 2)
    assert code == 0 and "lscl" in out and "src" in out and "±" in out


def test_bench_sweep(capsys, synth_csv):
    code, out, _ = run(capsys, "bench", synth_csv, "--sweep-k", "2:4", "--s-candidates", 2, "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert [c["k"] for c in data["sweep"]] == [2, 3, 4]
    assert all(r["scheme"] == "leave_one_out" for r in data["reports"])
    code, out, _ = run(capsys, "bench", synth_csv, "--sweep-k", "2:3", "--s-candidates", 2)
    assert code == 0 and "accuracy" in out


def test_bench_rejects_bad_range(synth_csv):
    with pytest.raises(SystemExit):
        main(["bench", str(synth_csv), "--sweep-k", "9:2"])
