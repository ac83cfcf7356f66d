import json

import numpy as np
import pytest

from cbome.cli import main
from cbome.config import ConfigError, ExperimentConfig, load_config
from cbome.report import SCHEMAS, read_csv, write_csv
from cbome.segmentation import GrayImage, write_pgm


def write_cfg(path, doc):
    path.write_text(json.dumps(doc))
    return path


def csv_without(path, drop=()):
    header, rows = read_csv(path)
    return [{k: v for k, v in r.items() if k not in drop} for r in rows]


SMALL_BENCH = {"objectives": ["sphere"], "dim": 3, "n_runs": 1, "N": [20],
               "solver": {"k_max": 50}}


def test_config_rejects_unknown_keys(tmp_path):
    with pytest.raises(ConfigError, match="unknown keys"):
        load_config(write_cfg(tmp_path / "c.json", {"kind": "benchmark", "colour": 1}))
    with pytest.raises(ConfigError, match="solver"):
        load_config(write_cfg(tmp_path / "c.json", {"kind": "benchmark", "solver": {"lamda": 1}}))
    with pytest.raises(ConfigError, match="does not match"):
        load_config(write_cfg(tmp_path / "c.json", {"kind": "segment", "image": "x"}), "benchmark")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"objectives": ["nope"]}, "benchmark")


def test_config_kind_defaults():
    assert ExperimentConfig.from_dict({}, "approx").solver.n0 == 500
    assert ExperimentConfig.from_dict({"image": "a.pgm"}, "segment").solver.sampler == "uniform-box"
    assert ExperimentConfig.from_dict({}, "compare").methods == ["cbo_me", "cbo_plain",
                                                                 "cbo_plain_restart"]


def test_csv_roundtrip(tmp_path):
    header = ("epoch", "loss")
    rows = [(0, 0.1), (1, 1 / 3)]
    write_csv(tmp_path / "l.csv", header, rows)
    raw = (tmp_path / "l.csv").read_bytes()
    assert b"\r" not in raw and raw.startswith(b"epoch,loss\n")
    h, back = read_csv(tmp_path / "l.csv")
    assert h == header and back[1]["loss"] == 1 / 3
    with pytest.raises(ValueError):
        write_csv(tmp_path / "x.csv", ("a", "b"), [])
    assert all(len(h) == len(k) for h, k in SCHEMAS.items())


def test_read_csv_rejects_bad_rows(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("epoch,loss\n1\n")
    with pytest.raises(ValueError):
        read_csv(p)


def test_benchmark_single_cell(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", SMALL_BENCH)
    assert main(["benchmark", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    header, rows = read_csv(tmp_path / "o" / "benchmark.csv")
    assert len(rows) == 1
    assert rows[0]["objective"] == "sphere" and rows[0]["N"] == 20
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["config"]["kind"] == "benchmark"


def test_seed_flag_overrides_and_determines_output(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {**SMALL_BENCH, "seed": 1, "mu": [0.0, 0.2]})
    for name, seed in (("a", "5"), ("b", "5"), ("c", "6")):
        assert main(["benchmark", "--config", str(cfg), "--seed", seed, "--out",
                     str(tmp_path / name)]) == 0
    read = lambda n: (tmp_path / n / "benchmark.csv").read_bytes()  # noqa: E731
    assert read("a") == read("b")
    assert read("a") != read("c")


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json", {"bogus": True})
    assert main(["benchmark", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_segment_two_delta(tmp_path):
    px = np.full((16, 16), 10, dtype=np.uint8)
    px[8:] = 200
    write_pgm(GrayImage(px), tmp_path / "img.pgm")
    cfg = write_cfg(tmp_path / "c.json", {"image": str(tmp_path / "img.pgm"), "thresholds": 1,
                                          "solver": {"n0": 20, "k_max": 100}})
    assert main(["segment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, rows = read_csv(tmp_path / "o" / "segment.csv")
    cbo = rows[0]
    assert cbo["method"] == "cbo_me"
    assert 11 <= cbo["thresholds"][0] <= 200
    assert cbo["psnr"] == float("inf")


def test_segment_missing_image(tmp_path, capsys):
    cfg = write_cfg(tmp_path / "c.json", {"image": str(tmp_path / "none.pgm")})
    assert main(["segment", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "not found" in capsys.readouterr().err


def test_approx_zero_budget(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {"width": 4, "grid": 16, "solver": {"k_max": 0, "n0": 10}})
    assert main(["approx", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, loss = read_csv(tmp_path / "o" / "loss.csv")
    assert len(loss) == 1
    _, pred = read_csv(tmp_path / "o" / "prediction.csv")
    assert len(pred) == 16


def test_validate_selection_tiny(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {"n": 2, "dims": [1], "trials": 10})
    assert main(["validate-selection", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, rows = read_csv(tmp_path / "o" / "selection.csv")
    assert len(rows) == 1 and rows[0]["n_sel"] == 1


def test_validate_selection_row_count(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {"n": 12, "trials": 3})
    assert main(["validate-selection", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, rows = read_csv(tmp_path / "o" / "selection.csv")
    assert len(rows) == 2 * 10
    assert all(r["empirical_w2sq"] <= 1.05 * r["bound_prop4"] for r in rows)


def test_compare_writes_all_methods(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", {**SMALL_BENCH, "kind": "compare"})
    assert main(["compare", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    _, rows = read_csv(tmp_path / "o" / "compare.csv")
    assert [r["method"] for r in rows] == ["cbo_me", "cbo_plain", "cbo_plain_restart"]
