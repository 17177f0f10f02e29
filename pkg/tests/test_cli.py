import math

import numpy as np
import pytest

from eitdsp.cli import format_value, main


def _summary(path):
    out = {}
    for line in (path / "summary.txt").read_text().splitlines():
        k, v = line.split(" = ", 1)
        out[k] = v
    return out


def test_verify_algebra_seed_7(tmp_path):
    assert main(["verify-algebra", "--out", str(tmp_path), "--seed", "7"]) == 0
    s = _summary(tmp_path)
    assert s["seed"] == "7"
    assert float(s["max_commutator_residual"]) <= 1e-10
    assert float(s["max_dark_annihilation_residual"]) <= 1e-10
    table = (tmp_path / "table.csv").read_text().splitlines()
    assert table[0].startswith("draw,commutator") and len(table) == 51


def test_split_summary_amplitudes(tmp_path):
    cfg = tmp_path / "split.yaml"
    cfg.write_text("protocol: split\nm: 4\ng: [0.1, 0.1]\nN: 100\ninput:\n  alpha0: 2.0\n")
    assert main(["split", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    s = _summary(tmp_path / "o")
    for key in ("alpha_e1", "alpha_e2"):
        assert abs(float(s[key]) - 2.0 / math.sqrt(2)) < 1e-2
    header = (tmp_path / "o" / "timeseries.csv").read_text().splitlines()[0].split(",")
    assert header[:3] == ["time", "dark_overlap", "norm"]


def test_identical_runs_are_byte_identical(tmp_path):
    cfg = tmp_path / "s.yaml"
    cfg.write_text("protocol: storage\nfamily: ensemble\nk: 2\ng: 1.0\nN: 1\ninput: {alpha0: 1.0}\n")
    for name in ("a", "b"):
        assert main(["--config", str(cfg), "--out", str(tmp_path / name), "--seed", "3"]) == 0
    for f in ("timeseries.csv", "summary.txt", "report.txt"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_changes_only_random_draws(tmp_path):
    for seed in ("1", "2"):
        main(["verify-algebra", "--out", str(tmp_path / seed), "--seed", seed])
    a = (tmp_path / "1" / "table.csv").read_text()
    b = (tmp_path / "2" / "table.csv").read_text()
    assert a != b


def test_bad_config_gives_one_diagnostic(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("protocol: storage\nfamily: ensemble\nk: 3\ng: [0.1, 0.2]\n")
    assert main(["--config", str(cfg)]) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and "g:" in err[0]


def test_subcommand_must_match_config(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("protocol: storage\n")
    assert main(["split", "--config", str(cfg)]) == 2
    assert "protocol" in capsys.readouterr().err


def test_missing_arguments(capsys):
    assert main([]) == 2
    assert main(["--seed", "-1", "storage"]) == 2


def test_batch_runs_every_config(tmp_path, capsys):
    d = tmp_path / "cfgs"
    d.mkdir()
    (d / "b.yaml").write_text("protocol: validate-bosonization\nbosonization: {atoms: [4, 8], excitations: [0, 1]}\n")
    (d / "s.yaml").write_text(
        "protocol: spectrum\nm: 5\ng: 1.0\nN: 4\nschedule: {omega: [1, 2, 0.5]}\nnumerics: {n_cap: 4, max_quanta: 2}\n"
    )
    (d / "x.yaml").write_text("protocol: [\n")
    assert main(["--batch", str(d), "--out", str(tmp_path / "out"), "--workers", "2"]) == 2
    out = capsys.readouterr()
    assert "b.yaml: ok" in out.out and "s.yaml: ok" in out.out and "x.yaml: failed" in out.out
    assert "line" in out.err
    s = _summary(tmp_path / "out" / "b")
    assert float(s["residual_N4_n1"]) == pytest.approx(0.5)
    assert float(_summary(tmp_path / "out" / "s")["max_eigenvalue_residual"]) < 1e-10


@pytest.mark.parametrize(
    "value,text",
    [
        (0.1, "0.10000000000000001"),
        (1, "1"),
        (True, "true"),
        (np.float64(2.5), "2.5"),
        ((1.0, 2.0), "1,2"),
        (complex(1, -2), "1-2j"),
        ("x", "x"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_float_format_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.normal(size=100) * 10.0 ** rng.integers(-20, 20, 100):
        assert float(format_value(x)) == x
