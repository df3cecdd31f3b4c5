"""Command-line surface: payload formats, determinism, and exit codes."""

import json

import numpy as np
import pytest

from kbitq import build_int_codebook, read_container, read_kbq
from kbitq.cli import main


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


HEADER = "family,n_params,precision_bits,total_bits,metric_kind,value\n"


@pytest.fixture
def planted_csv(tmp_path):
    rows = [HEADER.strip()]
    for precision, offset in ((3.0, -0.02), (4.0, 0.08), (5.0, 0.03), (16.0, 0.0)):
        for x in (20, 23, 26):
            rows.append(f"synth,{2**x // 4},{precision},{2**x},accuracy,{0.01 * x + offset}")
    path = tmp_path / "records.csv"
    path.write_text("\n".join(rows) + "\n")
    return path


class TestQuantizeCommand:
    def test_synthetic_reports_quarter_bit_overhead(self, capsys, tmp_path):
        out_path = tmp_path / "t.kbq"
        code, out, _ = run_cli(
            capsys, "quantize", out_path, "--synthetic", "gaussian", "--seed", 7,
            "--shape", "128x64", "--bits", 4, "--block-size", 64,
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["tensors"]["synthetic_0"]["bits_per_param"]["total"] == 4.25
        assert read_kbq(out_path)  # file is readable

    def test_invalid_bits_is_usage_error(self, capsys, tmp_path):
        code, out, _ = run_cli(capsys, "quantize", tmp_path / "t.kbq", "--bits", 9,
                               "--synthetic", "gaussian")
        assert code == 2
        assert out == ""

    def test_missing_input_is_usage_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "quantize", tmp_path / "t.kbq")
        assert code == 2 and err

    def test_missing_file_is_runtime_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "quantize", tmp_path / "no.st", tmp_path / "t.kbq")
        assert code == 1 and err

    def test_float_two_bits_is_usage_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "quantize", tmp_path / "t.kbq", "--synthetic", "gaussian",
            "--bits", 2, "--dtype", "float",
        )
        assert code == 2 and err

    def test_quantize_dequantize_requantize_is_byte_identical(self, capsys, tmp_path):
        first, back, second = tmp_path / "a.kbq", tmp_path / "b.st", tmp_path / "c.kbq"
        args = ["--bits", 4, "--block-size", 64, "--dtype", "int"]
        assert run_cli(capsys, "quantize", first, "--synthetic", "gaussian",
                       "--seed", 3, "--shape", "96x64", *args)[0] == 0
        assert run_cli(capsys, "dequantize", first, back)[0] == 0
        assert run_cli(capsys, "quantize", back, second, *args)[0] == 0
        assert first.read_bytes() == second.read_bytes()

    def test_outlier_fraction_creates_sidecar_rows(self, capsys, tmp_path):
        out_path = tmp_path / "o.kbq"
        code, out, _ = run_cli(
            capsys, "quantize", out_path, "--synthetic", "gaussian", "--shape",
            "64x64,64x64", "--bits", 3, "--outlier-p", 0.05,
        )
        assert code == 0
        payload = json.loads(out)
        # chained 2-D tensors: first layer untreated, second gets round(.05*64)=3
        assert payload["tensors"]["synthetic_0"]["outlier_dims"] == 0
        assert payload["tensors"]["synthetic_1"]["outlier_dims"] == 3


class TestDequantizeCommand:
    def test_output_container_matches_library_decode(self, capsys, tmp_path):
        kbq, out_st = tmp_path / "t.kbq", tmp_path / "t.st"
        run_cli(capsys, "quantize", kbq, "--synthetic", "uniform", "--shape", "40x10",
                "--bits", 5)
        code, out, _ = run_cli(capsys, "dequantize", kbq, out_st)
        assert code == 0
        assert json.loads(out)["tensors"]["synthetic_0"] == [40, 10]
        from kbitq import dequantize_tensor

        expected = dequantize_tensor(read_kbq(kbq)["synthetic_0"]).astype(np.float32)
        assert np.array_equal(read_container(out_st).tensor("synthetic_0"), expected)

    def test_bad_magic_is_format_error(self, capsys, tmp_path):
        bad = tmp_path / "bad.kbq"
        bad.write_bytes(b"NOPE" + b"\0" * 16)
        code, _, err = run_cli(capsys, "dequantize", bad, tmp_path / "o.st")
        assert code == 3 and err


class TestInspectCommand:
    def test_reports_bits_and_errors(self, capsys, tmp_path):
        kbq, st = tmp_path / "t.kbq", tmp_path / "orig.st"
        run_cli(capsys, "quantize", kbq, "--synthetic", "gaussian", "--shape", "64x32",
                "--bits", 4, "--block-size", 64)
        run_cli(capsys, "dequantize", kbq, tmp_path / "dec.st")
        # rebuild the original container for the metrics
        from kbitq import make_tensor, write_container

        write_container(st, {"synthetic_0": make_tensor("gaussian", (64, 32), 0).astype(np.float32)})
        code, out, _ = run_cli(capsys, "inspect", kbq, "--against", st)
        assert code == 0
        payload = json.loads(out)
        entry = payload["tensors"]["synthetic_0"]
        assert entry["bits_per_param"]["total"] == 4.25
        assert entry["error"]["mse"] > 0
        assert payload["total_model_bits"] == 64 * 32 * 4 + 16 * 32


class TestCodebookCommand:
    def test_int_values_match_library(self, capsys):
        code, out, _ = run_cli(capsys, "codebook", "--kind", "int", "--bits", 3)
        assert code == 0
        payload = json.loads(out)
        assert payload["kind"] == "int" and payload["bits"] == 3
        assert payload["values"] == build_int_codebook(3).values.tolist()

    def test_quantile_requires_sample(self, capsys):
        code, _, err = run_cli(capsys, "codebook", "--kind", "quantile", "--bits", 4)
        assert code == 2 and err

    def test_quantile_from_container(self, capsys, tmp_path):
        from kbitq import write_container

        st = tmp_path / "s.st"
        rng = np.random.Generator(np.random.Philox(key=1))
        write_container(st, {"w": rng.standard_normal(5000).astype(np.float32)})
        code, out, _ = run_cli(capsys, "codebook", "--kind", "quantile", "--bits", 4,
                               "--sample", st)
        assert code == 0
        values = json.loads(out)["values"]
        assert len(values) == 16 and max(abs(v) for v in values) == 1.0


class TestSweepCommand:
    def test_grid_row_count_and_header(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep", "--synthetic", "gaussian", "--shape", "64x64",
            "--bits", "3,4", "--dtype", "int,float",
        )
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].startswith("kind,bits,exponent_bits,block_size,centered,outlier_p")
        assert len(lines) == 1 + 4

    def test_deterministic_output(self, capsys):
        args = ("sweep", "--synthetic", "student-t", "--seed", 5, "--shape", "32x32",
                "--bits", "3,4", "--dtype", "int", "--block-size", "16,whole")
        first = run_cli(capsys, *args)
        second = run_cli(capsys, *args)
        assert first == second and first[0] == 0

    def test_quantile_beats_int_at_whole_tensor_k4(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep", "--synthetic", "gaussian", "--seed", 11, "--shape", "1024x256",
            "--bits", "4", "--dtype", "int,quantile", "--block-size", "whole",
        )
        assert code == 0
        rows = [line.split(",") for line in out.strip().splitlines()]
        header = rows[0]
        mse = {row[0]: float(row[header.index("mse")]) for row in rows[1:]}
        assert mse["quantile"] < mse["int"]

    def test_empty_grid_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "sweep", "--synthetic", "gaussian", "--bits", "")
        assert code == 2 and err


class TestScalingFitCommand:
    def test_planted_optimum_fixture(self, capsys, planted_csv):
        budgets = ",".join(str(2.0**x) for x in (20.5, 22, 24, 25.5))
        code, out, _ = run_cli(capsys, "scaling-fit", planted_csv, "--budgets", budgets)
        assert code == 0
        payload = json.loads(out)
        assert [entry["best_precision"] for entry in payload["pareto"]] == [4.0] * 4

    def test_missing_header_is_data_format_error(self, capsys, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("synth,1000,4,1048576,accuracy,0.4\n")
        code, _, err = run_cli(capsys, "scaling-fit", path)
        assert code == 3 and err

    def test_single_group(self, capsys, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(
            HEADER + "synth,262144,4,1048576,accuracy,0.4\n"
            + "synth,4194304,4,16777216,accuracy,0.6\n"
        )
        code, out, _ = run_cli(capsys, "scaling-fit", path, "--budgets", str(2**21))
        assert code == 0
        payload = json.loads(out)
        assert list(payload["curves"]) == ["4.0"]
        assert payload["pareto"][0]["best_precision"] == 4.0


class TestStdoutDiscipline:
    def test_stdout_is_pure_json(self, capsys, tmp_path):
        code, out, err = run_cli(
            capsys, "quantize", tmp_path / "t.kbq", "--synthetic", "gaussian",
            "--shape", "16x16",
        )
        assert code == 0
        json.loads(out)  # must parse cleanly

    def test_diagnostics_go_to_stderr(self, capsys, tmp_path):
        code, out, err = run_cli(capsys, "dequantize", tmp_path / "missing.kbq",
                                 tmp_path / "o.st")
        assert code == 1
        assert out == "" and err != ""
