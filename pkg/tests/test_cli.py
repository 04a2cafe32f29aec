"""Unit tests for the CLI interface.

Tests cover:
- partition selection through --parts, --n and --base
- factorize output files and metadata
- verify against recomputed and serialized factors, including corrupted ones
- stats in text, CSV and JSON form
- schedule export and simulate traces
- exit codes for each error class
- verbose logging set up from the config
"""

from __future__ import annotations

import json
import logging
from fractions import Fraction

import pytest
from click.testing import CliRunner

from sparse_j_factorizer.cli import (
    EXIT_IO,
    EXIT_PARTITION,
    EXIT_USAGE,
    EXIT_VERIFY,
    _run_verify,
    cli,
    run,
)
from sparse_j_factorizer.errors import VerificationFailure
from sparse_j_factorizer.matrix import identity
from sparse_j_factorizer.models import CliConfig, ConsensusTrace, Phase2Method
from sparse_j_factorizer.partition import partition_from_parts


def _invoke(*args: str, **kwargs):
    return CliRunner().invoke(cli, list(args), **kwargs)


# ---------------------------------------------------------------------------
# partition selection
# ---------------------------------------------------------------------------


class TestPartitionCommand:
    def test_explicit_parts(self):
        result = _invoke("partition", "--parts", "8,4,2,1")
        assert result.exit_code == 0
        assert "n=15;parts=8,4,2,1" in result.output

    def test_binary_digits_by_default(self):
        result = _invoke("partition", "--n", "15")
        assert result.exit_code == 0
        assert "parts=8,4,2,1" in result.output

    def test_base(self):
        result = _invoke("partition", "--n", "10", "--base", "3")
        assert "n=10;parts=9,1" in result.output

    def test_suffix_sums_listed(self):
        result = _invoke("partition", "--parts", "2,1")
        assert "k=1  n_k=2  m_k=1" in result.output

    def test_no_partition_source(self):
        result = _invoke("partition")
        assert result.exit_code == EXIT_USAGE

    def test_conflicting_sources(self):
        result = _invoke("partition", "--parts", "2,1", "--n", "3")
        assert result.exit_code == EXIT_USAGE

    def test_unparsable_parts(self):
        result = _invoke("partition", "--parts", "2,x")
        assert result.exit_code == EXIT_USAGE

    def test_dominance_violation(self):
        result = _invoke("partition", "--parts", "2,3")
        assert result.exit_code == EXIT_PARTITION
        assert "Error: dominance violated" in result.output

    def test_base_one(self):
        result = _invoke("partition", "--n", "10", "--base", "1")
        assert result.exit_code == EXIT_USAGE


# ---------------------------------------------------------------------------
# factorize
# ---------------------------------------------------------------------------


class TestFactorizeCommand:
    def test_rhb_files_and_metadata(self, tmp_path):
        result = _invoke("factorize", "--parts", "8,4,2,1", "--method", "rhb", "--output-dir", str(tmp_path))
        assert result.exit_code == 0, result.output
        assert (tmp_path / "A.json").exists()
        for k in range(1, 5):
            assert (tmp_path / f"A_level_{k}.json").exists()
        metadata = json.loads((tmp_path / "metadata.json").read_text(encoding="utf-8"))
        assert metadata["method"] == "rhb"
        assert metadata["partition"] == "n=15;parts=8,4,2,1"
        assert metadata["nnz"] == 27
        assert metadata["d_max"] == 4
        assert metadata["residual"] == "0"
        assert metadata["alphas"][-1] == "1/15"

    def test_dshb_scaled_sequence(self, tmp_path):
        result = _invoke("factorize", "--parts", "8,4,2,1", "--output-dir", str(tmp_path))
        assert result.exit_code == 0
        assert (tmp_path / "A_tilde_2.json").exists()
        metadata = json.loads((tmp_path / "metadata.json").read_text(encoding="utf-8"))
        assert metadata["method"] == "dshb"
        assert metadata["nnz"] == 37
        assert metadata["published_nnz"] == 26
        assert metadata["scaling_factors"] == ["1", "15/7", "5", "15"]

    def test_sds_factors(self, tmp_path):
        result = _invoke("factorize", "--parts", "8,4,2,1", "--method", "sds-right", "--output-dir", str(tmp_path))
        assert result.exit_code == 0
        for name in ("A", "A_L", "A_R", "T_1", "T_hat_3"):
            assert (tmp_path / f"{name}.json").exists()
        metadata = json.loads((tmp_path / "metadata.json").read_text(encoding="utf-8"))
        assert metadata["d_max"] == 8
        assert metadata["t_nnz"] == [29, 13, 5, 1]

    def test_matrix_market_format(self, tmp_path):
        result = _invoke("factorize", "--n", "6", "--format", "mtx", "--output-dir", str(tmp_path))
        assert result.exit_code == 0
        assert (tmp_path / "A.mtx").read_text(encoding="utf-8").startswith("%%MatrixMarket")

    def test_output_dir_from_environment(self, tmp_path):
        target = tmp_path / "from_env"
        result = _invoke("factorize", "--parts", "2,1", env={"JFACTOR_OUTPUT_DIR": str(target)})
        assert result.exit_code == 0
        assert (target / "metadata.json").exists()


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


class TestVerifyCommand:
    def test_recomputed_pass(self):
        result = _invoke("verify", "--parts", "8,4,2,1", "--method", "dshb")
        assert result.exit_code == 0
        assert result.output.startswith("PASS")

    def test_invalid_partition(self):
        result = _invoke("verify", "--parts", "2,3", "--method", "rhb")
        assert result.exit_code == EXIT_PARTITION

    def test_json_report(self):
        result = _invoke("verify", "--parts", "8,4,2,1", "--method", "sds-left", "--format", "json")
        assert result.exit_code == 0
        report = json.loads(result.output)
        assert report["status"] == "PASS"
        assert report["nnz"] == 49
        assert report["doubly_stochastic"] is True

    def test_serialized_factor(self, tmp_path):
        _invoke("factorize", "--parts", "8,4,2,1", "--method", "rhb", "--output-dir", str(tmp_path))
        result = _invoke("verify", "--parts", "8,4,2,1", "--input", str(tmp_path / "A.json"))
        assert result.exit_code == 0
        assert "PASS" in result.output

    def test_product_of_serialized_factors(self, tmp_path):
        _invoke("factorize", "--parts", "8,4,2,1", "--method", "sds-left", "--output-dir", str(tmp_path))
        inputs = []
        for k in range(1, 5):
            inputs += ["--input", str(tmp_path / f"T_hat_{k}.json")]
        result = _invoke("verify", "--parts", "8,4,2,1", *inputs)
        assert result.exit_code == 0
        assert "PASS" in result.output

    def test_corrupted_factor_fails(self, tmp_path):
        _invoke("factorize", "--parts", "8,4,2,1", "--output-dir", str(tmp_path))
        path = tmp_path / "A.json"
        data = json.loads(path.read_text(encoding="utf-8"))
        data["entries"][3]["num"] += 1
        path.write_text(json.dumps(data), encoding="utf-8")

        result = _invoke("verify", "--parts", "8,4,2,1", "--input", str(path))
        assert result.exit_code == EXIT_VERIFY
        assert "FAIL" in result.output
        assert "Error: J0 A J0 != J" in result.output

    def test_order_mismatch(self, tmp_path):
        _invoke("factorize", "--parts", "8,4,2,1", "--output-dir", str(tmp_path))
        result = _invoke("verify", "--parts", "2,1", "--input", str(tmp_path / "A.json"))
        assert result.exit_code == EXIT_IO
        assert "Error:" in result.output

    def test_missing_file(self, tmp_path):
        result = _invoke("verify", "--parts", "2,1", "--input", str(tmp_path / "nope.json"))
        assert result.exit_code == EXIT_IO


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


class TestStatsCommand:
    def test_text_table(self):
        result = _invoke("stats", "--parts", "8,4,2,1")
        assert result.exit_code == 0
        assert "sds-right" in result.output
        assert "49" in result.output

    def test_json_columns(self):
        result = _invoke("stats", "--parts", "8,4,2,1", "--format", "json")
        data = json.loads(result.output)
        assert [r["phase2_rounds"] for r in data["rows"]] == [1, 1, 1, 1, 3]
        assert [r["d_max"] for r in data["rows"]] == [4, 4, 4, 8, 2]

    def test_csv(self):
        result = _invoke("stats", "--n", "15", "--format", "csv")
        assert result.output.splitlines()[0] == "method,nnz,published_nnz,d_max,phase2_rounds"


# ---------------------------------------------------------------------------
# schedule and simulate
# ---------------------------------------------------------------------------


class TestScheduleCommand:
    def test_one_peer_schedule(self, tmp_path):
        result = _invoke(
            "schedule", "--parts", "8,4,2,1", "--method", "rhb", "--intra", "one-peer-exp",
            "--output-dir", str(tmp_path), "--format", "mtx",
        )
        assert result.exit_code == 0, result.output
        assert "Exact product equals J: yes" in result.output
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert len(manifest["rounds"]) == 7
        assert all(e["file"].endswith(".mtx") for e in manifest["rounds"])

    def test_default_format_is_matrix_market(self, tmp_path):
        result = _invoke("schedule", "--parts", "2,1", "--output-dir", str(tmp_path))
        assert result.exit_code == 0, result.output
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["format"] == "mtx"
        assert all((tmp_path / e["file"]).suffix == ".mtx" for e in manifest["rounds"])

    def test_json_format(self, tmp_path):
        result = _invoke("schedule", "--parts", "2,1", "--output-dir", str(tmp_path), "--format", "json")
        assert result.exit_code == 0
        assert (tmp_path / "round_001_phase1_dense_1.json").exists()

    def test_right_t_order(self, tmp_path):
        result = _invoke(
            "schedule", "--parts", "8,4,2,1", "--method", "t-factors", "--t-order", "right",
            "--output-dir", str(tmp_path),
        )
        assert result.exit_code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
        assert [e["label"] for e in manifest["rounds"]][1:4] == ["T_hat_1", "T_hat_2", "T_hat_3"]

    def test_one_peer_needs_powers_of_two(self, tmp_path):
        result = _invoke("schedule", "--parts", "3,1", "--intra", "one-peer-exp", "--output-dir", str(tmp_path))
        assert result.exit_code == EXIT_USAGE
        assert "not a power of 2" in result.output


class TestSimulateCommand:
    def test_reaches_consensus(self, tmp_path):
        result = _invoke("simulate", "--parts", "8,4,2,1", "--output-dir", str(tmp_path))
        assert result.exit_code == 0, result.output
        assert "Rounds to consensus: 3" in result.output
        lines = (tmp_path / "trace.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "round,phase,label,max_error,nnz,d_max"
        assert len(lines) == 5

    def test_explicit_trace_path(self, tmp_path):
        target = tmp_path / "out" / "t.csv"
        result = _invoke("simulate", "--n", "12", "--method", "t-factors", "--dim", "2", "--output", str(target))
        assert result.exit_code == 0
        assert target.exists()

    def test_consensus_not_reached(self, tmp_path, mocker):
        stalled = ConsensusTrace(
            states=[],
            errors=[1.0, 0.5],
            round_costs=[(3, 1)],
            phases=["phase1"],
            labels=["dense_1"],
            tolerance=1e-10,
        )
        mocker.patch("sparse_j_factorizer.cli.run_simulation", return_value=stalled)
        result = _invoke("simulate", "--parts", "2,1", "--output-dir", str(tmp_path))
        assert result.exit_code == EXIT_VERIFY
        assert "not reached" in result.output

    def test_non_positive_tolerance(self):
        result = _invoke("simulate", "--parts", "2,1", "--tolerance", "0")
        assert result.exit_code == EXIT_USAGE


class TestRun:
    def test_run_verify(self):
        assert run(CliConfig(command="verify", parts=(8, 4, 2, 1), method=Phase2Method.RHB)) == 0

    def test_run_partition_error(self):
        assert run(CliConfig(command="partition", parts=(2, 3))) == EXIT_PARTITION

    def test_run_unknown_command(self):
        assert run(CliConfig(command="explode", parts=(2, 1))) == EXIT_USAGE


class TestHelp:
    def test_group_help_lists_commands(self):
        result = _invoke("--help")
        assert result.exit_code == 0
        for name in ("partition", "factorize", "verify", "stats", "schedule", "simulate"):
            assert name in result.output

    def test_defaults_shown(self):
        result = _invoke("simulate", "--help")
        assert "default: dshb" in result.output
        assert "JFACTOR_OUTPUT_DIR" in result.output


class TestVerificationFailure:
    def test_run_maps_failure_to_exit_code(self, tmp_path, mocker):
        mocker.patch("sparse_j_factorizer.cli.read_matrix", return_value=identity(15))
        config = CliConfig(command="verify", parts=(8, 4, 2, 1), inputs=(str(tmp_path / "A.json"),))
        assert run(config) == EXIT_VERIFY

    def test_failure_carries_residual(self, mocker):
        mocker.patch("sparse_j_factorizer.cli._phase2_factor", return_value=identity(3))
        with pytest.raises(VerificationFailure) as info:
            _run_verify(CliConfig(command="verify", parts=(2, 1)), partition_from_parts([2, 1]))
        assert info.value.residual == Fraction(2, 3)


class TestVerboseLogging:
    def test_run_configures_logging_when_verbose(self, mocker):
        basic_config = mocker.patch("sparse_j_factorizer.cli.logging.basicConfig")
        assert run(CliConfig(command="partition", parts=(2, 1), verbose=True)) == 0
        basic_config.assert_called_once()
        assert basic_config.call_args.kwargs["level"] == logging.INFO

    def test_quiet_by_default(self, mocker):
        basic_config = mocker.patch("sparse_j_factorizer.cli.logging.basicConfig")
        assert run(CliConfig(command="partition", parts=(2, 1))) == 0
        basic_config.assert_not_called()

    def test_flag_reaches_config(self, mocker):
        basic_config = mocker.patch("sparse_j_factorizer.cli.logging.basicConfig")
        result = _invoke("-v", "partition", "--parts", "2,1")
        assert result.exit_code == 0
        basic_config.assert_called_once()
