import shutil

import pytest
from click.testing import CliRunner

from qcopt.cli import main as cli_main
from qcopt.gateset import NAM
from qcopt.harness import (
    MODES,
    canonical_record,
    class_counts,
    compare,
    corpus_dir,
    optimize_circuit,
    run,
    write_comparison,
)
from qcopt.qasm import load_qasm_file
from qcopt.search import CostFunction, SearchConfig

FAST = SearchConfig(
    epsilon_f=1e-8,
    seed=7,
    max_iterations=120,
    time_limit=None,
    resynth_probability=0.05,
    resynth_budget_ms=200,
    max_subcircuit_qubits=2,
)


@pytest.fixture
def small_corpus(tmp_path):
    src = corpus_dir() / "nam"
    dst = tmp_path / "corpus"
    dst.mkdir()
    for name in ("demo_rz_cx_2q.qasm", "cx_fanin_5q.qasm"):
        shutil.copy(src / name, dst / name)
    return dst


class TestRun:
    def test_report_fields_and_validation(self, small_corpus, tmp_path):
        report = run(small_corpus, "nam", FAST, out_dir=tmp_path / "out")
        assert report.mode == "guoq"
        assert len(report.records) == 2
        for record in report.records:
            assert record["status"] == "ok"
            assert record["validated"]
            assert record["error_budget_spent"] <= 1e-8
            # Reduction fields recompute from the recorded counts.
            before, after = record["counts_before"], record["counts_after"]
            assert record["gate_reduction"] == pytest.approx(
                1.0 - after["total"] / before["total"]
            )
        assert (tmp_path / "out" / "report.json").exists()
        assert (tmp_path / "out" / "report.csv").exists()

    def test_bad_file_recorded_and_run_continues(self, small_corpus):
        (small_corpus / "broken.qasm").write_text("OPENQASM 2.0; qreg q[2]; zz q[0];")
        report = run(small_corpus, "nam", FAST)
        by_name = {r["name"]: r for r in report.records}
        assert by_name["broken"]["status"] == "failed"
        assert by_name["cx_fanin_5q"]["status"] == "ok"

    def test_empty_corpus(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        report = run(empty, "nam", FAST)
        assert report.records == []

    def test_rewrite_only_mode_marked(self, small_corpus):
        report = run(small_corpus, "nam", FAST, mode="rewrite-only")
        assert report.mode == "rewrite-only"
        assert all(r["mode"] == "rewrite-only" for r in report.records)

    def test_unknown_mode(self, small_corpus):
        with pytest.raises(ValueError):
            run(small_corpus, "nam", FAST, mode="beam")

    def test_determinism_canonical_records(self, small_corpus, tmp_path):
        # Wall-clock synthesis budgets can truncate differently between runs;
        # budget None switches to deterministic caps.
        cfg = SearchConfig(
            epsilon_f=1e-8, seed=7, max_iterations=60, time_limit=None,
            resynth_probability=0.05, resynth_budget_ms=None, max_subcircuit_qubits=2,
        )
        a = run(small_corpus, "nam", cfg, out_dir=tmp_path / "a")
        b = run(small_corpus, "nam", cfg, out_dir=tmp_path / "b")
        for ra, rb in zip(a.records, b.records):
            ca = canonical_record({k: v for k, v in ra.items() if k not in ("trace_file", "circuit_file")})
            cb = canonical_record({k: v for k, v in rb.items() if k not in ("trace_file", "circuit_file")})
            assert ca == cb
        for name in ("demo_rz_cx_2q", "cx_fanin_5q"):
            ta = (tmp_path / "a" / "traces" / f"{name}.seed7.jsonl").read_bytes()
            tb = (tmp_path / "b" / "traces" / f"{name}.seed7.jsonl").read_bytes()
            assert ta == tb
            qa = (tmp_path / "a" / "circuits" / f"{name}.seed7.qasm").read_bytes()
            qb = (tmp_path / "b" / "circuits" / f"{name}.seed7.qasm").read_bytes()
            assert qa == qb


class TestSequentialModes:
    def test_phase_budgets_and_trace_continuity(self):
        circuit = load_qasm_file(corpus_dir() / "nam" / "cx_fanin_5q.qasm", NAM)
        cfg = SearchConfig(
            epsilon_f=1e-8, seed=3, max_iterations=2000, time_limit=None,
            resynth_budget_ms=200, max_subcircuit_qubits=2,
        )
        res = optimize_circuit(circuit, NAM, CostFunction("two-qubit-count"), cfg, mode="seq-rewrite-resynth")
        assert res.iterations == 2000
        iters = [r.iteration for r in res.trace]
        assert iters == sorted(iters)
        assert res.budget.spent <= cfg.epsilon_f
        assert res.cost_best == 3.0  # rewrite phase alone solves the fan-in

    def test_both_orders_supported(self):
        circuit = load_qasm_file(corpus_dir() / "nam" / "demo_rz_cx_2q.qasm", NAM)
        cfg = SearchConfig(
            epsilon_f=0.0, seed=3, max_iterations=60, time_limit=None,
            resynth_budget_ms=200, max_subcircuit_qubits=2,
        )
        for mode in ("seq-rewrite-resynth", "seq-resynth-rewrite"):
            res = optimize_circuit(circuit, NAM, CostFunction("two-qubit-count"), cfg, mode=mode)
            assert res.budget.spent == 0.0


class TestCompare:
    def test_self_comparison_all_match(self, small_corpus):
        report = run(small_corpus, "nam", FAST)
        summary = compare([report, report])
        assert summary["pairs"][0]["match"] == len(report.records)
        assert summary["pairs"][0]["outperform"] == 0
        assert summary["pairs"][0]["underperform"] == 0

    def test_strictly_better_outperforms_everywhere(self, small_corpus):
        base = run(small_corpus, "nam", FAST)
        import copy

        better = copy.deepcopy(base)
        for record in better.records:
            record["counts_after"]["two_qubit"] -= 1
        summary = compare([better, base])
        assert summary["pairs"][0]["outperform"] == len(base.records)

    def test_mismatched_sets_listed_and_excluded(self, small_corpus):
        base = run(small_corpus, "nam", FAST)
        import copy

        partial = copy.deepcopy(base)
        partial.records = partial.records[:1]
        summary = compare([base, partial])
        total = summary["pairs"][0]["outperform"] + summary["pairs"][0]["match"] + summary["pairs"][0]["underperform"]
        assert total == 1
        assert len(summary["excluded"]) == 1

    def test_summary_counts_match_recomputation(self, small_corpus):
        a = run(small_corpus, "nam", FAST)
        b = run(small_corpus, "nam", SearchConfig(**{**FAST.__dict__, "seed": 8}))
        summary = compare([a, b], metric="two_qubit_after")
        rows = summary["per_benchmark"]
        la, lb = summary["pairs"][0]["a"], summary["pairs"][0]["b"]
        out = sum(1 for r in rows if r[la] < r[lb])
        match = sum(1 for r in rows if r[la] == r[lb])
        under = sum(1 for r in rows if r[la] > r[lb])
        assert summary["pairs"][0]["outperform"] == out
        assert summary["pairs"][0]["match"] == match
        assert summary["pairs"][0]["underperform"] == under

    def test_write_comparison(self, small_corpus, tmp_path):
        report = run(small_corpus, "nam", FAST)
        write_comparison(compare([report, report]), tmp_path / "cmp")
        assert (tmp_path / "cmp" / "compare.json").exists()
        assert (tmp_path / "cmp" / "compare.csv").exists()


class TestCli:
    def test_run_and_compare(self, small_corpus, tmp_path):
        runner = CliRunner()
        out = tmp_path / "out"
        result = runner.invoke(
            cli_main,
            [
                "run", str(small_corpus), "--gate-set", "nam", "--max-iterations", "80",
                "--time-limit", "30", "--seed", "1", "--resynth-budget-ms", "200",
                "--max-subcircuit-qubits", "2", "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "cx_fanin_5q" in result.output
        result = runner.invoke(
            cli_main,
            ["compare", str(out / "report.json"), str(out / "report.json")],
        )
        assert result.exit_code == 0, result.output
        assert "match" in result.output

    def test_bad_gate_set_nonzero_exit(self, small_corpus):
        runner = CliRunner()
        result = runner.invoke(cli_main, ["run", str(small_corpus), "--gate-set", "bogus"])
        assert result.exit_code != 0

    def test_bad_resynth_spec_nonzero_exit(self, small_corpus):
        runner = CliRunner()
        result = runner.invoke(
            cli_main, ["run", str(small_corpus), "--gate-set", "nam", "--resynth", "magic"]
        )
        assert result.exit_code != 0

    def test_all_modes_accepted(self, small_corpus, tmp_path):
        runner = CliRunner()
        for mode in MODES:
            result = runner.invoke(
                cli_main,
                [
                    "run", str(small_corpus), "--gate-set", "nam", "--mode", mode,
                    "--max-iterations", "20", "--time-limit", "20",
                    "--resynth-budget-ms", "100", "--max-subcircuit-qubits", "2",
                ],
            )
            assert result.exit_code == 0, (mode, result.output)


def test_class_counts():
    circuit = load_qasm_file(corpus_dir() / "cliffordt" / "toffoli.qasm", __import__("qcopt.gateset", fromlist=["CLIFFORD_T"]).CLIFFORD_T)
    counts = class_counts(circuit)
    assert counts["total"] == 15
    assert counts["two_qubit"] == counts["cx"] == 6
    assert counts["t_like"] == 7
