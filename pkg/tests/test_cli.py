import json
import os
import subprocess
import sys

import numpy as np
import pytest

from zzpulse.cli import _apply_thread_cap, main, named_block
from zzpulse.compiler import PulseLibrary, save_library
from zzpulse.lattice import (
    decompose_blocks,
    graph_to_document,
    honeycomb_fragment,
    load_graph,
    single_qubit_pattern,
)
from zzpulse.optimize import OptimizationConfig, optimize_avg
from zzpulse.propagation import target_gate
from zzpulse.uncertainty import UncertaintySpec


class TestNamedBlocks:
    @pytest.mark.parametrize(
        "name,nc,nb",
        [
            ("honeycomb-1q", 1, 3),
            ("honeycomb-2q", 2, 4),
            ("chain-1q", 1, 2),
            ("chain-2q", 2, 2),
            ("square-1q", 1, 4),
            ("square-2q", 5, 8),
        ],
    )
    def test_shapes(self, name, nc, nb):
        blk = named_block(name)
        assert blk.num_center == nc and blk.num_boundary == nb

    def test_unknown(self):
        with pytest.raises(ValueError):
            named_block("triangular-9q")


class TestLatticeCommand:
    def test_write_and_reload(self, tmp_path):
        out = tmp_path / "g.json"
        rc = main(["lattice", "--geometry", "honeycomb", "--rows", "2", "--cols", "2",
                   "--pattern", "single", "-o", str(out)])
        assert rc == 0
        graph, pattern = load_graph(out)
        assert graph.num_qubits == 16
        assert pattern is not None and len(pattern.driven) == 8
        doc = json.loads(out.read_text())
        assert doc["meta"]["tool"] == "zzpulse"
        assert "version" in doc["meta"]

    def test_two_qubit_pattern_needs_pair(self, tmp_path):
        rc = main(["lattice", "--geometry", "chain", "--n", "4",
                   "--pattern", "two", "-o", str(tmp_path / "g.json")])
        assert rc == 2


class TestValidateCommand:
    def test_valid_pattern_passes(self, tmp_path):
        gfile = tmp_path / "g.json"
        main(["lattice", "--geometry", "fragment", "--rows", "2", "--cols", "4",
              "--pattern", "single", "-o", str(gfile)])
        out = tmp_path / "report.json"
        rc = main(["validate", "--graph", str(gfile), "-o", str(out)])
        assert rc == 0
        rep = json.loads(out.read_text())
        assert rep["passed"] and rep["commutators_pass"]
        assert rep["max_evolution_deviation"] <= 1e-10

    def test_corrupted_pattern_fails(self, tmp_path):
        g = honeycomb_fragment(2, 4)
        pat = single_qubit_pattern(g)
        extra = next(q for q in range(g.num_qubits) if q not in pat.driven)
        doc = graph_to_document(g, pat)
        doc["driven"] = sorted(set(doc["driven"]) | {extra})
        gfile = tmp_path / "bad.json"
        gfile.write_text(json.dumps(doc))
        rc = main(["validate", "--graph", str(gfile), "-o", str(tmp_path / "r.json")])
        assert rc == 1

    def test_missing_pattern(self, tmp_path):
        gfile = tmp_path / "g.json"
        main(["lattice", "--geometry", "chain", "--n", "3", "-o", str(gfile)])
        rc = main(["validate", "--graph", str(gfile), "-o", str(tmp_path / "r.json")])
        assert rc == 2


class TestOptimizeCommand:
    def test_quick_identity_run_and_resume(self, tmp_path):
        outdir = tmp_path / "run"
        args = ["optimize", "--block", "chain-1q", "--target", "I",
                "--uncertainty", "0", "0", "0", "--bins", "16",
                "--duration", "6.283185307", "--omega-max", "10",
                "--max-evals", "60", "--seed", "3", "-o", str(outdir)]
        assert main(args) == 0
        result = json.loads((outdir / "result.json").read_text())
        assert result["worst_case_fidelity"] > 1 - 1e-6
        assert result["config"]["seed"] == 3
        assert result["meta"]["version"]
        for table in ("pulse_table.csv", "convergence.csv"):
            text = (outdir / table).read_text()
            assert text.startswith("# zzpulse")
        # resume from the result document
        rc = main(args + ["--resume", str(outdir / "result.json")])
        assert rc == 0

    def test_rerun_reproduces_artifacts_bit_for_bit(self, tmp_path):
        args = ["optimize", "--block", "chain-1q", "--target", "H",
                "--uncertainty", "0.02", "0.02", "0.002", "--bins", "10",
                "--max-evals", "25", "--seed", "11"]
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert main(args + ["-o", str(out_a)]) == 0
        assert main(args + ["-o", str(out_b)]) == 0
        for name in ("result.json", "pulse_table.csv", "convergence.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_missing_config_file_exit_2(self, tmp_path, capsys):
        rc = main(["optimize", "--block", "chain-1q", "--target", "I",
                   "--config", str(tmp_path / "nope.json"),
                   "-o", str(tmp_path / "x")])
        assert rc == 2
        assert "nope.json" in capsys.readouterr().err

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"num_bins": 12, "max_evals": 40, "seed": 9}))
        outdir = tmp_path / "run"
        rc = main(["optimize", "--block", "chain-1q", "--target", "I",
                   "--config", str(cfg), "--max-evals", "30", "-o", str(outdir)])
        assert rc == 0
        doc = json.loads((outdir / "result.json").read_text())
        assert doc["config"]["num_bins"] == 12       # from file
        assert doc["config"]["max_evals"] == 30      # flag wins


class TestCalibrateCommand:
    def test_recovers_frequencies(self, tmp_path):
        rc = main(["lattice", "--geometry", "honeycomb", "--rows", "2", "--cols", "2",
                   "-o", str(tmp_path / "g.json")])
        assert rc == 0
        doc = json.loads((tmp_path / "g.json").read_text())
        rng = np.random.default_rng(5)
        doc["frequencies"] = (100 + rng.normal(size=doc["num_qubits"])).tolist()
        (tmp_path / "cluster.json").write_text(json.dumps(doc))
        out = tmp_path / "cal.csv"
        rc = main(["calibrate", "--cluster", str(tmp_path / "cluster.json"),
                   "-o", str(out)])
        assert rc == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0].startswith("qubit,")
        assert len(lines) > 1
        for row in lines[1:]:
            assert abs(float(row.split(",")[3])) < 1e-9


class TestCompileAndSimulate:
    def test_compile_three_gate_circuit(self, tmp_path):
        g = honeycomb_fragment(2, 4)
        pos = {p: q for q, p in enumerate(g.positions)}
        A, B = pos[(0, 2)], pos[(1, 2)]
        (tmp_path / "circ.txt").write_text(f"CNOT {A} {B}\nH {A}\nT {B}\n")
        gfile = tmp_path / "g.json"
        main(["lattice", "--geometry", "fragment", "--rows", "2", "--cols", "4",
              "-o", str(gfile)])
        out = tmp_path / "sched.json"
        rc = main(["compile", "--circuit", str(tmp_path / "circ.txt"),
                   "--graph", str(gfile), "-o", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["step_count"] == 3
        assert doc["verification"]["ok"]

    def test_simulate_identity_circuit(self, tmp_path):
        g = honeycomb_fragment(2, 2)
        pat = single_qubit_pattern(g)
        driven = sorted(pat.driven)
        (tmp_path / "circ.txt").write_text("".join(f"I {q}\n" for q in driven))
        gfile = tmp_path / "g.json"
        main(["lattice", "--geometry", "fragment", "--rows", "2", "--cols", "2",
              "-o", str(gfile)])

        library = PulseLibrary()
        cfg = OptimizationConfig(num_bins=24, algorithm="avg_quasi_newton",
                                 max_evals=300, seed=0)
        for blk in decompose_blocks(g, pat):
            res = optimize_avg(blk, target_gate("I"), UncertaintySpec(0, 0, 0), cfg)
            library.add("I", blk, res.controls)
        save_library(tmp_path / "lib.json", library)

        out = tmp_path / "sim.json"
        rc = main(["simulate", "--circuit", str(tmp_path / "circ.txt"),
                   "--graph", str(gfile), "--library", str(tmp_path / "lib.json"),
                   "-o", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["process_fidelity"] > 1 - 1e-6


class TestMisc:
    def test_thread_cap_env(self, monkeypatch):
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            monkeypatch.delenv(var, raising=False)
        _apply_thread_cap(["--threads", "2", "optimize"])
        assert os.environ["OPENBLAS_NUM_THREADS"] == "2"

    def test_bad_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_console_script_help(self):
        out = subprocess.run([sys.executable, "-m", "zzpulse.cli", "--help"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert "optimize" in out.stdout
