"""Command-line interface.

Subcommands: ``lattice``, ``validate``, ``optimize``, ``calibrate``,
``compile``, ``simulate``.  Energies are given in units of the nominal
coupling strength and durations in its inverse (a full period is
``--duration 6.283185307``).  Every artifact embeds the tool version, the
resolved configuration, and the seed, so a rerun of the same manifest
reproduces it bit for bit.

Exit status: 0 on success, 1 when a validation or acceptance check fails,
2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

__version__ = "0.1.0"

# paper-scale blocks by name: (geometry, centers, boundaries)
NAMED_BLOCKS = {
    "honeycomb-1q": (1, 3),
    "honeycomb-2q": (2, 4),
    "chain-1q": (1, 2),
    "chain-2q": (2, 2),
    "square-1q": (1, 4),
    "square-2q": (5, 8),
}


def _apply_thread_cap(argv):
    """Honor --threads before numpy is imported anywhere."""
    for i, a in enumerate(argv):
        if a == "--threads" and i + 1 < len(argv):
            n = argv[i + 1]
        elif a.startswith("--threads="):
            n = a.split("=", 1)[1]
        else:
            continue
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)
        break


def _meta(args, config=None) -> dict:
    return {
        "tool": "zzpulse",
        "version": __version__,
        "subcommand": args.command,
        "seed": getattr(args, "seed", None),
        "resolved_config": config or {},
    }


def _write_json(path, doc) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
    print(f"wrote {path}")


def _write_table(path, table: str, meta: dict) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    header = f"# zzpulse {__version__} {json.dumps(meta, sort_keys=True)}\n"
    with open(path, "w") as fh:
        fh.write(header + table)
    print(f"wrote {path}")


def named_block(name: str):
    """Bulk block of one of the built-in driving patterns, unit couplings.

    Extracted from an actual generated lattice so the block (and its shape
    signature) matches what ``decompose_blocks`` produces on real arrays.
    """
    from . import lattice as lat

    if name not in NAMED_BLOCKS:
        raise ValueError(f"unknown block {name!r}; choose from {sorted(NAMED_BLOCKS)}")
    nc, nb = NAMED_BLOCKS[name]
    if name == "honeycomb-1q":
        graph = lat.build_honeycomb(2, 2)
        pattern = lat.single_qubit_pattern(graph)
    elif name == "honeycomb-2q":
        graph = lat.honeycomb_fragment(2, 4)
        pos = {p: q for q, p in enumerate(graph.positions)}
        pattern = lat.two_qubit_pattern(graph, (pos[(0, 2)], pos[(1, 2)]))
    elif name == "chain-1q":
        graph = lat.build_chain(3)
        pattern = lat.single_qubit_pattern(graph)
    elif name == "chain-2q":
        graph = lat.build_chain(4)
        pattern = lat.two_qubit_pattern(graph, (1, 2))
    elif name == "square-1q":
        graph = lat.build_square(3, 3)
        pattern = lat.single_qubit_pattern(graph)
    else:  # square-2q
        graph = lat.build_square(5, 5)
        hub = next(q for q, rc in enumerate(graph.positions) if rc == (2, 2))
        pattern = lat.two_qubit_pattern(graph, (hub, graph.neighbors(hub)[0]))
    blocks = lat.decompose_blocks(graph, pattern)
    return next(
        b for b in blocks if b.num_center == nc and b.num_boundary == nb
    )


def cmd_lattice(args) -> int:
    from . import lattice

    if args.geometry == "honeycomb":
        graph = lattice.build_honeycomb(args.rows, args.cols, args.coupling)
    elif args.geometry == "fragment":
        graph = lattice.honeycomb_fragment(args.rows, args.cols, args.coupling)
    elif args.geometry == "square":
        graph = lattice.build_square(args.rows, args.cols, args.coupling)
    else:
        graph = lattice.build_chain(args.n, args.coupling)

    pattern = None
    if args.pattern == "single":
        pattern = lattice.single_qubit_pattern(graph, parity=args.parity)
    elif args.pattern == "two":
        if args.pair is None:
            raise ValueError("--pattern two requires --pair A B")
        pattern = lattice.two_qubit_pattern(graph, tuple(args.pair))

    doc = lattice.graph_to_document(graph, pattern)
    doc["meta"] = _meta(args)
    _write_json(args.output, doc)
    return 0


def cmd_validate(args) -> int:
    import numpy as np

    from . import lattice
    from .hamiltonian import ControlVector, ParameterPoint, to_dense, embedded_slice
    from .propagation import (
        MAX_ARRAY_QUBITS,
        block_product_unitary,
        evolve_array,
        nominal_array_params,
    )

    graph, pattern = lattice.load_graph(args.graph)
    if pattern is None:
        raise ValueError(f"{args.graph} carries no driving pattern to validate")
    report = lattice.validate_pattern(graph, pattern)
    checks = {"pattern_valid": report.ok,
              "violations": [f"[{v.kind}] {v.subject}: {v.detail}" for v in report.violations]}

    if report.ok and graph.num_qubits <= MAX_ARRAY_QUBITS:
        rng = np.random.default_rng(args.seed)
        blocks = lattice.decompose_blocks(graph, pattern)
        controls = [
            ControlVector(1.0, 3, rng.uniform(-1, 1, size=(b.num_center, 2, 3)))
            for b in blocks
        ]
        slices = [
            to_dense(embedded_slice(graph.num_qubits, b, c, ParameterPoint.nominal(b), 0))
            for b, c in zip(blocks, controls)
        ]
        comm = 0.0
        for i, Ha in enumerate(slices):
            for Hb in slices[i + 1:]:
                comm = max(comm, float(abs(Ha @ Hb - Hb @ Ha).max()))
        checks["max_block_commutator"] = comm
        checks["commutators_pass"] = comm <= 1e-12

        params = nominal_array_params(graph, pattern)
        U_full = evolve_array(graph, pattern, controls, params)
        U_blocks = block_product_unitary(graph, pattern, controls, params)
        dev = float(abs(U_full - U_blocks).max())
        checks["max_evolution_deviation"] = dev
        checks["evolution_equivalence_pass"] = dev <= 1e-10
    elif report.ok:
        checks["note"] = (
            f"graph exceeds {MAX_ARRAY_QUBITS} qubits; numeric equivalence skipped"
        )

    ok = report.ok and checks.get("commutators_pass", True) and checks.get(
        "evolution_equivalence_pass", True
    )
    doc = {"meta": _meta(args), "passed": ok, **checks}
    _write_json(args.output, doc)
    if not ok:
        print("validation FAILED", file=sys.stderr)
    return 0 if ok else 1


def _load_config_file(path) -> dict:
    if path is None:
        return {}
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as fh:
        return json.load(fh)


def cmd_optimize(args) -> int:
    from . import optimize as opt
    from .propagation import target_gate
    from .uncertainty import UncertaintySpec, hypercube_corners

    base = _load_config_file(args.config)
    overrides = {
        "num_bins": args.bins,
        "duration": args.duration,
        "omega_max": args.omega_max,
        "algorithm": args.algorithm,
        "max_iterations": args.max_iterations,
        "max_evals": args.max_evals,
        "seed": args.seed,
        "num_restarts": args.restarts,
        "checkpoint_every": args.checkpoint_every,
    }
    merged = {**base, **{k: v for k, v in overrides.items() if v is not None}}
    config = opt.OptimizationConfig(**merged)

    block = named_block(args.block)
    target = target_gate(args.target)
    dj, da, dd = args.uncertainty
    spec = UncertaintySpec(dj, da, dd)
    n_corners = len(hypercube_corners(block, spec))
    print(
        f"optimizing {args.target} on {args.block} "
        f"({block.num_qubits} qubits, {n_corners} corners, {config.algorithm})"
    )

    initial = None
    if args.resume:
        with open(args.resume) as fh:
            initial = opt.controls_from_document(json.load(fh))
        print(f"resuming from {args.resume}")

    outdir = args.output_dir
    os.makedirs(outdir, exist_ok=True)

    def checkpoint(k, interim):
        opt.save_result(
            os.path.join(outdir, "checkpoint.json"), interim, config,
            {"meta": _meta(args), "gate": args.target, "block": args.block,
             "uncertainty": list(args.uncertainty), "checkpoint_at": k},
        )
        print(f"  [{k:5d}] worst-case infidelity {interim.infidelity:.3e}")

    result = opt.optimize(block, target, spec, config, initial_controls=initial,
                          callback=checkpoint)
    extra = {"meta": _meta(args), "gate": args.target, "block": args.block,
             "uncertainty": list(args.uncertainty)}
    opt.save_result(os.path.join(outdir, "result.json"), result, config, extra)
    print(f"wrote {os.path.join(outdir, 'result.json')}")
    _write_table(os.path.join(outdir, "pulse_table.csv"), opt.pulse_table(result),
                 {"seed": config.seed, "gate": args.target})
    _write_table(os.path.join(outdir, "convergence.csv"), opt.convergence_table(result),
                 {"seed": config.seed, "gate": args.target})
    print(
        f"done: worst-case fidelity {result.f_min:.10f} "
        f"(infidelity {result.infidelity:.3e}), {result.evaluations} evaluations, "
        f"terminated: {result.terminated}"
    )
    return 0


def cmd_calibrate(args) -> int:
    from . import lattice
    from .calibration import cluster_from_graph, oracle_peaks, predict_peaks, recover_frequency

    with open(args.cluster) as fh:
        doc = json.load(fh)
    graph, _ = lattice.graph_from_document(doc)
    if "frequencies" not in doc:
        raise ValueError(f"{args.cluster} must carry a 'frequencies' array")
    freqs = {q: float(w) for q, w in enumerate(doc["frequencies"])}
    if args.target is not None:
        targets = [args.target]
    elif "target" in doc:
        targets = [int(doc["target"])]
    else:
        deg = graph.degrees()
        targets = [q for q in range(graph.num_qubits) if deg[q] == 3]
        if not targets:
            raise ValueError("no degree-3 qubits to calibrate")

    lines = ["qubit,true_frequency,recovered,residual,oracle_vs_formula"]
    worst = 0.0
    for t in targets:
        cluster = cluster_from_graph(graph, freqs, t)
        formula = predict_peaks(cluster)
        oracle = oracle_peaks(cluster)
        cross = max(
            max(abs(formula.one_photon[q] - oracle.one_photon[q]) for q in formula.one_photon),
            max(abs(formula.two_photon[q] - oracle.two_photon[q]) for q in formula.two_photon),
        )
        rec = recover_frequency(oracle)
        resid = rec - freqs[t]
        worst = max(worst, abs(resid), cross)
        lines.append(f"{t},{freqs[t]:.15g},{rec:.15g},{resid:.3e},{cross:.3e}")
    _write_table(args.output, "\n".join(lines) + "\n", _meta(args))
    print(f"max residual {worst:.3e} over {len(targets)} qubit(s)")
    return 0


def cmd_compile(args) -> int:
    from . import lattice
    from .compiler import compile_circuit, parse_circuit, save_schedule, verify_schedule

    with open(args.circuit) as fh:
        circuit = parse_circuit(fh.read())
    graph, _ = lattice.load_graph(args.graph)
    schedule = compile_circuit(circuit, graph)
    report = verify_schedule(schedule, circuit, graph)
    doc_path = args.output
    from .compiler import schedule_to_document

    doc = schedule_to_document(schedule)
    doc["meta"] = _meta(args)
    doc["verification"] = {
        "ok": report.ok,
        "violations": list(report.violations),
        "overhead_flagged": report.overhead_flagged,
    }
    _write_json(doc_path, doc)
    print(
        f"{schedule.step_count} steps for depth-{schedule.circuit_depth} circuit "
        f"(overhead {schedule.overhead_ratio:.2f}"
        + (", above the factor-2 bound!" if report.overhead_flagged else ")")
    )
    return 0 if report.ok else 1


def cmd_simulate(args) -> int:
    from . import lattice
    from .compiler import (
        compile_circuit,
        ideal_circuit_unitary,
        load_library,
        parse_circuit,
        simulate_schedule,
    )
    from .propagation import overlap_fidelity

    with open(args.circuit) as fh:
        circuit = parse_circuit(fh.read())
    graph, _ = lattice.load_graph(args.graph)
    library = load_library(args.library)
    schedule = compile_circuit(circuit, graph)
    U = simulate_schedule(schedule, graph, library)
    ideal = ideal_circuit_unitary(circuit, graph.num_qubits)
    fid = overlap_fidelity(U, ideal)
    doc = {
        "meta": _meta(args),
        "process_fidelity": fid,
        "infidelity": 1.0 - fid,
        "steps": schedule.step_count,
        "num_qubits": graph.num_qubits,
    }
    _write_json(args.output, doc)
    print(f"process fidelity vs ideal circuit: {fid:.10f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zzpulse",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS worker threads (set before numpy loads)")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("lattice", help="generate a coupling graph and driving pattern")
    q.add_argument("--geometry", choices=["honeycomb", "fragment", "square", "chain"],
                   required=True)
    q.add_argument("--rows", type=int, default=2)
    q.add_argument("--cols", type=int, default=2)
    q.add_argument("--n", type=int, default=4, help="chain length")
    q.add_argument("--coupling", type=float, default=1.0)
    q.add_argument("--pattern", choices=["none", "single", "two"], default="none")
    q.add_argument("--parity", type=int, default=None)
    q.add_argument("--pair", type=int, nargs=2, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output", "-o", default="lattice.json")
    q.set_defaults(func=cmd_lattice)

    q = sub.add_parser("validate", help="check a pattern's commuting decomposition")
    q.add_argument("--graph", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output", "-o", default="validation.json")
    q.set_defaults(func=cmd_validate)

    q = sub.add_parser("optimize", help="synthesize a robust pulse for one block")
    q.add_argument("--block", choices=sorted(NAMED_BLOCKS), required=True)
    q.add_argument("--target", required=True,
                   help="H, T, I, X (1q blocks) or CNOT, I2 (2q blocks)")
    q.add_argument("--uncertainty", type=float, nargs=3, default=(0.0, 0.0, 0.0),
                   metavar=("DJ", "DALPHA", "DDELTA"),
                   help="fractional widths: coupling, amplitude, detuning")
    q.add_argument("--config", default=None, help="JSON config file (flags override)")
    q.add_argument("--bins", type=int, default=None)
    q.add_argument("--duration", type=float, default=None)
    q.add_argument("--omega-max", type=float, default=None)
    q.add_argument("--algorithm", choices=["avg_quasi_newton", "scp_minimax"],
                   default=None)
    q.add_argument("--max-iterations", type=int, default=None)
    q.add_argument("--max-evals", type=int, default=None)
    q.add_argument("--restarts", type=int, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--checkpoint-every", type=int, default=None)
    q.add_argument("--resume", default=None, help="checkpoint/result file to restart from")
    q.add_argument("--output-dir", "-o", default="optimize-out")
    q.set_defaults(func=cmd_optimize)

    q = sub.add_parser("calibrate", help="recover bare qubit frequencies from peaks")
    q.add_argument("--cluster", required=True,
                   help="graph JSON with 'frequencies' and optional 'target'")
    q.add_argument("--target", type=int, default=None)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output", "-o", default="calibration.csv")
    q.set_defaults(func=cmd_calibrate)

    q = sub.add_parser("compile", help="schedule a circuit onto driving patterns")
    q.add_argument("--circuit", required=True)
    q.add_argument("--graph", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output", "-o", default="schedule.json")
    q.set_defaults(func=cmd_compile)

    q = sub.add_parser("simulate", help="run a compiled schedule with library pulses")
    q.add_argument("--circuit", required=True)
    q.add_argument("--graph", required=True)
    q.add_argument("--library", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output", "-o", default="simulation.json")
    q.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    _apply_thread_cap(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
