"""Synthesize an ideal (no-uncertainty) Hadamard on the four-qubit block.

The drive acts on one center qubit; the pulse must also return the three
always-coupled boundary qubits to themselves, cancelling the ZZ evolution
stroboscopically at the end of the gate.
"""

import numpy as np

from zzpulse import UncertaintySpec, fidelity, propagate, target_gate
from zzpulse.cli import named_block
from zzpulse.hamiltonian import ParameterPoint
from zzpulse.optimize import OptimizationConfig, optimize_avg

block = named_block("honeycomb-1q")
print(f"block: {block.num_center} driven + {block.num_boundary} boundary qubits")

config = OptimizationConfig(
    num_bins=100,
    duration=2 * np.pi,     # one coupling period
    omega_max=10.0,
    algorithm="avg_quasi_newton",
    max_evals=800,
    seed=1,
)
result = optimize_avg(block, target_gate("H"), UncertaintySpec(0, 0, 0), config)
print(f"fidelity after {result.evaluations} evaluations: {result.f_min:.12f}")
print(f"infidelity: {result.infidelity:.3e}")

# double-check through the reference propagator
record = propagate(block, result.controls, ParameterPoint.nominal(block))
print(f"reference-path fidelity: {fidelity(record.final, target_gate('H'), block):.12f}")

# a coarse look at the waveform
env = result.controls.envelopes
peak = np.abs(env).max()
print(f"\npeak amplitude {peak:.2f} (cap {config.omega_max}); "
      "x-quadrature profile (coarse):")
cols = 50
x = env[0, 0, :: max(1, env.shape[2] // cols)]
scale = 20 / max(peak, 1e-12)
for row in range(10, -11, -2):
    line = "".join("#" if round(v * scale / 2) * 2 >= row > 0 or
                   round(v * scale / 2) * 2 <= row < 0 else
                   ("-" if row == 0 else " ") for v in x)
    print(line)
