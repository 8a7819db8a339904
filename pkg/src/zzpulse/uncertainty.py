"""Interval uncertainty modeling and worst-case fidelity over hypercube corners.

Couplings, drive-amplitude scales, and detunings each vary independently in
centered intervals.  For small uncertainty (< 5 percent) and high fidelity
(> 99 percent) the minimum fidelity over the hypercube sits at one of its
extreme points, so the worst case is evaluated exactly on the 2^{n_u}
corners.  Corner ``k`` maps to parameters by binary counting: parameter
``p`` (ordered couplings-by-block-edge-order, then amplitude scales, then
detunings, skipping zero-width intervals) takes its low end when bit ``p``
of ``k`` is 0 and its high end when it is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import fidelities
from .hamiltonian import ControlVector, ParameterPoint
from .lattice import Block
from .propagation import TargetGate

MAX_UNCERTAIN_PARAMETERS = 24


@dataclass(frozen=True)
class UncertaintySpec:
    """Fractional full-interval widths for the uncertain parameter groups.

    ``coupling_frac`` and ``detuning_frac`` are relative to the nominal
    coupling strength; ``amplitude_frac`` is relative to the dimensionless
    unit scale.  Intervals are centered: couplings on each edge's nominal
    value, amplitude scales on 1, detunings on 0 (resonant drive).
    """

    coupling_frac: float = 0.0
    amplitude_frac: float = 0.0
    detuning_frac: float = 0.0
    nominal: float = 1.0

    def __post_init__(self):
        if min(self.coupling_frac, self.amplitude_frac, self.detuning_frac) < 0:
            raise ValueError("uncertainty fractions must be >= 0")
        if not self.nominal > 0:
            raise ValueError("nominal coupling must be positive")


def _parameter_axes(block: Block, spec: UncertaintySpec):
    """(kind, key, center, half_width) for every uncertain axis, in order."""
    qubits = block.qubits
    axes = []
    for li, lj, J in block.couplings:
        e = (min(qubits[li], qubits[lj]), max(qubits[li], qubits[lj]))
        axes.append(("J", e, float(J), 0.5 * spec.coupling_frac * spec.nominal))
    for q in block.center:
        axes.append(("alpha", q, 1.0, 0.5 * spec.amplitude_frac))
    for q in block.center:
        axes.append(("delta", q, 0.0, 0.5 * spec.detuning_frac * spec.nominal))
    return axes


def _point_from_offsets(block: Block, axes, offsets) -> ParameterPoint:
    couplings, alphas, deltas = {}, {}, {}
    for (kind, key, center, _), off in zip(axes, offsets):
        value = center + off
        if kind == "J":
            couplings[key] = value
        elif kind == "alpha":
            alphas[key] = value
        else:
            deltas[key] = value
    return ParameterPoint(couplings, alphas, deltas)


def num_uncertain_parameters(block: Block, spec: UncertaintySpec) -> int:
    return sum(1 for *_, hw in _parameter_axes(block, spec) if hw > 0)


def hypercube_corners(block: Block, spec: UncertaintySpec) -> list[ParameterPoint]:
    """All extreme points of the uncertainty hypercube, in bitmask order.

    Zero-width axes are collapsed, so a spec with all fractions zero yields
    the single nominal point.  Guarded against enumeration blow-up at
    ``MAX_UNCERTAIN_PARAMETERS`` active axes.
    """
    axes = _parameter_axes(block, spec)
    active = [i for i, (*_, hw) in enumerate(axes) if hw > 0]
    n_u = len(active)
    if n_u > MAX_UNCERTAIN_PARAMETERS:
        raise ValueError(
            f"{n_u} uncertain parameters would need 2^{n_u} corners; "
            f"limit is {MAX_UNCERTAIN_PARAMETERS}"
        )
    corners = []
    for mask in range(2**n_u):
        offsets = [0.0] * len(axes)
        for bit, i in enumerate(active):
            hw = axes[i][3]
            offsets[i] = hw if (mask >> bit) & 1 else -hw
        corners.append(_point_from_offsets(block, axes, offsets))
    return corners


def sample_interior(block: Block, spec: UncertaintySpec, count: int,
                    seed=None) -> list[ParameterPoint]:
    """Uniform random parameter points from the interior of the hypercube."""
    axes = _parameter_axes(block, spec)
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(count):
        offsets = [rng.uniform(-hw, hw) if hw > 0 else 0.0 for *_, hw in axes]
        points.append(_point_from_offsets(block, axes, offsets))
    return points


@dataclass(frozen=True)
class WorstCase:
    """Exact minimum of the fidelity over an explicit parameter point set."""

    f_min: float
    argmin: int
    values: np.ndarray

    @property
    def f_mean(self) -> float:
        return float(self.values.mean())

    @property
    def f_max(self) -> float:
        return float(self.values.max())


def worst_case_fidelity(block: Block, controls: ControlVector,
                        corners: list[ParameterPoint], target: TargetGate) -> WorstCase:
    """Minimum trace fidelity over a corner set, with per-corner values."""
    if not corners:
        raise ValueError("corner set must be nonempty")
    values = fidelities(block, controls, corners, target)
    argmin = int(np.argmin(values))
    return WorstCase(f_min=float(values[argmin]), argmin=argmin, values=values)


def coherence_bound(duration: float, t2: float, block_size: int) -> float:
    """Upper fidelity bound from block-enhanced decoherence.

    A block of N' qubits dephases about N' times faster, bounding any gate
    on it by 1 - N' T / T2 (clamped at zero).
    """
    if t2 <= 0:
        raise ValueError("T2 must be positive")
    return max(0.0, 1.0 - block_size * duration / t2)
