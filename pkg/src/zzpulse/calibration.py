"""Spectroscopic recovery of bare qubit frequencies on the honeycomb array.

Fixed ZZ couplings shift every absorption peak: flipping one qubit costs
``-2 J`` per bond to a ground-state neighbor, so one-photon peaks come out
dispersively shifted.  Driving the target and one neighbor together flips
both ends of their shared bond, which removes that bond's shift from the
two-photon resonance.  Combining the three two-photon peaks with the four
one-photon peaks of a target's unit cell cancels every shift:

    w_1 = sum_j w^p_{1j} - (1/2) sum_{j=1..4} w^p_j

The formulas assume a degree-3 target (honeycomb bulk); clusters with any
other target degree are rejected.  Fringe qubits (the neighbors'
neighbors) enter only through their couplings -- their own frequencies
cancel before they can matter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .hamiltonian import z_diagonal
from .lattice import QubitGraph

MAX_ORACLE_QUBITS = 14


def _norm_pair(a, b):
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class SpectroscopyCluster:
    """A degree-3 target qubit, its neighbors, and their fringe couplings.

    ``frequencies`` must cover the target and the three neighbors.
    ``couplings`` must cover the three target bonds and every
    neighbor-fringe bond listed in ``fringe``.
    """

    target: int
    neighbors: tuple[int, int, int]
    frequencies: Mapping[int, float]
    couplings: Mapping[tuple[int, int], float]
    fringe: Mapping[int, tuple[int, ...]]

    def __post_init__(self):
        if len(set(self.neighbors)) != 3 or self.target in self.neighbors:
            raise ValueError("target must have exactly three distinct neighbors")
        for j in self.neighbors:
            if j not in self.frequencies:
                raise ValueError(f"missing frequency for neighbor {j}")
            self.coupling(self.target, j)
            for k in self.fringe.get(j, ()):
                self.coupling(j, k)
        if self.target not in self.frequencies:
            raise ValueError("missing frequency for the target qubit")

    def coupling(self, a: int, b: int) -> float:
        key = _norm_pair(a, b)
        if key not in self.couplings:
            raise ValueError(f"missing coupling for bond {key}")
        return float(self.couplings[key])

    def fringe_shift(self, j: int) -> float:
        """Total dispersive shift of neighbor j from its non-target bonds."""
        return 2.0 * sum(self.coupling(j, k) for k in self.fringe.get(j, ()))

    def all_qubits(self) -> tuple[int, ...]:
        out = {self.target, *self.neighbors}
        for j in self.neighbors:
            out.update(self.fringe.get(j, ()))
        return tuple(sorted(out))


def cluster_from_graph(graph: QubitGraph, frequencies: Mapping[int, float],
                       target: int) -> SpectroscopyCluster:
    """Extract the measurement cluster of a bulk (degree-3) qubit."""
    neighbors = graph.neighbors(target)
    if len(neighbors) != 3:
        raise ValueError(
            f"qubit {target} has degree {len(neighbors)}; frequency recovery "
            "needs a degree-3 target"
        )
    couplings = {}
    fringe = {}
    for j in neighbors:
        couplings[_norm_pair(target, j)] = graph.coupling_of(target, j)
        others = tuple(k for k in graph.neighbors(j) if k != target)
        fringe[j] = others
        for k in others:
            couplings[_norm_pair(j, k)] = graph.coupling_of(j, k)
    freqs = {q: float(frequencies[q]) for q in (target, *neighbors)}
    return SpectroscopyCluster(
        target=target,
        neighbors=tuple(neighbors),
        frequencies=freqs,
        couplings=couplings,
        fringe=fringe,
    )


@dataclass(frozen=True)
class PeakSet:
    """Measured (or simulated) peak positions keyed by qubit index.

    ``one_photon`` covers the target and its three neighbors;
    ``two_photon`` holds the per-photon resonance of each (target, neighbor)
    pair, keyed by the neighbor.
    """

    target: int
    one_photon: Mapping[int, float]
    two_photon: Mapping[int, float]


def predict_one_photon_peaks(cluster: SpectroscopyCluster) -> dict[int, float]:
    """Dispersively shifted single-flip resonances of the four cell qubits."""
    t = cluster.target
    peaks = {
        t: cluster.frequencies[t]
        - 2.0 * sum(cluster.coupling(t, j) for j in cluster.neighbors)
    }
    for j in cluster.neighbors:
        peaks[j] = (
            cluster.frequencies[j] - 2.0 * cluster.coupling(t, j) - cluster.fringe_shift(j)
        )
    return peaks


def predict_two_photon_peaks(cluster: SpectroscopyCluster) -> dict[int, float]:
    """Per-photon frequency of the simultaneous (target, neighbor) flip.

    The shared bond is flipped at both ends and therefore drops out of the
    resonance condition.
    """
    t = cluster.target
    peaks = {}
    for j in cluster.neighbors:
        other_bonds = sum(cluster.coupling(t, l) for l in cluster.neighbors if l != j)
        peaks[j] = 0.5 * (
            cluster.frequencies[t]
            + cluster.frequencies[j]
            - 2.0 * other_bonds
            - cluster.fringe_shift(j)
        )
    return peaks


def predict_peaks(cluster: SpectroscopyCluster) -> PeakSet:
    return PeakSet(
        target=cluster.target,
        one_photon=predict_one_photon_peaks(cluster),
        two_photon=predict_two_photon_peaks(cluster),
    )


def recover_frequency(peaks: PeakSet) -> float:
    """Bare target frequency from the seven peaks; all shifts cancel.

    Linear in the peak vector with coefficients (+1, +1, +1) on the
    two-photon peaks and (-1/2) on each one-photon peak, so a measurement
    error of at most eps per peak moves the result by at most 5 eps.
    """
    if len(peaks.two_photon) != 3 or len(peaks.one_photon) != 4:
        raise ValueError("need three two-photon and four one-photon peaks")
    return float(
        sum(peaks.two_photon.values()) - 0.5 * sum(peaks.one_photon.values())
    )


def oracle_peaks(cluster: SpectroscopyCluster) -> PeakSet:
    """Peaks as energy differences of the diagonal cluster Hamiltonian.

    Builds H = -sum_q (w_q/2) Z_q + sum J Z Z over the cluster and its
    fringe and reads E(flipped) - E(ground) off the diagonal.  Fringe
    frequencies cancel in every difference and are set to zero.
    """
    qubits = cluster.all_qubits()
    n = len(qubits)
    if n > MAX_ORACLE_QUBITS:
        raise ValueError(f"oracle supports at most {MAX_ORACLE_QUBITS} qubits, got {n}")
    local = {q: i for i, q in enumerate(qubits)}
    diag = np.zeros(2**n)
    for q in qubits:
        w = cluster.frequencies.get(q, 0.0)
        diag -= 0.5 * w * z_diagonal(n, local[q])
    for (a, b), J in cluster.couplings.items():
        diag += J * z_diagonal(n, local[a]) * z_diagonal(n, local[b])

    def energy(flipped):
        idx = 0
        for q in flipped:
            idx |= 1 << (n - 1 - local[q])
        return diag[idx]

    e0 = energy(())
    t = cluster.target
    one = {t: float(energy((t,)) - e0)}
    two = {}
    for j in cluster.neighbors:
        one[j] = float(energy((j,)) - e0)
        two[j] = float(0.5 * (energy((t, j)) - e0))
    return PeakSet(target=t, one_photon=one, two_photon=two)
