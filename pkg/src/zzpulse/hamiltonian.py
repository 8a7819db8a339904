"""Sparse/dense multi-qubit operators and the time-sliced block Hamiltonian.

Conventions fixed here and used everywhere else:

* qubit 0 is the most significant bit of the computational-basis index;
* the drive term carries the 1/2 prefactor,
  ``H_drive = (1/2) * alpha_j * (W_jn sx_j + W'_jn sy_j)``, with the rotated
  quadratures evaluated at the midpoint of each time bin;
* bins are indexed 0..M-1, bin ``n`` covering ``[n*dt, (n+1)*dt)`` with
  midpoint ``(n + 1/2)*dt``;
* energies are in units of the nominal coupling strength and times in its
  inverse, so the numbers here are dimensionless.

Dense ndarrays are used up to ``SPARSE_THRESHOLD_QUBITS`` qubits and
``scipy.sparse`` CSR beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .lattice import Block

SPARSE_THRESHOLD_QUBITS = 7

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def use_sparse(num_qubits: int) -> bool:
    return num_qubits >= SPARSE_THRESHOLD_QUBITS


def to_dense(op) -> np.ndarray:
    if sp.issparse(op):
        return op.toarray()
    return np.asarray(op)


def pauli_on(num_qubits: int, index: int, axis: str):
    """Single-qubit Pauli embedded in an ``num_qubits``-qubit register.

    Qubit 0 occupies the most significant bit, i.e. the leftmost factor of
    the tensor product.
    """
    if not 0 <= index < num_qubits:
        raise ValueError(f"qubit index {index} out of range for {num_qubits} qubits")
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if use_sparse(num_qubits):
        left = sp.identity(2**index, format="csr", dtype=complex)
        right = sp.identity(2 ** (num_qubits - index - 1), format="csr", dtype=complex)
        return sp.kron(sp.kron(left, sp.csr_matrix(_PAULI[axis])), right, format="csr")
    op = np.eye(1, dtype=complex)
    for q in range(num_qubits):
        op = np.kron(op, _PAULI[axis] if q == index else np.eye(2, dtype=complex))
    return op


def z_diagonal(num_qubits: int, index: int) -> np.ndarray:
    """Diagonal of sigma_z on ``index`` as a +/-1 vector of length 2**n."""
    bits = (np.arange(2**num_qubits) >> (num_qubits - 1 - index)) & 1
    return 1.0 - 2.0 * bits


@dataclass(frozen=True)
class ParameterPoint:
    """One concrete realization of the uncertain Hamiltonian parameters.

    ``couplings`` is keyed by normalized global qubit pairs; amplitude
    scales and detunings are keyed by driven qubit index.
    """

    couplings: dict
    amplitude_scales: dict
    detunings: dict

    def __post_init__(self):
        for q, a in self.amplitude_scales.items():
            if not a > 0:
                raise ValueError(f"amplitude scale for qubit {q} must be positive")
        for val in (*self.couplings.values(), *self.amplitude_scales.values(),
                    *self.detunings.values()):
            if not np.isfinite(val):
                raise ValueError("parameter values must be finite")

    @classmethod
    def nominal(cls, block: Block) -> "ParameterPoint":
        qubits = block.qubits
        couplings = {}
        for li, lj, J in block.couplings:
            a, b = qubits[li], qubits[lj]
            couplings[(min(a, b), max(a, b))] = float(J)
        return cls(
            couplings=couplings,
            amplitude_scales={q: 1.0 for q in block.center},
            detunings={q: 0.0 for q in block.center},
        )

    def coupling(self, a: int, b: int) -> float:
        key = (min(a, b), max(a, b))
        if key not in self.couplings:
            raise KeyError(f"missing coupling value for edge {key}")
        return self.couplings[key]


@dataclass(frozen=True)
class ControlVector:
    """Piecewise-constant quadrature envelopes over M bins of total length T.

    ``envelopes`` has shape (num_drives, 2, M): row j holds the x and y
    quadratures of the j-th driven qubit, in the block's center order.
    """

    duration: float
    num_bins: int
    envelopes: np.ndarray

    def __post_init__(self):
        env = np.asarray(self.envelopes, dtype=float)
        if env.ndim != 3 or env.shape[1] != 2 or env.shape[2] != self.num_bins:
            raise ValueError(
                f"envelopes must have shape (drives, 2, {self.num_bins})"
            )
        if self.duration <= 0 or self.num_bins < 1:
            raise ValueError("need positive duration and at least one bin")
        env.setflags(write=False)
        object.__setattr__(self, "envelopes", env)

    @property
    def num_drives(self) -> int:
        return self.envelopes.shape[0]

    @property
    def dt(self) -> float:
        return self.duration / self.num_bins

    @property
    def size(self) -> int:
        return self.envelopes.size

    def midpoints(self) -> np.ndarray:
        return (np.arange(self.num_bins) + 0.5) * self.dt

    def max_amplitude(self) -> float:
        return float(np.abs(self.envelopes).max())

    def to_vector(self) -> np.ndarray:
        """Flatten drive-major, then quadrature, then bin."""
        return self.envelopes.reshape(-1).copy()

    @classmethod
    def from_vector(cls, vec, duration: float, num_bins: int, num_drives: int):
        env = np.asarray(vec, dtype=float).reshape(num_drives, 2, num_bins)
        return cls(duration, num_bins, env)

    @classmethod
    def zeros(cls, duration: float, num_bins: int, num_drives: int):
        return cls(duration, num_bins, np.zeros((num_drives, 2, num_bins)))

    @classmethod
    def random_uniform(cls, duration, num_bins, num_drives, scale=0.5, seed=None):
        rng = np.random.default_rng(seed)
        env = rng.uniform(-scale, scale, size=(num_drives, 2, num_bins))
        return cls(duration, num_bins, env)


def envelope_at_bin(controls: ControlVector, drive: int, n: int, detuning: float):
    """Rotated quadratures (W, W') of one drive at the midpoint of bin n."""
    if not 0 <= n < controls.num_bins:
        raise ValueError(f"bin {n} out of range")
    t_mid = (n + 0.5) * controls.dt
    c, s = np.cos(detuning * t_mid), np.sin(detuning * t_mid)
    wx, wy = controls.envelopes[drive, 0, n], controls.envelopes[drive, 1, n]
    return wx * c + wy * s, wy * c - wx * s


def rotated_envelopes(controls: ControlVector, detunings: np.ndarray) -> np.ndarray:
    """All rotated quadratures at once; shape (num_drives, 2, M)."""
    t_mid = controls.midpoints()
    phase = np.asarray(detunings)[:, None] * t_mid[None, :]
    c, s = np.cos(phase), np.sin(phase)
    wx, wy = controls.envelopes[:, 0, :], controls.envelopes[:, 1, :]
    return np.stack([wx * c + wy * s, wy * c - wx * s], axis=1)


def drift_diagonal(block: Block, params: ParameterPoint) -> np.ndarray:
    """Diagonal of the ZZ drift over the block's local basis."""
    n = block.num_qubits
    qubits = block.qubits
    diag = np.zeros(2**n)
    for li, lj, _ in block.couplings:
        J = params.coupling(qubits[li], qubits[lj])
        diag += J * z_diagonal(n, li) * z_diagonal(n, lj)
    return diag


def drift_operator(block: Block, params: ParameterPoint):
    """ZZ drift Hamiltonian of a block (diagonal, Hermitian)."""
    diag = drift_diagonal(block, params)
    if use_sparse(block.num_qubits):
        return sp.diags(diag.astype(complex), format="csr")
    return np.diag(diag.astype(complex))


def _local_drive_ops(block: Block):
    n = block.num_qubits
    return [
        (pauli_on(n, l, "x"), pauli_on(n, l, "y")) for l in range(block.num_center)
    ]


def hamiltonian_slice(block: Block, controls: ControlVector, params: ParameterPoint, n: int):
    """Block Hamiltonian held constant over bin ``n``.

    H = sum_j (alpha_j/2) (W_jn sx_j + W'_jn sy_j) + sum ZZ drift.
    """
    if controls.num_drives != block.num_center:
        raise ValueError(
            f"controls carry {controls.num_drives} drives, block has "
            f"{block.num_center} center qubits"
        )
    H = drift_operator(block, params)
    ops = _local_drive_ops(block)
    for l, q in enumerate(block.center):
        w, wp = envelope_at_bin(controls, l, n, params.detunings[q])
        alpha = params.amplitude_scales[q]
        H = H + 0.5 * alpha * (w * ops[l][0] + wp * ops[l][1])
    return H


def control_operator(block: Block, qubit: int, n: int, params: ParameterPoint,
                     dt: float):
    """Derivatives of the slice Hamiltonian w.r.t. the two quadratures.

    Returns (Kx, Ky) for the given driven qubit at bin ``n``:
    Kx = (alpha/2)(cos(d*t_mid) sx - sin(d*t_mid) sy), Ky analogous.
    """
    if qubit not in block.center:
        raise ValueError(f"qubit {qubit} is not a driven center of this block")
    l = block.center.index(qubit)
    nq = block.num_qubits
    t_mid = (n + 0.5) * dt
    delta = params.detunings[qubit]
    alpha = params.amplitude_scales[qubit]
    c, s = np.cos(delta * t_mid), np.sin(delta * t_mid)
    sx, sy = pauli_on(nq, l, "x"), pauli_on(nq, l, "y")
    return 0.5 * alpha * (c * sx - s * sy), 0.5 * alpha * (s * sx + c * sy)


def embedded_slice(num_qubits: int, block: Block, controls: ControlVector,
                   params: ParameterPoint, n: int):
    """Block slice Hamiltonian embedded on a ``num_qubits`` register.

    Used to check that the blocks of a decomposition commute and to compare
    block-product evolution with whole-array evolution.
    """
    qubits = block.qubits
    sparse = use_sparse(num_qubits)
    dim = 2**num_qubits
    if sparse:
        H = sp.csr_matrix((dim, dim), dtype=complex)
    else:
        H = np.zeros((dim, dim), dtype=complex)
    diag = np.zeros(dim)
    for li, lj, _ in block.couplings:
        a, b = qubits[li], qubits[lj]
        diag += params.coupling(a, b) * z_diagonal(num_qubits, a) * z_diagonal(num_qubits, b)
    H = H + (sp.diags(diag.astype(complex), format="csr") if sparse else np.diag(diag.astype(complex)))
    for l, q in enumerate(block.center):
        w, wp = envelope_at_bin(controls, l, n, params.detunings[q])
        alpha = params.amplitude_scales[q]
        H = H + 0.5 * alpha * (
            w * pauli_on(num_qubits, q, "x") + wp * pauli_on(num_qubits, q, "y")
        )
    return H
