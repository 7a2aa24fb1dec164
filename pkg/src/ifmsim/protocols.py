"""Single-realization detector protocols.

Each runner consumes a PulseSchedule (the per-interval noise segments) and
returns the final level populations.  The marker population signalling a
detection is p_e for the qubit and p0 for either qutrit protocol.

All three are pure functions of (schedule, initial state); ensembles of
realizations can therefore run in parallel without shared state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import DimensionMismatchError, basis_state, pure_density
from .noise import PulseSchedule
from .pulses import BeamSplitterSpec

__all__ = ["ProtocolResult", "run_cifm", "run_pifm", "run_qubit"]


@dataclass(frozen=True)
class ProtocolResult:
    """Final populations of one protocol run.

    populations has length 2 (qubit: p_g, p_e) or 3 (qutrit: p0, p1, p2);
    marker is the detection-signal entry.
    """

    protocol: str
    populations: np.ndarray
    marker: float

    def __post_init__(self) -> None:
        pops = np.asarray(self.populations, dtype=np.float64)
        total = float(pops.sum())
        if pops.min() < -1e-10 or pops.max() > 1.0 + 1e-10 or abs(total - 1.0) > 1e-10:
            raise ValueError(f"invalid populations {pops} (sum {total})")
        object.__setattr__(self, "populations", pops)


def _segment_batch(schedule: PulseSchedule):
    dtheta, chi, offsets = schedule.segment_arrays()
    return dtheta[np.newaxis, :], chi[np.newaxis, :], offsets


def run_qubit(schedule: PulseSchedule, initial: np.ndarray | None = None) -> ProtocolResult:
    """Absorptive qubit detector: drive pulses only, no beam splitters.

    The composed pulses of every interval are applied to the state in time
    order; for a common axis the marker reduces to
    p_e = (1 - cos(sum of theta_j)) / 2 from the ground state.
    """
    psi0 = basis_state(2, 0) if initial is None else np.asarray(initial, np.complex128)
    if psi0.shape != (2,):
        raise DimensionMismatchError(f"qubit initial state must have shape (2,), got {psi0.shape}")
    dtheta, chi, _ = _segment_batch(schedule)
    pops = kernels.qubit_populations(dtheta, chi, psi0)[0]
    return ProtocolResult("qubit", pops, float(pops[1]))


def run_cifm(schedule: PulseSchedule, initial: np.ndarray | None = None) -> ProtocolResult:
    """Coherent interaction-free detector.

    Applies n_slots + 1 beam splitters of strength pi / (n_slots + 1)
    interleaved with the composed drive pulse of each interval, with no
    mid-sequence measurement.  With no noise the qutrit ends in |1>;
    noise pins it to |0>, so the marker is p0.
    """
    psi0 = basis_state(3, 0) if initial is None else np.asarray(initial, np.complex128)
    if psi0.shape != (3,):
        raise DimensionMismatchError(f"qutrit initial state must have shape (3,), got {psi0.shape}")
    dtheta, chi, offsets = _segment_batch(schedule)
    phi = BeamSplitterSpec(schedule.n_slots).phi
    pops = kernels.cifm_populations(dtheta, chi, offsets, phi, psi0)[0]
    return ProtocolResult("cifm", pops, float(pops[0]))


def run_pifm(schedule: PulseSchedule, initial: np.ndarray | None = None) -> ProtocolResult:
    """Projective interaction-free detector.

    Same beam-splitter train as the coherent protocol, but after every drive
    interval a projective measurement distinguishes |2> from the 0-1
    subspace: coherences to |2> are erased, and any population found on |2>
    is recorded as a detector click and shelved (a clicked detector stays
    clicked, so that branch is not driven further).  The evolution is a
    deterministic channel on the density matrix, which averages the
    measurement trajectories exactly; p2 of the result is the total click
    probability and the marker is p0.
    """
    rho0 = pure_density(basis_state(3, 0)) if initial is None else np.asarray(initial, np.complex128)
    if rho0.shape != (3, 3):
        raise DimensionMismatchError(f"initial density matrix must be 3x3, got {rho0.shape}")
    dtheta, chi, offsets = _segment_batch(schedule)
    phi = BeamSplitterSpec(schedule.n_slots).phi
    pops = kernels.pifm_populations(dtheta, chi, offsets, phi, rho0)[0]
    return ProtocolResult("pifm", pops, float(pops[0]))
