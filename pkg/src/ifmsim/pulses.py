"""Pulse unitaries used by the detector protocols, plus closed-form checks.

Conventions (qutrit basis |0>, |1>, |2>):

* A beam splitter rotates the 0-1 subspace about y by an angle phi and
  leaves |2> untouched.  Its 0-1 block is [[cos(phi/2), -sin(phi/2)],
  [sin(phi/2), cos(phi/2)]], so it maps |0> -> cos(phi/2)|0> + sin(phi/2)|1>.
* A drive pulse of angle theta about the in-plane axis (cos(chi), -sin(chi))
  acts on the sensing transition: g-e for the qubit, 1-2 for the qutrit.
  Its active block is [[cos(theta/2), -i e^{i chi} sin(theta/2)],
  [-i e^{-i chi} sin(theta/2), cos(theta/2)]].  With chi = -pi/2 every
  matrix here is real.

theta + 4*pi gives the same pulse as theta (spinor period), which is what
makes the detectors transparent to drive angles at integer multiples of 4*pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError

__all__ = [
    "BeamSplitterSpec",
    "Pulse",
    "beam_splitter",
    "composed_pulse",
    "lumped_pulse_amplitudes",
    "n2_alternating_state",
    "pifm_measure_channel",
    "pifm_pi_train_p0",
    "qubit_b_pulse",
    "qutrit_b_pulse",
]


@dataclass(frozen=True)
class BeamSplitterSpec:
    """Beam-splitter strength for a protocol with n_slots pulse intervals.

    The rotation angle is phi = pi / (n_slots + 1), so that the n_slots + 1
    beam splitters of a noise-free run compose to a full 0-1 inversion.
    """

    n_slots: int

    def __post_init__(self) -> None:
        if self.n_slots < 1:
            raise ValueError(f"n_slots must be >= 1, got {self.n_slots}")

    @property
    def phi(self) -> float:
        return math.pi / (self.n_slots + 1)


@dataclass(frozen=True)
class Pulse:
    """One drive interval as an ordered list of (delta_theta, chi) segments.

    Segments are applied in time order: index 0 acts first.
    """

    dtheta: np.ndarray
    chi: np.ndarray

    def __post_init__(self) -> None:
        dtheta = np.atleast_1d(np.asarray(self.dtheta, dtype=np.float64))
        chi = np.atleast_1d(np.asarray(self.chi, dtype=np.float64))
        if dtheta.shape != chi.shape or dtheta.ndim != 1:
            raise ValueError("dtheta and chi must be 1-d arrays of equal length")
        if dtheta.size < 1:
            raise ValueError("a pulse needs at least one segment")
        if not (np.all(np.isfinite(dtheta)) and np.all(np.isfinite(chi))):
            raise ValueError("pulse segments must be finite")
        object.__setattr__(self, "dtheta", dtheta)
        object.__setattr__(self, "chi", chi)

    def __len__(self) -> int:
        return self.dtheta.size

    @property
    def total_angle(self) -> float:
        return float(self.dtheta.sum())


def beam_splitter(spec: BeamSplitterSpec | int) -> np.ndarray:
    """3x3 beam-splitter unitary for the given slot count (or spec)."""
    if isinstance(spec, int):
        spec = BeamSplitterSpec(spec)
    c = math.cos(spec.phi / 2.0)
    s = math.sin(spec.phi / 2.0)
    u = np.zeros((3, 3), dtype=np.complex128)
    u[0, 0] = c
    u[0, 1] = -s
    u[1, 0] = s
    u[1, 1] = c
    u[2, 2] = 1.0
    return u


def qubit_b_pulse(theta: float, phi: float) -> np.ndarray:
    """2x2 drive pulse of angle theta about axis (cos(phi), -sin(phi))."""
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise ValueError("theta and phi must be finite")
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array(
        [[c, -1j * e * s], [-1j * e.conjugate() * s, c]], dtype=np.complex128
    )


def qutrit_b_pulse(theta: float, phi: float) -> np.ndarray:
    """3x3 drive pulse: identity on |0>, rotation by theta on the 1-2 block."""
    if not (math.isfinite(theta) and math.isfinite(phi)):
        raise ValueError("theta and phi must be finite")
    u = np.zeros((3, 3), dtype=np.complex128)
    u[0, 0] = 1.0
    u[1:, 1:] = qubit_b_pulse(theta, phi)
    return u


def composed_pulse(pulse: Pulse, dim: int) -> np.ndarray:
    """Time-ordered product of segment unitaries (earliest segment rightmost).

    This is a literal matrix product, not an averaged-rotation approximation;
    segments sharing one axis therefore compose exactly to the single pulse
    with the summed angle (up to double-precision roundoff).
    """
    if dim == 2:
        make = qubit_b_pulse
    elif dim == 3:
        make = qutrit_b_pulse
    else:
        raise DimensionMismatchError(f"dim must be 2 or 3, got {dim}")
    u = np.eye(dim, dtype=np.complex128)
    for p in range(len(pulse)):
        u = make(float(pulse.dtheta[p]), float(pulse.chi[p])) @ u
    return u


def pifm_measure_channel(rho: np.ndarray) -> np.ndarray:
    """Nonselective projective measurement distinguishing |2> from {|0>, |1>}.

    Returns P2 rho P2 + P01 rho P01: the diagonal blocks survive and every
    coherence between |2> and the 0-1 subspace is set to exactly zero.
    Trace is preserved and the channel is idempotent.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (3, 3):
        raise DimensionMismatchError(f"expected a 3x3 density matrix, got {rho.shape}")
    out = rho.copy()
    out[0, 2] = 0.0
    out[1, 2] = 0.0
    out[2, 0] = 0.0
    out[2, 1] = 0.0
    return out


def lumped_pulse_amplitudes(n_slots: int, slot: int, theta: float) -> tuple[float, float, float]:
    """Final-state amplitudes when all drive power lands in a single slot.

    For a protocol with n_slots intervals where slot `slot` (1-based,
    0 < slot < n_slots) carries one pulse of angle n_slots * theta and every
    other interval is empty, the final state after the full beam-splitter
    train is c0|0> + c1|1> + c2|2> with

        c0 = sin(slot * phi) * sin^2(n_slots * theta / 4)
        c1 = cos^2(n_slots * theta / 4) + cos(slot * phi) * sin^2(n_slots * theta / 4)
        c2 = sin(n_slots * theta / 2) * sin(slot * phi / 2)

    and phi = pi / (n_slots + 1).  The amplitudes are exactly real for the
    chi = -pi/2 axis convention used throughout this package.
    """
    if not 0 < slot < n_slots:
        raise ValueError(f"slot must satisfy 0 < slot < n_slots, got {slot} of {n_slots}")
    phi = math.pi / (n_slots + 1)
    big = n_slots * theta
    s4 = math.sin(big / 4.0) ** 2
    c0 = math.sin(slot * phi) * s4
    c1 = math.cos(big / 4.0) ** 2 + math.cos(slot * phi) * s4
    c2 = math.sin(big / 2.0) * math.sin(slot * phi / 2.0)
    return c0, c1, c2


def n2_alternating_state(theta: float) -> np.ndarray:
    """Closed-form final state of the two-slot sequence with angles (+theta, -theta).

    Evaluates S B(-theta) S B(+theta) S |0> for the n_slots = 2 beam splitter
    (phi = pi/3) and axis chi = -pi/2, where the first pulse +theta acts
    first.  All three amplitudes are real in this convention; the |0>
    amplitude is second order in theta but nonzero, which is what lets the
    coherent detector see sign-alternating noise that a bare qubit misses.
    """
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    r3 = math.sqrt(3.0)
    a0 = 3.0 * r3 / 8.0 - (2.0 * r3 / 8.0) * c - (r3 / 8.0) * c * c - 0.25 * s * s
    a1 = 3.0 / 8.0 + (2.0 / 8.0) * c + (3.0 / 8.0) * c * c + (r3 / 4.0) * s * s
    a2 = ((2.0 - r3) / 4.0) * s * c - (r3 / 4.0) * s
    return np.array([a0, a1, a2], dtype=np.complex128)


def pifm_pi_train_p0(n_slots: int) -> float:
    """Projective-detector marker for a train of pi pulses in every slot.

    p0 = cos^(2(n_slots+1))(pi / (2(n_slots+1))); monotonically increasing in
    n_slots and approaching 1, independent of the pulse axis angles.
    """
    if n_slots < 1:
        raise ValueError(f"n_slots must be >= 1, got {n_slots}")
    m = n_slots + 1
    return math.cos(math.pi / (2.0 * m)) ** (2 * m)
