"""Collision-model dilation of the emitter and its bath.

The bath is a stream of fresh qubit ancillas, one per time step ``dt``. Ancilla
``n`` collides with the emitter during step ``n`` through

    U = exp(-i dt [H_S (x) 1 + g (s+ (x) b- + s- (x) b+)]),  g = sqrt(G' / dt)

with ``G' = gamma (2 nbar + 1)``. Ancillas start excited with probability
``nbar / (2 nbar + 1)``, purified by a partner qubit, so the reduced dynamics
has decay rate ``gamma (nbar + 1)`` and pumping rate ``gamma nbar`` to first
order in ``dt``. Multi-time correlations of system operators are then exact
Heisenberg-picture expectations on the dilated pure state, with no regression
assumption. Everything is done on state vectors; dilated operators are never
formed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .emitter import EmitterParams, SIGMA_MINUS, SIGMA_PLUS, hamiltonian, liouvillian
from .operators import steady_state
from .qrt import Event, schedule

MAX_QUBITS = 22
GRID_TOL = 1e-9

_ANC_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)


@dataclass(frozen=True)
class CollisionConfig:
    dt: float
    n_steps: int
    thermal: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.n_qubits > MAX_QUBITS:
            raise ValueError(
                f"{self.n_qubits} qubits exceed the budget of {MAX_QUBITS}"
            )

    @property
    def n_qubits(self) -> int:
        return 1 + self.n_steps * (2 if self.thermal else 1)

    @classmethod
    def covering(cls, events: Sequence[Event], dt: float, nbar: float = 0.0):
        """Smallest configuration whose steps reach the latest event time."""
        times = [e.time for e in schedule(*events)]
        span = max(times) - min(times)
        return cls(dt, max(1, _grid_index(span, dt)), thermal=nbar > 0)


def _grid_index(t: float, dt: float) -> int:
    n = round(t / dt)
    if abs(n * dt - t) > GRID_TOL * max(1.0, abs(t)):
        raise ValueError(f"time {t} is not on the collision grid dt = {dt}")
    return int(n)


def collision_unitary(p: EmitterParams, dt: float) -> np.ndarray:
    """4x4 collision unitary on system (x) ancilla, system index first."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    g = np.sqrt(p.gamma * (2 * p.nbar + 1) / dt)
    H = np.kron(hamiltonian(p), np.eye(2)) + g * (
        np.kron(SIGMA_PLUS, _ANC_LOWER) + np.kron(SIGMA_MINUS, _ANC_LOWER.conj().T)
    )
    return la.expm(-1j * dt * H)


def _apply_pair(psi: np.ndarray, gate: np.ndarray, anc_axis: int) -> np.ndarray:
    """Apply a 2-qubit gate on (system, ancilla) axes of a ``(2,)*n`` tensor."""
    out = np.tensordot(gate, psi, axes=([2, 3], [0, anc_axis]))
    return np.moveaxis(out, 1, anc_axis)


def _apply_system(psi: np.ndarray, op: np.ndarray) -> np.ndarray:
    return np.tensordot(op, psi, axes=([1], [0]))


class _Dilation:
    def __init__(self, p: EmitterParams, cfg: CollisionConfig):
        if p.nbar > 0 and not cfg.thermal:
            raise ValueError("nbar > 0 needs a thermal (purified) collision config")
        self.cfg = cfg
        U = collision_unitary(p, cfg.dt)
        self.fwd = U.reshape(2, 2, 2, 2)
        self.bwd = U.conj().T.reshape(2, 2, 2, 2)
        self.p_exc = p.nbar / (2 * p.nbar + 1)

    def initial_state(self, sys_ket: np.ndarray) -> np.ndarray:
        n = self.cfg.n_steps
        if self.cfg.thermal:
            pair = np.zeros((2, 2), dtype=complex)
            pair[0, 0] = np.sqrt(1 - self.p_exc)
            pair[1, 1] = np.sqrt(self.p_exc)
            psi = sys_ket
            for _ in range(n):
                psi = np.multiply.outer(psi, pair)
            return psi
        psi = sys_ket.astype(complex)
        ground = np.array([1, 0], dtype=complex)
        for _ in range(n):
            psi = np.multiply.outer(psi, ground)
        return psi

    def _anc_axis(self, step: int) -> int:
        return 1 + step * (2 if self.cfg.thermal else 1)

    def move(self, psi: np.ndarray, start: int, stop: int) -> np.ndarray:
        """Schroedinger-propagate the state from step ``start`` to ``stop``."""
        if stop > self.cfg.n_steps:
            raise ValueError("schedule extends beyond the configured collisions")
        for s in range(start, stop):
            psi = _apply_pair(psi, self.fwd, self._anc_axis(s))
        for s in range(start - 1, stop - 1, -1):
            psi = _apply_pair(psi, self.bwd, self._anc_axis(s))
        return psi


def oracle_correlation(events: Sequence[Event], p: EmitterParams, cfg: CollisionConfig,
                       rho0=None) -> complex:
    """``<O_1(t_1) ... O_K(t_K)>`` on the dilated system, times relative to the earliest.

    The system starts in ``rho0`` (default: the master-equation steady state)
    with fresh ancillas; a mixed ``rho0`` is handled by averaging over its
    eigenvectors.
    """
    events = schedule(*events)
    if not events:
        raise ValueError("empty schedule")
    t0 = min(e.time for e in events)
    steps = [_grid_index(e.time - t0, cfg.dt) for e in events]
    if max(steps) > cfg.n_steps:
        raise ValueError(f"schedule needs {max(steps)} collisions, config has {cfg.n_steps}")
    rho = steady_state(liouvillian(p)) if rho0 is None else np.asarray(rho0)
    weights, kets = np.linalg.eigh(rho)
    dil = _Dilation(p, cfg)
    total = 0j
    for w, ket in zip(weights, kets.T):
        if w < 1e-14:
            continue
        psi0 = dil.initial_state(ket)
        # W(t)^+ O W(t) applied right to left: keep the state "at" a step index
        phi, at = psi0, 0
        for ev, step in zip(reversed(events), reversed(steps)):
            phi = dil.move(phi, at, step)
            phi = _apply_system(phi, ev.op)
            at = step
        phi = dil.move(phi, at, 0)
        total += w * np.vdot(psi0, phi)
    return complex(total)
