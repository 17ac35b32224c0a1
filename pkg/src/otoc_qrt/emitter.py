"""Driven, thermally pumped two-level emitter.

Basis order is ``(|g>, |e>)``, so ``sigma_minus = |g><e|`` is ``[[0, 1], [0, 0]]``.
Rates and frequencies are in units of ``gamma`` (default 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import LindbladChannel, Liouvillian, build_liouvillian, dyad
from .qrt import NoiseModel

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)
EXCITED = SIGMA_PLUS @ SIGMA_MINUS
IDENTITY = np.eye(2, dtype=complex)

A_IN = "a_in"
A_IN_DAG = "a_in†"


@dataclass(frozen=True)
class EmitterParams:
    omega: float = 0.0
    delta: float = 0.0
    gamma: float = 1.0
    nbar: float = 0.0

    def __post_init__(self):
        for name in ("omega", "delta", "gamma", "nbar"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.nbar < 0:
            raise ValueError(f"nbar must be >= 0, got {self.nbar}")


def hamiltonian(p: EmitterParams) -> np.ndarray:
    """``H = -delta sigma_+ sigma_- + omega/2 (sigma_+ + sigma_-)``."""
    return -p.delta * EXCITED + 0.5 * p.omega * (SIGMA_PLUS + SIGMA_MINUS)


def lindblad_channels(p: EmitterParams) -> list[LindbladChannel]:
    channels = [LindbladChannel(p.gamma * (p.nbar + 1), SIGMA_MINUS)]
    if p.nbar > 0:
        channels.append(LindbladChannel(p.gamma * p.nbar, SIGMA_PLUS))
    return channels


def liouvillian(p: EmitterParams) -> Liouvillian:
    return build_liouvillian(hamiltonian(p), lindblad_channels(p))


def _commutator(a, b):
    return a @ b - b @ a


def noise_model(p: EmitterParams) -> NoiseModel:
    """Noise terms ``F_ij = -[|j><i|, s+] a_in + [|j><i|, s-] a_in^+``.

    The bath correlations are ``<a_in a_in^+> = gamma (nbar + 1)`` and
    ``<a_in^+ a_in> = gamma nbar`` per unit time.
    """
    n = 2
    lower = {}
    raise_ = {}
    for i in range(n):
        for j in range(n):
            d = dyad(j, i, n)
            lower[(i, j)] = -_commutator(d, SIGMA_PLUS)
            raise_[(i, j)] = _commutator(d, SIGMA_MINUS)
    return NoiseModel(
        terms=((A_IN, lower), (A_IN_DAG, raise_)),
        bath_corr={
            (A_IN, A_IN_DAG): p.gamma * (p.nbar + 1),
            (A_IN_DAG, A_IN): p.gamma * p.nbar,
        },
    )


def analytic_steady_state(p: EmitterParams) -> np.ndarray:
    """Closed-form Bloch steady state, for cross-checks.

    With total relaxation ``g = gamma (2 nbar + 1)``, the inversion is
    ``w = w0 / (1 + s)``, ``w0 = -1 / (2 nbar + 1)``,
    ``s = omega^2 / (2 (delta^2 + g^2 / 4))`` and
    ``<s-> = (i omega / 2) w / (g / 2 - i delta)``.
    """
    g = p.gamma * (2 * p.nbar + 1)
    w0 = -1.0 / (2 * p.nbar + 1)
    s = p.omega**2 / (2 * (p.delta**2 + g**2 / 4))
    w = w0 / (1 + s)
    sm = 0.5j * p.omega * w / (g / 2 - 1j * p.delta)
    rho_ee = 0.5 * (1 + w)
    # <s-> = Tr(rho |g><e|) = rho[e, g]
    return np.array([[1 - rho_ee, np.conj(sm)], [sm, rho_ee]], dtype=complex)
