"""Dense operator algebra and Lindblad generators.

Operators are plain ``numpy`` arrays. Density matrices follow the convention
``rho[i, j] = <i|rho|j> = <(|j><i|)>`` and are flattened row-major, so the
index pair ``(i, j)`` maps to ``i * N + j``. Every superoperator in the package
uses this flattening.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la


HERMITIAN_TOL = 1e-12
NULL_SPACE_RTOL = 1e-10


class DimensionError(ValueError):
    """Operands do not share a Hilbert-space dimension."""


class SteadyStateError(RuntimeError):
    """The generator does not have a unique stationary state."""

    def __init__(self, null_dim: int):
        self.null_dim = null_dim
        super().__init__(
            f"expected a one-dimensional null space, found dimension {null_dim}"
        )


@dataclass(frozen=True)
class LindbladChannel:
    rate: float
    jump: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.rate) or self.rate < 0:
            raise ValueError(f"channel rate must be finite and >= 0, got {self.rate}")
        object.__setattr__(self, "jump", as_operator(self.jump))


@dataclass(frozen=True, eq=False)
class Liouvillian:
    """Generator ``M`` of ``d vec(rho)/dt = M vec(rho)`` (shape N^2 x N^2)."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def as_operator(op, hermitian: bool = False) -> np.ndarray:
    """Validate and convert ``op`` to a square complex matrix."""
    arr = np.asarray(op, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"operator must be square, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise DimensionError("operator dimension must be at least 2")
    if not np.all(np.isfinite(arr)):
        raise ValueError("operator has non-finite entries")
    if hermitian and not is_hermitian(arr):
        raise ValueError("operator is not Hermitian")
    return arr


def is_hermitian(op: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(op - op.conj().T), initial=0.0) <= tol)


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def dyad(j: int, i: int, dim: int) -> np.ndarray:
    """The basis operator ``|j><i|``."""
    out = np.zeros((dim, dim), dtype=complex)
    out[j, i] = 1.0
    return out


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=complex).reshape(-1)


def unvec(v: np.ndarray) -> np.ndarray:
    n = int(round(np.sqrt(v.size)))
    return np.asarray(v).reshape(n, n)


def operator_weights(op: np.ndarray) -> np.ndarray:
    """Weights ``w[(i, j)] = op[j, i]`` so that ``sum_ij w * rho_ij = Tr(rho op)``."""
    return np.asarray(op).T.reshape(-1)


def spre(a: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> a @ rho`` in row-major flattening."""
    return np.kron(a, np.eye(a.shape[0]))


def spost(b: np.ndarray) -> np.ndarray:
    """Superoperator of ``rho -> rho @ b`` in row-major flattening."""
    return np.kron(np.eye(b.shape[0]), b.T)


def dissipator(c: np.ndarray) -> np.ndarray:
    """``rho -> c rho c^+ - 1/2 {c^+ c, rho}``."""
    cdc = dag(c) @ c
    return np.kron(c, c.conj()) - 0.5 * (spre(cdc) + spost(cdc))


def build_liouvillian(H, channels: Sequence[LindbladChannel]) -> Liouvillian:
    """Generator of ``drho/dt = -i[H, rho] + sum_k rate_k D[L_k] rho``."""
    H = as_operator(H, hermitian=True)
    n = H.shape[0]
    M = -1j * (spre(H) - spost(H))
    for ch in channels:
        if ch.jump.shape != (n, n):
            raise DimensionError(
                f"jump operator has shape {ch.jump.shape}, Hamiltonian is {n}x{n}"
            )
        if ch.rate:
            M = M + ch.rate * dissipator(ch.jump)
    return Liouvillian(M)


def trace_weights(dim: int) -> np.ndarray:
    return np.eye(dim).reshape(-1)


def steady_state(L: Liouvillian, rtol: float = NULL_SPACE_RTOL) -> np.ndarray:
    """Unique trace-one null vector of the generator, as a density matrix.

    Singular values below ``rtol`` times the largest one count as zero. Raises
    ``SteadyStateError`` unless exactly one is found.
    """
    M = np.asarray(L.matrix)
    _, s, vh = la.svd(M)
    null_dim = int(np.sum(s < rtol * s[0])) if s[0] > 0 else s.size
    if null_dim != 1:
        raise SteadyStateError(null_dim)
    v = vh[-1].conj()
    rho = unvec(v)
    rho = rho / np.trace(rho)
    return 0.5 * (rho + dag(rho))


def evolve(generator, x, dt: float) -> np.ndarray:
    """Apply ``exp(G dt)`` to ``x`` with a Pade scaling-and-squaring exponential.

    ``x`` may be a flattened vector or an N x N matrix; the output has the same
    shape.
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    G = np.asarray(generator.matrix if isinstance(generator, Liouvillian) else generator)
    x = np.asarray(x, dtype=complex)
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(G)):
        raise ValueError("non-finite entries in evolve input")
    flat = x.reshape(-1)
    if flat.size != G.shape[1]:
        raise DimensionError(f"state of size {flat.size} vs generator {G.shape}")
    if dt == 0:
        return x.copy()
    return (la.expm(G * dt) @ flat).reshape(x.shape)


def expectation(rho, op) -> complex:
    """``sum_ij rho_ij op_ji = Tr(rho op)``."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape:
        raise DimensionError(f"state {rho.shape} vs operator {op.shape}")
    return complex(np.sum(rho * op.T))


class Propagator:
    """Cached ``exp(G t)`` for a fixed generator and many times ``t``.

    Uses an eigendecomposition when it is well conditioned and reproduces the
    generator; otherwise falls back to ``scipy.linalg.expm`` per call.
    """

    COND_MAX = 1e6

    def __init__(self, G: np.ndarray):
        self.G = np.asarray(G, dtype=complex)
        self._eig = None
        if self.G.shape[0] == 0:
            return
        try:
            w, V = la.eig(self.G)
        except la.LinAlgError:
            return
        if np.linalg.cond(V) > self.COND_MAX:
            return
        Vinv = la.inv(V)
        scale = max(np.max(np.abs(self.G)), 1.0)
        if np.max(np.abs((V * w) @ Vinv - self.G)) > 1e-12 * scale * self.G.shape[0]:
            return
        self._eig = (w, V, Vinv)

    @property
    def diagonalized(self) -> bool:
        return self._eig is not None

    def apply(self, x: np.ndarray, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"propagation time must be non-negative, got {t}")
        if t == 0:
            return x
        if self._eig is None:
            return la.expm(self.G * t) @ x
        w, V, Vinv = self._eig
        return V @ (np.exp(w * t) * (Vinv @ x))
