"""Multi-time correlation functions by the generalized regression theorem.

A correlation ``<O_1(t_1) O_2(t_2) ... O_K(t_K)>`` is evaluated by carrying a
tensor with one dyadic slot per not-yet-applied operator. Slot ``r`` holds the
index pair ``(i_r, j_r)`` of the dyadic ``|j_r><i_r|`` at the current frontier
time. Each slot evolves under the master-equation generator; every pair of slots
additionally couples through the second-order noise term of the Heisenberg
dyadic equations.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .operators import (
    DimensionError,
    Liouvillian,
    Propagator,
    as_operator,
    operator_weights,
    steady_state,
)

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class Event:
    op: np.ndarray
    time: float

    def __post_init__(self):
        object.__setattr__(self, "op", as_operator(self.op))
        if not np.isfinite(self.time):
            raise ValueError(f"event time must be finite, got {self.time}")


def schedule(*pairs) -> tuple[Event, ...]:
    """Build a bracket-ordered schedule from ``(operator, time)`` pairs."""
    return tuple(p if isinstance(p, Event) else Event(*p) for p in pairs)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Noise operators ``F_ij = sum_k Q_k^(ij) R_k`` and their bath correlations.

    ``terms`` pairs each bath label with a table mapping the dyadic index pair
    ``(i, j)`` to the system operator ``Q^(ij)``. ``bath_corr[(k, l)]`` is the
    rate multiplying ``delta(t - t')`` in ``<R_k(t) R_l(t')>``; missing pairs
    are zero.
    """

    terms: tuple = ()
    bath_corr: Mapping[tuple[str, str], float] = field(default_factory=dict)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.terms]

    def coupling_matrix(self, label: str) -> np.ndarray:
        """``C[(i,j), (i',j')] = Q^(ij)[j', i']``: inserts ``Q`` at a slot."""
        for lab, table in self.terms:
            if lab == label:
                break
        else:
            raise KeyError(f"unknown bath label {label!r}")
        n = next(iter(table.values())).shape[0]
        C = np.zeros((n * n, n * n), dtype=complex)
        for (i, j), Q in table.items():
            C[i * n + j] = operator_weights(Q)
        return C


@dataclass(frozen=True, eq=False)
class SlotTensor:
    dim: int
    slots: tuple[int, ...]
    data: np.ndarray
    frontier: float = 0.0

    @property
    def k(self) -> int:
        return len(self.slots)


def initial_object(rho, K: int, frontier: float = 0.0) -> SlotTensor:
    """Equal-time expectation ``<(|j_1><i_1|) ... (|j_K><i_K|)>`` under ``rho``.

    The dyadic chain collapses to ``delta(i_1, j_2) ... delta(i_{K-1}, j_K)
    |j_1><i_K|``, whose expectation is ``rho[i_K, j_1]``.
    """
    if K < 0:
        raise ValueError(f"slot count must be >= 0, got {K}")
    rho = np.asarray(rho, dtype=complex)
    n = rho.shape[0]
    if K == 0:
        return SlotTensor(n, (), np.array(np.trace(rho)), frontier)
    letters = iter("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")
    idx = [(next(letters), next(letters)) for _ in range(K)]
    operands = [rho]
    subs = [idx[-1][0] + idx[0][1]]
    eye = np.eye(n)
    for r in range(K - 1):
        operands.append(eye)
        subs.append(idx[r][0] + idx[r + 1][1])
    out = "".join(i + j for i, j in idx)
    X = np.einsum(",".join(subs) + "->" + out, *operands)
    return SlotTensor(n, tuple(range(K)), X.reshape((n * n,) * K), frontier)


def contract(X: SlotTensor, slot: int, op) -> SlotTensor:
    """Insert ``op = sum_ij op[j, i] |j><i|`` at ``slot`` and drop that axis."""
    if slot not in X.slots:
        raise IndexError(f"slot {slot} is not active (active: {X.slots})")
    op = as_operator(op)
    if op.shape[0] != X.dim:
        raise DimensionError(f"operator dim {op.shape[0]} vs tensor dim {X.dim}")
    axis = X.slots.index(slot)
    data = np.tensordot(X.data, operator_weights(op), axes=([axis], [0]))
    slots = X.slots[:axis] + X.slots[axis + 1:]
    return SlotTensor(X.dim, slots, data, X.frontier)


def pair_noise_coupling(model: NoiseModel, left_slot: int, right_slot: int) -> np.ndarray:
    """Rate matrix on the joint space of two slots from the quadratic noise term.

    Returns ``sum_{k,l} bath_corr[k, l] C_k (x) C_l`` with the left slot's bath
    operator standing left of the right slot's in the two-point correlation.
    """
    if left_slot >= right_slot:
        raise ValueError(f"slots out of bracket order: {left_slot} >= {right_slot}")
    for k, l in model.bath_corr:
        if k not in model.labels or l not in model.labels:
            raise KeyError(f"bath correlation refers to unknown labels {(k, l)}")
    if not model.terms:
        return np.zeros((0, 0), dtype=complex)
    mats = {label: model.coupling_matrix(label) for label in model.labels}
    d = next(iter(mats.values())).shape[0]
    out = np.zeros((d * d, d * d), dtype=complex)
    for (k, l), rate in model.bath_corr.items():
        if rate:
            out += rate * np.kron(mats[k], mats[l])
    return out


def _embed(op: np.ndarray, axes: Sequence[int], k: int, d: int) -> np.ndarray:
    """Full (d^k x d^k) matrix of ``op`` acting on the given tensor axes."""
    m = len(axes)
    op_t = op.reshape((d,) * (2 * m))
    basis = np.eye(d**k, dtype=complex).reshape((d**k,) + (d,) * k)
    tensor_axes = [a + 1 for a in axes]
    out = np.tensordot(basis, op_t, axes=(tensor_axes, list(range(m, 2 * m))))
    # tensordot appends the op output axes at the end; move them back in place
    out = np.moveaxis(out, list(range(out.ndim - m, out.ndim)), tensor_axes)
    return out.reshape(d**k, d**k).T


def segment_generator(
    L: Liouvillian,
    model: NoiseModel,
    k: int,
    include_noise: bool = True,
    runs: Sequence[int] | None = None,
) -> np.ndarray:
    """Generator on ``k`` active slots.

    ``sum_r M_r`` plus pairwise noise couplings. With ``include_noise`` false,
    couplings are kept only inside a *run*: slots with no already-applied
    operator between them. Such slots stand for one dyadic product and their
    coupling is just the product rule, not a noise contribution. ``runs`` gives
    a run id per slot; by default every slot is its own run.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    M = np.asarray(L.matrix)
    d = M.shape[0]
    if k == 0:
        return np.zeros((1, 1), dtype=complex)
    if runs is None:
        runs = list(range(k))
    if len(runs) != k:
        raise ValueError("runs must have one entry per slot")
    G = np.zeros((d**k, d**k), dtype=complex)
    for r in range(k):
        G += _embed(M, [r], k, d)
    if k >= 2 and model.terms:
        P = pair_noise_coupling(model, 0, 1)
        if P.shape[0] != d * d:
            raise DimensionError("noise tables and Liouvillian disagree on dimension")
        for r, s in itertools.combinations(range(k), 2):
            if include_noise or runs[r] == runs[s]:
                G += _embed(P, [r, s], k, d)
    return G


class Engine:
    """Evaluates correlations for one (Liouvillian, noise model) pair.

    Caches the steady state and the propagators of every slot configuration it
    meets, so repeated evaluations (grid scans) stay cheap.
    """

    def __init__(self, L: Liouvillian, model: NoiseModel | None = None):
        self.L = L
        self.model = model if model is not None else NoiseModel()
        self._rho_ss = None
        self._props: dict = {}

    @property
    def rho_ss(self) -> np.ndarray:
        if self._rho_ss is None:
            self._rho_ss = steady_state(self.L)
        return self._rho_ss

    def propagator(self, k: int, runs: tuple[int, ...], include_noise: bool) -> Propagator:
        if include_noise:
            runs = tuple(range(k))
        key = (k, runs, include_noise)
        prop = self._props.get(key)
        if prop is None:
            G = segment_generator(self.L, self.model, k, include_noise, runs)
            prop = self._props[key] = Propagator(G)
        return prop

    def correlation(self, events: Sequence[Event], rho0="steady", include_noise=True) -> complex:
        """``<O_1(t_1) ... O_K(t_K)>`` for a bracket-ordered list of events."""
        events = schedule(*events)
        if not events:
            raise ValueError("empty schedule")
        rho = self.rho_ss if isinstance(rho0, str) and rho0 == "steady" else np.asarray(rho0)
        K = len(events)
        times = sorted({e.time for e in events})
        X = initial_object(rho, K, times[0])
        d = X.dim
        data = X.data
        active = list(range(K))
        applied = [False] * K
        frontier = times[0]
        for t in times:
            gap = t - frontier
            if gap > 0 and active:
                runs = _runs(active, applied)
                prop = self.propagator(len(active), runs, include_noise)
                data = prop.apply(data.reshape(-1), gap).reshape((d * d,) * len(active))
            for pos, ev in enumerate(events):
                if ev.time == t:
                    axis = active.index(pos)
                    data = np.tensordot(data, operator_weights(ev.op), axes=([axis], [0]))
                    active.pop(axis)
                    applied[pos] = True
            frontier = t
        return complex(data)

    def two_time(self, A, B, taus, rho0="steady", C=None) -> np.ndarray:
        """``<A(t) B(t + tau) C(t)>`` via ``rho_A(t + tau)`` propagated under ``M``.

        ``C`` defaults to the identity, giving the plain two-time function
        ``<A(t) B(t + tau)>``.
        """
        taus = np.asarray(taus, dtype=float)
        if np.any(taus < 0):
            raise ValueError("tau values must be non-negative")
        if np.any(np.diff(taus) < 0):
            raise ValueError("tau values must be ascending")
        rho = self.rho_ss if isinstance(rho0, str) and rho0 == "steady" else np.asarray(rho0)
        A = as_operator(A)
        B = as_operator(B)
        C = np.eye(A.shape[0]) if C is None else as_operator(C)
        # rho_A[i, j] = <A |j><i| C> = <i| C rho A |j>
        x = (C @ rho @ A).reshape(-1)
        prop = self.propagator(1, (0,), False)
        w = operator_weights(B)
        out = np.empty(taus.size, dtype=complex)
        prev = 0.0
        for n, tau in enumerate(taus):
            x = prop.apply(x, tau - prev)
            prev = tau
            out[n] = w @ x
        return out


def _runs(active: list[int], applied: list[bool]) -> tuple[int, ...]:
    run = 0
    out = []
    for n, pos in enumerate(active):
        if n and any(applied[active[n - 1] + 1:pos]):
            run += 1
        out.append(run)
    return tuple(out)


def correlation(events, L: Liouvillian, model: NoiseModel | None = None, rho0="steady",
                include_noise: bool = True) -> complex:
    return Engine(L, model).correlation(events, rho0, include_noise)


def two_time(L: Liouvillian, A, B, rho0, taus, C=None) -> np.ndarray:
    return Engine(L).two_time(A, B, taus, rho0, C)


def realize(z: complex, tol: float = IMAG_TOL) -> float:
    """Real part of ``z``; raises if the imaginary residue exceeds ``tol``."""
    if abs(z.imag) > tol:
        raise ArithmeticError(f"expected a real value, imaginary part {z.imag:.3e}")
    return z.real
