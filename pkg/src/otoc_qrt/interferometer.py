"""Delay interferometer in front of two photon counters.

The emitter field ``a_1`` enters beamsplitter 1, one arm is longer by a delay
``T`` and beamsplitter 2 recombines the arms onto detectors A and B. Keeping only
the emitter input (the vacuum port is dropped),

    a_A(t) =  t1 t2 a_1(t) + r1 r2 a_1(t - T)
    a_B(t) = -t1 r2 a_1(t) + r1 t2 a_1(t - T)

and ``a_1 -> sqrt(gamma) sigma_-`` turns the detector ``G2`` into 16 four-time
emitter correlations ``<s+(.) s+(.) s-(.) s-(.)>``.
"""
from __future__ import annotations

import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .emitter import EmitterParams, SIGMA_MINUS, SIGMA_PLUS, liouvillian, noise_model
from .qrt import Engine, realize

UNITARITY_TOL = 1e-12
G2_IMAG_TOL = 1e-8
DETECTORS = ("A", "B")


class Ordering(enum.Enum):
    NORMAL = "NormalOrdered"
    OUT_OF_TIME = "OutOfTimeOrdered"


@dataclass(frozen=True)
class InterferometerParams:
    t1: float = 1 / math.sqrt(2)
    r1: float = 1 / math.sqrt(2)
    t2: float = 1 / math.sqrt(2)
    r2: float = 1 / math.sqrt(2)
    T: float = 0.0

    def __post_init__(self):
        for name in ("t1", "r1", "t2", "r2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        for t, r, k in ((self.t1, self.r1, 1), (self.t2, self.r2, 2)):
            if abs(t * t + r * r - 1) > UNITARITY_TOL:
                raise ValueError(f"beamsplitter {k} is lossy: t{k}^2 + r{k}^2 = {t * t + r * r}")
        if not (math.isfinite(self.T) and self.T >= 0):
            raise ValueError(f"delay T must be finite and >= 0, got {self.T}")

    @classmethod
    def from_transmissions(cls, t1: float, t2: float, T: float = 0.0):
        return cls(t1, math.sqrt(1 - t1 * t1), t2, math.sqrt(1 - t2 * t2), T)

    def with_delay(self, T: float) -> "InterferometerParams":
        return InterferometerParams(self.t1, self.r1, self.t2, self.r2, T)


@dataclass(frozen=True)
class G2Term:
    coeff: float
    times: tuple[float, float, float, float]
    ordering: Ordering


@dataclass(frozen=True)
class G2Result:
    tau: float
    T: float
    raw: float
    raw_no_noise: float
    normalized: float


def detector_expansion(detector: str, p: InterferometerParams) -> list[tuple[float, float]]:
    """``(amplitude, delay)`` components of ``a_1`` in the detector field."""
    if detector == "A":
        return [(p.t1 * p.t2, 0.0), (p.r1 * p.r2, p.T)]
    if detector == "B":
        return [(-p.t1 * p.r2, 0.0), (p.r1 * p.t2, p.T)]
    raise ValueError(f"unknown detector {detector!r}; expected 'A' or 'B'")


def is_unimodal(times: Sequence[float]) -> bool:
    """Non-decreasing up to a peak, non-increasing after it.

    Exactly the bracket time patterns that a single sandwiched regression
    object can evaluate; anything else needs several simultaneous slots.
    """
    n = len(times)
    k = 0
    while k + 1 < n and times[k] <= times[k + 1]:
        k += 1
    while k + 1 < n and times[k] >= times[k + 1]:
        k += 1
    return k == n - 1


def classify_term(times: Sequence[float]) -> Ordering:
    """Photodetection (Glauber) normal order of a ``s+ s+ s- s-`` time tuple.

    Normal order means the detection form ``<a+(t1) a+(t2) a(t2) a(t1)>`` with
    ``t1 <= t2``: mirrored times that increase toward the middle.
    """
    t1, t2, t3, t4 = times
    if t1 == t4 and t2 == t3 and t1 <= t2:
        return Ordering.NORMAL
    return Ordering.OUT_OF_TIME


def g2_terms(detector: str, p: InterferometerParams, tau: float) -> list[G2Term]:
    """The 16 constituents of ``<a_d+(t) a_d+(t+tau) a_d(t+tau) a_d(t)>`` at ``t = 0``."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    comps = detector_expansion(detector, p)
    terms = []
    for (ca, da), (cb, db), (cc, dc), (cd, dd) in itertools.product(comps, repeat=4):
        times = (-da, tau - db, tau - dc, -dd)
        terms.append(G2Term(ca * cb * cc * cd, times, classify_term(times)))
    return terms


def _shifted(times):
    t0 = min(times)
    return tuple(t - t0 for t in times)


class G2Calculator:
    """Detector ``G2`` for one emitter, reusing one regression engine."""

    def __init__(self, emitter: EmitterParams):
        self.emitter = emitter
        self.engine = Engine(liouvillian(emitter), noise_model(emitter))
        self._flux: dict = {}

    def term_value(self, term: G2Term, include_noise: bool = True) -> complex:
        ops = (SIGMA_PLUS, SIGMA_PLUS, SIGMA_MINUS, SIGMA_MINUS)
        events = list(zip(ops, _shifted(term.times)))
        return self.engine.correlation(events, "steady", include_noise)

    def _sum(self, terms, include_noise):
        total = sum(t.coeff * self.term_value(t, include_noise) for t in terms if t.coeff)
        return self.emitter.gamma**2 * complex(total)

    def raw_complex(self, detector: str, p: InterferometerParams, tau: float,
                    include_noise: bool = True) -> complex:
        """Unrealized ``G2`` sum (units gamma^2), imaginary residue included."""
        return self._sum(g2_terms(detector, p, tau), include_noise)

    def flux(self, detector: str, p: InterferometerParams) -> float:
        """Steady photon flux ``<a_d+ a_d>`` at the detector (same field model)."""
        key = (detector, p)
        if key not in self._flux:
            comps = detector_expansion(detector, p)
            total = 0j
            for (ca, da), (cb, db) in itertools.product(comps, repeat=2):
                events = list(zip((SIGMA_PLUS, SIGMA_MINUS), _shifted((-da, -db))))
                total += ca * cb * self.engine.correlation(events, "steady", False)
            self._flux[key] = realize(self.emitter.gamma * total)
        return self._flux[key]

    def g2(self, detector: str, p: InterferometerParams, tau: float,
           include_noise: bool = True, compute_no_noise: bool = True) -> G2Result:
        terms = g2_terms(detector, p, tau)
        raw = _real(self._sum(terms, include_noise)) if include_noise else math.nan
        no_noise = _real(self._sum(terms, False)) if compute_no_noise or not include_noise else math.nan
        value = raw if include_noise else no_noise
        f = self.flux(detector, p)
        normalized = value / f**2 if f > 0 else math.nan
        return G2Result(tau, p.T, raw, no_noise, normalized)

    def difference(self, p: InterferometerParams, tau: float, include_noise=True) -> float:
        """``G2_A - G2_B`` at identical parameters."""
        a = self._sum(g2_terms("A", p, tau), include_noise)
        b = self._sum(g2_terms("B", p, tau), include_noise)
        return _real(a - b)


def _real(z: complex) -> float:
    return realize(z, G2_IMAG_TOL)


def g2(detector: str, emitter: EmitterParams, p: InterferometerParams, tau: float,
       include_noise: bool = True) -> G2Result:
    return G2Calculator(emitter).g2(detector, p, tau, include_noise)


def g2_difference(emitter: EmitterParams, p: InterferometerParams, tau: float,
                  T: float | None = None) -> float:
    if T is not None:
        p = p.with_delay(T)
    return G2Calculator(emitter).difference(p, tau)


def _check_grid(grid, name):
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} grid must be ascending and non-negative")
    return grid


def g2_scan(detector: str, emitter: EmitterParams, p: InterferometerParams,
            taus, Ts, include_noise: bool = True, threads: int = 1,
            calculator: G2Calculator | None = None) -> list[G2Result]:
    """``G2`` on the ``T x tau`` grid, rows in T-major order.

    ``detector`` may also be ``"A-B"``; then ``raw``/``raw_no_noise`` hold the
    difference of the two detectors and ``normalized`` is NaN.
    """
    taus = _check_grid(taus, "tau")
    Ts = _check_grid(Ts, "T")
    calc = calculator or G2Calculator(emitter)
    points = [(float(T), float(tau)) for T in Ts for tau in taus]

    def one(point):
        T, tau = point
        q = p.with_delay(T)
        if detector in ("A-B", "A-minus-B"):
            raw = calc.difference(q, tau, True) if include_noise else math.nan
            nn = calc.difference(q, tau, False)
            return G2Result(tau, T, raw, nn, math.nan)
        return calc.g2(detector, q, tau, include_noise)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, points))
    return [one(pt) for pt in points]
