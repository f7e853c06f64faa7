"""Temporal mode functions: unit-norm weights f(t) that turn a continuous
quadrature record into discrete single-mode values.

A mode is defined on a finite support [0, duration]. Three parametric
families are provided (square, one-sided exponential, symmetric two-sided
exponential) plus tabulated samples. All modes satisfy the norm contract
integral f(t)^2 dt = 1; discretized weights are renormalized to unit
Euclidean norm so a white unit-variance input always yields mode variance
exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

__all__ = ["TemporalMode"]

_KINDS = ("square", "one_sided_exp", "double_exp", "tabulated")


@dataclass(frozen=True)
class TemporalMode:
    """Unit-norm mode function on [0, duration].

    Use the factory constructors (:meth:`square`, :meth:`one_sided_exp`,
    :meth:`double_exp`, :meth:`tabulated`) rather than the raw dataclass
    init; they validate parameters and normalize tabulated samples.
    """

    kind: str
    duration: float
    rate: Optional[float] = None
    samples: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if not (self.duration > 0.0 and np.isfinite(self.duration)):
            raise ValueError("mode duration must be positive and finite")
        if self.kind in ("one_sided_exp", "double_exp"):
            if self.rate is None or not (self.rate > 0.0 and np.isfinite(self.rate)):
                raise ValueError(f"{self.kind} mode requires a positive decay rate")
        if self.kind == "tabulated":
            if not self.samples or len(self.samples) < 1:
                raise ValueError("tabulated mode requires at least one sample")
            arr = np.asarray(self.samples, dtype=float)
            if not np.all(np.isfinite(arr)) or not np.any(arr != 0.0):
                raise ValueError("tabulated mode samples must be finite and not all zero")

    # -- constructors ------------------------------------------------------

    @classmethod
    def square(cls, duration: float) -> "TemporalMode":
        """f(t) = 1/sqrt(T) on [0, T]: the flat integration window."""
        return cls(kind="square", duration=float(duration))

    @classmethod
    def one_sided_exp(cls, rate: float, support: float) -> "TemporalMode":
        """f(t) proportional to exp(-rate*t) on [0, support], rate in 1/s."""
        return cls(kind="one_sided_exp", duration=float(support), rate=float(rate))

    @classmethod
    def double_exp(cls, rate: float, support: float) -> "TemporalMode":
        """f(t) proportional to exp(-rate*|t - support/2|) on [0, support]."""
        return cls(kind="double_exp", duration=float(support), rate=float(rate))

    @classmethod
    def tabulated(cls, samples, duration: float) -> "TemporalMode":
        """Mode given by samples on a uniform midpoint grid over [0, duration].

        Samples are normalized at construction; only the shape matters.
        """
        arr = np.asarray(samples, dtype=float)
        if arr.ndim != 1:
            raise ValueError("tabulated mode samples must be one-dimensional")
        dt = float(duration) / max(arr.size, 1)
        nrm = np.sqrt(np.sum(arr * arr) * dt)
        if not (nrm > 0.0 and np.isfinite(nrm)):
            raise ValueError("tabulated mode samples must be finite and not all zero")
        return cls(kind="tabulated", duration=float(duration),
                   samples=tuple(arr / nrm))

    # -- continuous-time views ---------------------------------------------

    def amplitude(self, t: np.ndarray) -> np.ndarray:
        """Normalized f(t) for t inside [0, duration] (0 outside)."""
        t = np.asarray(t, dtype=float)
        inside = (t >= 0.0) & (t <= self.duration)
        if self.kind == "square":
            f = np.full_like(t, 1.0 / np.sqrt(self.duration))
        elif self.kind == "one_sided_exp":
            a2 = 2.0 * self.rate / (1.0 - np.exp(-2.0 * self.rate * self.duration))
            f = np.sqrt(a2) * np.exp(-self.rate * t)
        elif self.kind == "double_exp":
            tc = self.duration / 2.0
            a2 = self.rate / (1.0 - np.exp(-2.0 * self.rate * tc))
            f = np.sqrt(a2) * np.exp(-self.rate * np.abs(t - tc))
        else:
            arr = np.asarray(self.samples)
            dt = self.duration / arr.size
            idx = np.clip((t / dt).astype(int), 0, arr.size - 1)
            f = arr[idx]
        return np.where(inside, f, 0.0)

    def power_spectrum(self, omega: np.ndarray) -> np.ndarray:
        """|F(Omega)|^2 of the continuous mode, Omega in rad/s.

        Closed forms for the parametric kinds; a direct Fourier sum for
        tabulated modes (cost scales with len(samples) * len(omega)).
        Normalized so (1/2pi) integral |F|^2 dOmega = 1.
        """
        om = np.asarray(omega, dtype=float)
        if self.kind == "square":
            T = self.duration
            return T * np.sinc(om * T / (2.0 * np.pi)) ** 2
        if self.kind == "one_sided_exp":
            r, Ts = self.rate, self.duration
            a2 = 2.0 * r / (1.0 - np.exp(-2.0 * r * Ts))
            e = np.exp(-r * Ts)
            return a2 * (1.0 - 2.0 * e * np.cos(om * Ts) + e * e) / (r * r + om * om)
        if self.kind == "double_exp":
            r = self.rate
            tc = self.duration / 2.0
            a2 = r / (1.0 - np.exp(-2.0 * r * tc))
            e = np.exp(-r * tc)
            num = r - e * (r * np.cos(om * tc) - om * np.sin(om * tc))
            return 4.0 * a2 * num ** 2 / (r * r + om * om) ** 2
        arr = np.asarray(self.samples)
        dt = self.duration / arr.size
        t = (np.arange(arr.size) + 0.5) * dt
        # F(om) = sum f(t_j) exp(i om t_j) dt; |F|^2 is phase-origin free
        ph = np.exp(1j * np.outer(om, t))
        F = (ph @ arr) * dt
        return np.abs(F) ** 2

    # -- discrete weights ----------------------------------------------------

    def n_samples(self, fs: float) -> int:
        """Window length in samples at rate fs (nearest integer, >= 1)."""
        n = int(round(self.duration * fs))
        if n < 1:
            raise ValueError(
                f"mode duration {self.duration} s spans no sample at fs={fs} Hz")
        return n

    def discretize(self, fs: float) -> np.ndarray:
        """Unit-Euclidean-norm weights sampling f at window midpoints.

        The renormalization pins the calibration contract: white input of
        unit variance gives mode variance exactly 1 at any rate.
        """
        n = self.n_samples(fs)
        if self.kind == "tabulated" and len(self.samples) == n:
            w = np.asarray(self.samples, dtype=float)
        else:
            t = (np.arange(n) + 0.5) / fs
            w = self.amplitude(t)
        nrm = np.sqrt(np.sum(w * w))
        if not (nrm > 0.0 and np.isfinite(nrm)):
            raise ValueError("mode discretizes to zero weights at this rate")
        return w / nrm
