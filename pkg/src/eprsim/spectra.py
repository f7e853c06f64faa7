"""Analytic squeezing spectra and filtered-variance integrals.

Sub-threshold OPO quadrature spectra (vacuum normalized to 1), EPR pair
spectra behind a half beam splitter, and the mode-filtered variance
integral that serves as the oracle for every Monte Carlo check:

    V(f) = (1/2pi) integral S(Omega) |F(Omega)|^2 dOmega.

All public frequencies are in Hz; angular frequency appears only inside
integrals and evaluator callables (rad/s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .modes import TemporalMode

__all__ = [
    "OpoParams",
    "QuadPsd",
    "EprSpectra",
    "QuadratureError",
    "opo_spectrum",
    "epr_spectra",
    "flat_psd",
    "filtered_variance",
    "to_db",
    "duan_sum",
    "calibrate_pump_param",
]

TWO_PI = 2.0 * math.pi


class QuadratureError(RuntimeError):
    """Numerical quadrature failed to converge."""


@dataclass(frozen=True)
class OpoParams:
    """Sub-threshold OPO description.

    pump_param is x = sqrt(P/P_threshold) in [0, 1); hwhm the cavity
    half-width at half maximum in Hz; efficiency the total escape x
    detection efficiency in [0, 1]; squeeze_phase names the squeezed
    quadrature, "X" or "P".
    """

    pump_param: float
    hwhm: float
    efficiency: float
    squeeze_phase: str = "X"

    def __post_init__(self):
        if not (0.0 <= self.pump_param < 1.0):
            raise ValueError(
                f"pump_param must lie in [0, 1), got {self.pump_param} "
                "(at or above threshold)")
        if not (self.hwhm > 0.0 and np.isfinite(self.hwhm)):
            raise ValueError("hwhm must be positive and finite")
        if not (0.0 <= self.efficiency <= 1.0):
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        if self.squeeze_phase not in ("X", "P"):
            raise ValueError(f"squeeze_phase must be 'X' or 'P', got {self.squeeze_phase!r}")


@dataclass(frozen=True)
class QuadPsd:
    """Vacuum-normalized quadrature power spectral density.

    evaluator maps angular frequency (rad/s, symmetric in sign) to S;
    beyond band_limit S is treated as exactly 1, which makes the
    filtered-variance tail integral exact. scale_hint, when given, is the
    narrowest spectral feature width (rad/s) and steers quadrature panels.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    band_limit: float
    scale_hint: Optional[float] = None

    def __call__(self, omega) -> np.ndarray:
        om = np.abs(np.asarray(omega, dtype=float))
        s = np.asarray(self.evaluator(om), dtype=float)
        return np.where(om <= self.band_limit, s, 1.0)


@dataclass(frozen=True)
class EprSpectra:
    """PSDs of the normalized EPR combinations (x_A - x_B)/sqrt(2) and
    (p_A + p_B)/sqrt(2)."""

    diff_x: QuadPsd
    sum_p: QuadPsd


def flat_psd() -> QuadPsd:
    """The vacuum spectrum S = 1. band_limit 0 makes integrals exact."""
    return QuadPsd(evaluator=lambda om: np.ones_like(om), band_limit=0.0)


def _lorentz_width(params: OpoParams, anti: bool) -> float:
    x = params.pump_param
    return TWO_PI * params.hwhm * ((1.0 - x) if anti else (1.0 + x))


def opo_spectrum(params: OpoParams, quadrature: str = "squeezed") -> QuadPsd:
    """Quadrature spectrum of one OPO output.

    squeezed:      S(Omega) = 1 - eta*4x / ((1+x)^2 + (Omega/2pi*gamma)^2)
    antisqueezed:  S(Omega) = 1 + eta*4x / ((1-x)^2 + (Omega/2pi*gamma)^2)

    so the squeezed branch is <= 1 everywhere, the antisqueezed >= 1, and
    both tend to 1 far outside the cavity bandwidth.
    """
    if quadrature not in ("squeezed", "antisqueezed"):
        raise ValueError(f"quadrature must be 'squeezed' or 'antisqueezed', got {quadrature!r}")
    x = params.pump_param
    eta = params.efficiency
    g = TWO_PI * params.hwhm  # rad/s
    anti = quadrature == "antisqueezed"
    sgn = 1.0 if anti else -1.0
    denom0 = (1.0 - x) ** 2 if anti else (1.0 + x) ** 2

    def evaluator(om, _sgn=sgn, _d0=denom0, _x=x, _eta=eta, _g=g):
        return 1.0 + _sgn * _eta * 4.0 * _x / (_d0 + (om / _g) ** 2)

    return QuadPsd(evaluator=evaluator, band_limit=100.0 * g,
                   scale_hint=_lorentz_width(params, anti))


def _check_heisenberg(params: OpoParams) -> None:
    # spot check S- * S+ >= 1 on a grid across the band
    sq = opo_spectrum(params, "squeezed")
    anti = opo_spectrum(params, "antisqueezed")
    om = np.linspace(0.0, 100.0 * TWO_PI * params.hwhm, 513)
    prod = sq(om) * anti(om)
    if np.any(prod < 1.0 - 1e-9):
        raise ValueError("OPO spectra violate the uncertainty product on the grid")


def epr_spectra(opo1: OpoParams, opo2: OpoParams) -> EprSpectra:
    """EPR pair spectra from two OPOs combined on a half beam splitter.

    With A = (b1 + b2)/sqrt(2) and B = (b1 - b2)/sqrt(2), the combination
    (x_A - x_B)/sqrt(2) equals the x quadrature of beam 2 and
    (p_A + p_B)/sqrt(2) equals the p quadrature of beam 1. Hence diff_x
    carries the squeezed spectrum of the X-squeezed OPO and sum_p that of
    the P-squeezed OPO. The two OPOs must squeeze orthogonal quadratures.
    """
    phases = (opo1.squeeze_phase, opo2.squeeze_phase)
    if phases[0] == phases[1]:
        raise ValueError(
            "EPR arrangement requires one X-squeezed and one P-squeezed OPO; "
            f"got both squeezed in {phases[0]}")
    _check_heisenberg(opo1)
    _check_heisenberg(opo2)
    x_opo = opo1 if opo1.squeeze_phase == "X" else opo2
    p_opo = opo1 if opo1.squeeze_phase == "P" else opo2
    return EprSpectra(diff_x=opo_spectrum(x_opo, "squeezed"),
                      sum_p=opo_spectrum(p_opo, "squeezed"))


# -- filtered variance --------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_MAX_PANELS = 4_000_000


def _gl_integral(func, lo: float, hi: float, n_panels: int) -> float:
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    centers = edges[:-1] + half
    pts = (centers[:, None] + half * _GL_NODES[None, :]).ravel()
    vals = func(pts).reshape(n_panels, _GL_NODES.size)
    return float(half * np.sum(vals @ _GL_WEIGHTS))


def filtered_variance(psd: QuadPsd, mode: TemporalMode) -> float:
    """Vacuum-normalized variance of the mode-filtered quadrature.

    Evaluates 1 + (1/pi) integral_0^B (S(Omega)-1) |F(Omega)|^2 dOmega,
    which is exact because S = 1 beyond band_limit B and the mode is unit
    norm (Parseval supplies the tail). Composite Gauss-Legendre panels
    sized to resolve both the |F|^2 oscillation (period 2pi/duration) and
    the narrowest PSD feature; convergence is confirmed by panel doubling.
    """
    band = psd.band_limit
    if band <= 0.0:
        return 1.0

    def integrand(om):
        return (psd(om) - 1.0) * mode.power_spectrum(om)

    h = math.pi / (4.0 * mode.duration)
    if psd.scale_hint:
        h = min(h, psd.scale_hint / 4.0)
    n_panels = max(64, min(_MAX_PANELS, math.ceil(band / h)))

    est = 1.0 + _gl_integral(integrand, 0.0, band, n_panels) / math.pi
    for _ in range(2):
        n_panels *= 2
        if n_panels > _MAX_PANELS:
            break
        refined = 1.0 + _gl_integral(integrand, 0.0, band, n_panels) / math.pi
        if abs(refined - est) <= 1e-8 * max(1.0, abs(refined)):
            return refined
        est = refined
    else:
        raise QuadratureError(
            f"filtered variance did not converge within {n_panels} panels")
    raise QuadratureError("filtered variance exceeded the panel budget")


def to_db(ratio: float) -> float:
    """10*log10 of a vacuum-normalized variance ratio."""
    if not (ratio > 0.0):
        raise ValueError(f"dB conversion requires a positive ratio, got {ratio}")
    return 10.0 * math.log10(ratio)


def duan_sum(var_diff_x: float, var_sum_p: float) -> float:
    """Mean of the two normalized EPR variances; < 1 certifies entanglement."""
    if var_diff_x < 0.0 or var_sum_p < 0.0:
        raise ValueError("variances must be non-negative")
    return 0.5 * (var_diff_x + var_sum_p)


def calibrate_pump_param(target_db: float, efficiency: float, hwhm: float,
                         mode: Optional[TemporalMode] = None,
                         bracket: Tuple[float, float] = (1e-9, 0.999)) -> float:
    """Pump parameter x whose squeezed filtered variance hits target_db.

    The filtered squeezed variance is strictly decreasing in x, so a root
    bracket on [~0, 0.999) suffices; raises ValueError when the target is
    deeper than the family can reach at this efficiency.
    """
    if target_db >= 0.0:
        raise ValueError("target_db must be negative (squeezing)")
    if mode is None:
        mode = TemporalMode.square(0.2e-6)

    def objective(x):
        p = OpoParams(pump_param=x, hwhm=hwhm, efficiency=efficiency)
        return to_db(filtered_variance(opo_spectrum(p, "squeezed"), mode)) - target_db

    lo, hi = bracket
    f_hi = objective(hi)
    if f_hi > 0.0:
        raise ValueError(
            f"target {target_db} dB unreachable: deepest available is {f_hi + target_db:.3f} dB")
    return float(brentq(objective, lo, hi, xtol=1e-13, rtol=8.9e-16))
