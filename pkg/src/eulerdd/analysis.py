"""Decay-curve fitting and coherence normalization.

The model is value(t) = baseline + contrast * exp(-(t/T)^p) with the
stretching exponent p fixed to 1 (exponential) or 2 (Gaussian).  Two
modes are supported: "free" treats baseline and contrast as linear
parameters profiled out at each trial T (variable projection), and
"fixed" pins them to the ideal projective-readout values 0.5 + 0.5,
appropriate when the curve is known to relax from 1 to the fully
mixed value 1/2.

The decay time is found by a coarse geometric grid scan followed by
damped Gauss-Newton refinement of the profiled weighted residual,
which is robust to the strong nonlinearity in T and needs no starting
guess.  Points are weighted by 1/stderr^2 unless any stderr is zero,
in which case unit weights are used throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoDecay",
    "Degenerate",
    "RangeViolation",
    "FitResult",
    "fit_decay",
    "normalize_coherence",
]

# Fitted T beyond this multiple of the sampled span is indistinguishable
# from no decay at all.
_NO_DECAY_FACTOR = 1e3


class NoDecay(RuntimeError):
    """The fitted decay time exceeds 1e3 times the sampled time span."""


class Degenerate(ValueError):
    """The curve carries no decay information (constant or too short)."""


class RangeViolation(ValueError):
    """A fidelity lies below the coherence floor and cannot be normalized."""


@dataclass(frozen=True)
class FitResult:
    """Best-fit decay parameters.

    covariance_T is the variance estimate of T from the curvature of
    the profiled chi-square at the minimum (scaled by the reduced
    chi-square when unit weights were used); r_squared is the weighted
    coefficient of determination, clamped to [0, 1].
    """

    T: float
    p: int
    baseline: float
    contrast: float
    r_squared: float
    covariance_T: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError("r_squared must lie in [0, 1]")
        if self.T <= 0:
            raise ValueError("T must be positive")

    def to_text(self) -> str:
        """Key-value summary lines, ready for CLI output."""
        return ("\n".join([
            f"fit_T = {self.T!r}",
            f"fit_p = {self.p}",
            f"fit_baseline = {self.baseline!r}",
            f"fit_contrast = {self.contrast!r}",
            f"fit_r_squared = {self.r_squared!r}",
            f"fit_covariance_T = {self.covariance_T!r}",
        ]) + "\n")


def _profiled_chi2(t: np.ndarray, v: np.ndarray, w: np.ndarray, p: int,
                   model: str, trial_T: float) -> tuple[float, float, float]:
    """Weighted residual at trial_T with linear parameters solved or fixed.

    Returns (chi2, baseline, contrast).
    """
    e = np.exp(-((t / trial_T) ** p))
    if model == "fixed":
        base, con = 0.5, 0.5
    else:
        sw = np.sqrt(w)
        design = np.stack([sw, sw * e], axis=1)
        sol, *_ = np.linalg.lstsq(design, sw * v, rcond=None)
        base, con = float(sol[0]), float(sol[1])
    r = v - (base + con * e)
    return float(np.sum(w * r * r)), base, con


def fit_decay(curve, p: int = 1, model: str = "free") -> FitResult:
    """Fit value(t) = baseline + contrast exp(-(t/T)^p) to a decay curve.

    curve provides t, value and stderr arrays (a DecayCurve or
    anything shaped like one).  Raises Degenerate for constant or
    too-short curves and NoDecay when the best T runs off to more
    than 1e3 times the sampled span.
    """
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    if model not in ("free", "fixed"):
        raise ValueError('model must be "free" or "fixed"')
    t = np.asarray(curve.t, dtype=float)
    v = np.asarray(curve.value, dtype=float)
    err = np.asarray(curve.stderr, dtype=float)
    if t.size < 4:
        raise Degenerate(f"need at least 4 points, got {t.size}")
    if not np.all(np.isfinite(v)):
        raise ValueError("curve values must be finite")
    if float(np.max(v) - np.min(v)) <= 1e-12 * max(1.0, float(np.max(np.abs(v)))):
        raise Degenerate("curve is constant")
    span = float(t[-1] - t[0])
    if span <= 0:
        raise Degenerate("curve spans zero time")
    unit_weights = bool(np.any(err == 0.0))
    w = np.ones_like(err) if unit_weights else 1.0 / (err * err)

    def chi2(trial_T: float) -> float:
        return _profiled_chi2(t, v, w, p, model, trial_T)[0]

    grid = np.geomspace(span * 1e-3, span * 2.0 * _NO_DECAY_FACTOR, 241)
    values = np.array([chi2(x) for x in grid])
    k = int(np.argmin(values))
    if k == values.size - 1:
        raise NoDecay(f"best decay time beyond {_NO_DECAY_FACTOR:g} x span")

    # Damped Gauss-Newton on T, re-solving the linear parameters at each
    # step (variable projection); converged when the relative step < 1e-8.
    best_T = float(grid[k])
    for _ in range(200):
        chi_here, base, con = _profiled_chi2(t, v, w, p, model, best_T)
        u = (t / best_T) ** p
        e = np.exp(-u)
        jac = con * e * p * u / best_T
        den = float(np.sum(w * jac * jac))
        if den <= 0.0:
            break
        step = float(np.sum(w * jac * (v - (base + con * e)))) / den
        # Damping: keep T within a factor 2 per step and positive.
        new_T = min(max(best_T + step, 0.5 * best_T), 2.0 * best_T)
        if chi2(new_T) > chi_here:
            new_T = 0.5 * (best_T + new_T)
            if chi2(new_T) > chi_here:
                break
        done = abs(new_T - best_T) < 1e-8 * best_T
        best_T = new_T
        if done:
            break
    if best_T > _NO_DECAY_FACTOR * span:
        raise NoDecay(f"fitted T = {best_T:.3e} beyond "
                      f"{_NO_DECAY_FACTOR:g} x span = {span:.3e}")
    chi_min, base, con = _profiled_chi2(t, v, w, p, model, best_T)

    vbar = float(np.sum(w * v) / np.sum(w))
    ss_tot = float(np.sum(w * (v - vbar) ** 2))
    r2 = 1.0 - chi_min / ss_tot if ss_tot > 0 else 0.0
    r2 = min(1.0, max(0.0, r2))

    # Variance of T from the curvature of the profiled chi-square.
    h = 1e-4 * best_T
    curv = (chi2(best_T + h) - 2.0 * chi_min + chi2(best_T - h)) / (h * h)
    n_free = 3 if model == "free" else 1  # T plus any profiled linear params
    dof = max(t.size - n_free, 1)
    scale = chi_min / dof if unit_weights else 1.0
    cov = 2.0 * scale / curv if curv > 0 else math.inf

    return FitResult(T=best_T, p=p, baseline=base, contrast=con,
                     r_squared=r2, covariance_T=cov)


def normalize_coherence(curve):
    """Map readout fidelities to coherences via C = 2 F - 1.

    stderr scales by the same factor of 2.  Raises RangeViolation if
    any fidelity lies below 0.45: values that far under the mixed
    level 0.5 signal a calibration or readout error, not coherence.
    """
    from .engine import CurvePoint, DecayCurve

    for pt in curve.points:
        if pt.value < 0.45:
            raise RangeViolation(
                f"fidelity {pt.value!r} at t = {pt.t!r} below the 0.45 floor")
    pts = tuple(CurvePoint(pt.t, pt.N, max(0.0, 2.0 * pt.value - 1.0),
                           2.0 * pt.stderr) for pt in curve.points)
    return DecayCurve(pts)
