"""Secondary Bjerknes force between a pulsating source and a small responder.

The source is a monopole at the origin radiating ``P = (A/d) cos(omega (t - d/c))``.
The responder sits at distance ``d`` on the +x axis with volume
``V(t) = V0 + dV cos(omega t + psi_eff)``.  The force is the literal ``V grad(P)``
evaluated at the responder centre; "radial" means along +x (away from the
source), so a negative mean radial force pulls the bodies together.

Phase modes
-----------
``aligned``  responder locked to the arriving wave: ``psi_eff = psi - omega d / c``
``offset``   fixed global phase: ``psi_eff = psi``
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .analytic_fields import FluidParams, MonopoleField

MIN_STEPS = 256
MIN_FIT_POINTS = 8


class MixedSignError(ValueError):
    """Force samples change sign, so no single power law applies."""

    def __init__(self, message, sign_changes):
        super().__init__(message)
        self.sign_changes = sign_changes


@dataclass(frozen=True)
class PulsatorPair:
    source_amplitude: float = 1.0
    omega: float = 1.0
    V0: float = 1.0
    dV: float = 1.0
    phase_mode: str = "aligned"
    psi: float = 0.0
    separation: float = 1.0

    def __post_init__(self):
        if self.phase_mode not in ("aligned", "offset"):
            raise ValueError(f"phase_mode must be 'aligned' or 'offset', got {self.phase_mode!r}")
        if not self.separation > 0:
            raise ZeroDivisionError("separation must be positive")
        if not self.dV >= 0:
            raise ValueError("dV must be non-negative")

    def at(self, d: float) -> "PulsatorPair":
        return replace(self, separation=float(d))

    def effective_phase(self, params: FluidParams) -> float:
        if self.phase_mode == "aligned":
            return self.psi - self.omega * self.separation / params.c
        return self.psi

    def wavelength(self, params: FluidParams) -> float:
        return 2.0 * math.pi * params.c / self.omega


def _source(pair: PulsatorPair, params: FluidParams) -> MonopoleField:
    return MonopoleField(pair.source_amplitude, pair.omega, (0.0, 0.0, 0.0), params)


def responder_volume(pair: PulsatorPair, t, params: FluidParams):
    return pair.V0 + pair.dV * np.cos(pair.omega * np.asarray(t, dtype=float)
                                      + pair.effective_phase(params))


def instantaneous_force(pair: PulsatorPair, t, params: FluidParams | None = None) -> np.ndarray:
    """``V(t) grad(P)`` at the responder; shape ``t.shape + (3,)``."""
    params = params or FluidParams()
    t = np.asarray(t, dtype=float)
    d = pair.separation
    gradp = _source(pair, params).gradient(d, 0.0, 0.0, t)
    return responder_volume(pair, t, params)[..., None] * gradp


def mean_force(pair: PulsatorPair, params: FluidParams | None = None, steps: int = 512) -> float:
    """Period-averaged radial force by the rectangle rule on ``steps`` samples."""
    if steps < MIN_STEPS:
        raise ValueError(f"need at least {MIN_STEPS} time steps, got {steps}")
    params = params or FluidParams()
    period = 2.0 * math.pi / pair.omega
    t = period * np.arange(steps) / steps
    return float(np.mean(instantaneous_force(pair, t, params)[:, 0]))


def mean_force_closed_form(pair: PulsatorPair, params: FluidParams | None = None) -> float:
    """Mean radial force ``-(dV A / 2 d^2) [cos(a) + kd sin(a)]``, ``a = kd + psi_eff``.

    In the aligned mode ``a = psi``, so at ``psi = 0`` this is ``-dV A / (2 d^2)``.
    """
    params = params or FluidParams()
    d = pair.separation
    kd = pair.omega * d / params.c
    a = kd + pair.effective_phase(params)
    return -(pair.dV * pair.source_amplitude / (2.0 * d * d)) * (math.cos(a) + kd * math.sin(a))


@dataclass
class ForceSweep:
    distances: np.ndarray
    forces: np.ndarray
    exponent: float | None = None
    residual: float | None = None
    mode: str = "aligned"

    def __post_init__(self):
        d = np.asarray(self.distances, dtype=float)
        if np.any(np.diff(d) <= 0):
            raise ValueError("distances must be strictly increasing")

    def summary(self) -> dict:
        d = np.asarray(self.distances)
        return {"mode": self.mode, "exponent": self.exponent, "residual": self.residual,
                "window": [float(d[0]), float(d[-1])], "points": int(d.size)}


def sign_changes(values) -> list:
    s = np.sign(np.asarray(values, dtype=float))
    return [int(i) for i in np.nonzero(s[1:] != s[:-1])[0]]


def fit_power_law(points: Sequence) -> tuple:
    """OLS slope of ``log|F|`` against ``log d``; returns ``(exponent, rms_residual)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (d, F) pairs")
    if len(pts) < MIN_FIT_POINTS:
        raise ValueError(f"power-law fit needs at least {MIN_FIT_POINTS} points, got {len(pts)}")
    d, f = pts[:, 0], pts[:, 1]
    if np.any(d <= 0):
        raise ValueError("distances must be positive")
    if np.any(f == 0):
        raise MixedSignError("force vanishes at a sample; restrict the window", [])
    changes = sign_changes(f)
    if changes:
        where = ", ".join(f"between d={d[i]:.6g} and d={d[i + 1]:.6g}" for i in changes)
        raise MixedSignError(f"force changes sign {len(changes)} time(s): {where}", changes)
    x, y = np.log(d), np.log(np.abs(f))
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    return float(slope), float(np.sqrt(np.mean(resid * resid)))


def sweep_forces(template: PulsatorPair, distances, params: FluidParams | None = None,
                 steps: int = 512) -> np.ndarray:
    return np.array([mean_force(template.at(d), params, steps) for d in distances])


def force_distance_sweep(template: PulsatorPair, distances, params: FluidParams | None = None,
                         steps: int = 512) -> ForceSweep:
    """Mean force at each distance plus a power-law fit.

    Needs at least 16 distances spanning 1.5 decades; raises
    :class:`MixedSignError` if the window straddles a sign change.
    """
    d = np.asarray(distances, dtype=float)
    if d.size < 16:
        raise ValueError(f"sweep needs at least 16 distances, got {d.size}")
    if np.log10(d[-1] / d[0]) < 1.5 - 1e-12:
        raise ValueError("sweep must span at least 1.5 decades")
    f = sweep_forces(template, d, params, steps)
    sweep = ForceSweep(d, f, mode=template.phase_mode)
    sweep.exponent, sweep.residual = fit_power_law(np.column_stack([d, f]))
    return sweep


def classify(force: float, reference: float) -> str:
    """'same' if ``force`` shares the sign of the psi=0 aligned reference, else 'opposite'."""
    return "same" if np.sign(force) == np.sign(reference) else "opposite"
