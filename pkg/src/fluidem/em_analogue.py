"""Electromagnetic analogue fields built from acoustic phase vortices.

Mean momentum density ``pbar`` plays the vector potential, ``B = curl(pbar)``
and ``E = -d(pbar)/dt``.  Sign bookkeeping: the phase ``S = omega t - n theta
- k_z z`` winds by ``-2 pi n`` around the axis, and ``pbar`` is the period
average of ``rho * u`` with ``u`` the literal time integral of
``-(c^2/rho0) grad(rho)``, so ``pbar = -(c^2 / (2 omega rho0)) R^2 grad(S)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import field_calculus as fc
from .analytic_fields import (FluidParams, LineOfForceSpec, ModeField, VortexSpec,
                              omega as dispersion)
from .special_functions import bessel_j


class UndersampledLoopError(ValueError):
    pass


class AmplitudeStarvedError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Phase winding


def _wrapped(d):
    return (d + math.pi) % (2.0 * math.pi) - math.pi


def winding_from_phases(phases) -> float:
    """Total unwrapped increment of a closed sequence of phase samples."""
    ph = np.asarray(phases, dtype=float)
    inc = _wrapped(np.diff(np.append(ph, ph[0])))
    worst = float(np.max(np.abs(inc)))
    if worst > math.pi / 2:
        raise UndersampledLoopError(
            f"adjacent phase jump {worst:.3f} rad exceeds pi/2; add loop nodes")
    return float(np.sum(inc))


def phase_winding(phasefn: Callable, loop: fc.SampledLoop, t: float = 0.0) -> float:
    """Sum of unwrapped phase increments of ``phasefn(x, y, z, t)`` around ``loop``."""
    pts = loop.nodes()
    return winding_from_phases(phasefn(pts[:, 0], pts[:, 1], pts[:, 2], t))


def vortex_phase_fn(spec: VortexSpec, params: FluidParams | None = None):
    params = params or FluidParams()
    w = dispersion(spec, params)

    def phase(x, y, z, t):
        theta = np.mod(np.arctan2(y, x), 2.0 * math.pi)
        return w * t - spec.n * theta - spec.k_z * np.asarray(z, dtype=float)

    return phase


def _scalar_on_loop(f, pts):
    if isinstance(f, fc.GridField):
        return fc.interpolate(f, pts)
    return np.asarray(f(pts[:, 0], pts[:, 1], pts[:, 2]), dtype=float)


def winding_from_snapshots(rho_t0, rho_tq, loop: fc.SampledLoop, amplitude=None) -> float:
    """Winding recovered from two quarter-period separated density snapshots.

    Snapshots are callables ``f(x, y, z)`` or scalar GridFields.  With
    ``rho = R cos(S)`` the later snapshot is ``-R sin(S)``, so the phase is
    ``atan2(-rho_tq, rho_t0)`` up to a constant.
    """
    pts = loop.nodes()
    a = _scalar_on_loop(rho_t0, pts)
    b = -_scalar_on_loop(rho_tq, pts)
    mag = np.hypot(a, b)
    scale = float(np.max(mag)) if amplitude is None else float(amplitude)
    if not scale > 0 or np.min(mag) < 1e-9 * scale:
        raise AmplitudeStarvedError("wave amplitude vanishes on the loop; phase undefined")
    return winding_from_phases(np.arctan2(b, a))


# ---------------------------------------------------------------------------
# Mean momentum density


def mean_momentum_analytic(spec, params: FluidParams, point) -> np.ndarray:
    """``-(c^2/(2 omega rho0)) R^2 grad(S)`` in Cartesian components.

    ``point`` is an array of shape (..., 3).  For a vortex ``R = A J_n(k_r r)``
    and ``grad(S) = -(n/r) theta_hat - k_z z_hat``; for a line of force
    ``R = A J_1(k_r r) cos(theta - theta0)`` and ``grad(S) = -k_z z_hat``.
    """
    pt = np.asarray(point, dtype=float)
    x, y = pt[..., 0], pt[..., 1]
    r = np.hypot(x, y)
    w = dispersion(spec, params)
    pref = -params.c**2 / (2.0 * w * params.rho0)
    out = np.zeros(pt.shape)
    if isinstance(spec, VortexSpec):
        R = spec.amplitude * bessel_j(spec.n, spec.k_r * r)
        safe = np.where(r > 0, r, 1.0)
        # R^2 / r -> 0 on the axis for n != 0, and n = 0 has no azimuthal part
        az = np.where(r > 0, -spec.n * R * R / safe, 0.0)
        out[..., 0] = pref * az * (-y / safe)
        out[..., 1] = pref * az * (x / safe)
        out[..., 2] = pref * R * R * (-spec.k_z)
    elif isinstance(spec, LineOfForceSpec):
        theta = np.arctan2(y, x)
        R = spec.amplitude * bessel_j(1, spec.k_r * r) * np.cos(theta - spec.theta0)
        out[..., 2] = pref * R * R * (-spec.k_z)
    else:
        raise TypeError(f"unsupported spec {type(spec).__name__}")
    return out


def mean_momentum_brute(densityfn: Callable, velocityfn: Callable, params: FluidParams,
                        point, period: float, nsteps: int = 256) -> np.ndarray:
    """Period average of ``(rho0 + drho) * u`` at one point by the rectangle rule.

    The rule is exact for trigonometric polynomials of degree below ``nsteps``.
    """
    if nsteps < 64:
        raise ValueError("nsteps must be >= 64")
    x, y, z = (float(v) for v in point)
    t = period * np.arange(nsteps) / nsteps
    rho = params.rho0 + np.asarray(densityfn(x, y, z, t), dtype=float)
    u = np.asarray(velocityfn(x, y, z, t), dtype=float)
    return np.sum(rho[:, None] * u, axis=0) / nsteps


@dataclass
class MeanMomentumField:
    """Source of ``pbar``: a callable ``f(x, y, z, t)`` or a vector GridField."""

    source: object
    provenance: str = "analytic-eq3"

    def __post_init__(self):
        if self.provenance not in ("analytic-eq3", "brute-force-average"):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @classmethod
    def from_spec(cls, spec, params: FluidParams | None = None):
        params = params or FluidParams()

        def pbar(x, y, z, t=0.0):
            pts = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z))),
                           axis=-1)
            return mean_momentum_analytic(spec, params, pts)

        return cls(pbar, "analytic-eq3")

    @classmethod
    def from_modes(cls, modes: ModeField):
        return cls(modes.mean_momentum, "analytic-eq3")

    def on_grid(self, grid: fc.GridSpec, t: float = 0.0) -> fc.GridField:
        if isinstance(self.source, fc.GridField):
            return self.source
        return fc.sample(self.source, grid, t)

    def __call__(self, x, y, z, t=0.0):
        if isinstance(self.source, fc.GridField):
            pts = np.stack(np.broadcast_arrays(x, y, z), axis=-1)
            return fc.interpolate(self.source, pts)
        return self.source(x, y, z, t)


def _as_momentum(src) -> MeanMomentumField:
    return src if isinstance(src, MeanMomentumField) else MeanMomentumField(src)


def magnetic_field(pbar, grid: fc.GridSpec, t: float = 0.0) -> fc.GridField:
    """Discrete ``curl`` of ``pbar`` sampled on ``grid``."""
    return fc.curl(_as_momentum(pbar).on_grid(grid, t))


def gauss_residual(B: fc.GridField):
    """(max|div B|, scale) where scale = max|B| / h."""
    d = fc.div(B)
    return d.norms()[0], B.norms()[0] / B.spec.h


def electric_field(producer: Callable, grid: fc.GridSpec, t: float, dt: float) -> fc.GridField:
    """``E = -d(pbar)/dt`` by a central difference of sampled ``pbar``."""
    dp = fc.time_derivative(lambda s: fc.sample(producer, grid, s), t, dt)
    return dp.scaled(-1.0)


def faraday_residual(producer: Callable, grid: fc.GridSpec, t: float, dt: float):
    """Interior (max-abs, RMS) of ``curl(E) + dB/dt`` with both taken from ``producer``."""
    E = electric_field(producer, grid, t, dt)
    dB = fc.time_derivative(lambda s: fc.curl(fc.sample(producer, grid, s)), t, dt)
    return (fc.curl(E) + dB).norms()


def flux(field_, region, t: float = 0.0, order: int = 32) -> float:
    """Circulation of ``pbar`` around a SampledLoop, or flux of ``B`` through a Disk."""
    if isinstance(region, fc.SampledLoop):
        return fc.line_integral(field_, region, t)
    if isinstance(region, fc.Disk):
        return fc.surface_integral(field_, region, order, t)
    raise TypeError("region must be a SampledLoop or a Disk")


# ---------------------------------------------------------------------------
# Snapshots


@dataclass
class EmSnapshot:
    B: fc.GridField
    E: fc.GridField
    flux: float
    winding: float
    loop: fc.SampledLoop
    disk: fc.Disk
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.B.spec != self.E.spec or self.B.time_tag != self.E.time_tag:
            raise ValueError("B and E must share one grid and time tag")

    def summary(self) -> dict:
        return {
            "time": self.B.time_tag,
            "winding": self.winding,
            "winding_over_2pi": self.winding / (2.0 * math.pi),
            "flux": self.flux,
            "loop": self.loop.as_dict(),
            "disk": self.disk.as_dict(),
            "B_norms": list(self.B.norms()),
            "E_norms": list(self.E.norms()),
            **self.extras,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def vortex_snapshot(spec: VortexSpec, params: FluidParams, grid: fc.GridSpec, loop_radius: float,
                    t: float = 0.0, dt: float = 1e-3, samples: int = 64) -> EmSnapshot:
    pbar = MeanMomentumField.from_spec(spec, params)
    B = magnetic_field(pbar, grid, t)
    E = electric_field(pbar.source, grid, t, dt)
    # B and E carry different margins; report both on B's valid interior
    E = fc.GridField(E.spec, E.values, B.time_tag, max(E.margin, B.margin))
    loop = fc.SampledLoop(radius=loop_radius, samples=samples)
    disk = fc.Disk(radius=loop_radius)
    winding = phase_winding(vortex_phase_fn(spec, params), loop, t)
    circ = flux(pbar, loop, t)
    div_max, div_scale = gauss_residual(B)
    extras = {"circulation": circ, "flux_disk_gridded": flux(B, disk),
              "div_B_max": div_max, "div_B_scale": div_scale}
    return EmSnapshot(B, E, circ, winding, loop, disk, extras)
