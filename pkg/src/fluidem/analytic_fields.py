"""Closed-form first-order solutions of the acoustic wave equation.

Conventions
-----------
* Right-handed Cartesian frame, vortex axis along z, azimuthal unit vector
  ``(-sin(theta), cos(theta), 0)``.
* A vortex of winding ``n`` has excess density
  ``A * J_n(k_r r) * cos(omega t - n theta - k_z z)`` with
  ``omega = c * sqrt(k_r**2 + k_z**2)``.
* The first-order velocity is the literal time integral
  ``u = -(c**2 / rho0) * integral(grad(rho) dt)`` with zero bulk flow.

Internally every monochromatic field is a finite sum of Bessel modes
``Re[coef * J_m(k_r r) e^{i m theta} e^{i(omega t - k_z z)}]``.  Spatial
derivatives of ``F_m = J_m(k r) e^{i m theta}`` follow from the ladder
identities ``(d_x + i d_y) F_m = -k F_{m+1}`` and ``(d_x - i d_y) F_m = k F_{m-1}``,
which stay regular on the axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .special_functions import bessel_j, bessel_table

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class FluidParams:
    c: float = 1.0
    rho0: float = 1.0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"wave speed must be positive, got {self.c}")
        if not (self.rho0 > 0 and math.isfinite(self.rho0)):
            raise ValueError(f"ambient density must be positive, got {self.rho0}")


def dispersion_omega(k_r: float, k_z: float, params: FluidParams) -> float:
    return params.c * math.hypot(k_r, k_z)


@dataclass(frozen=True)
class VortexSpec:
    """Chiral phase vortex of integer winding ``n``."""

    n: int
    k_r: float
    k_z: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n:
            raise TypeError("winding n must be an integer")
        if not self.k_r > 0:
            raise ValueError(f"k_r must be positive, got {self.k_r}")
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude}")


def omega(spec, params: FluidParams) -> float:
    """Angular frequency from the dispersion relation (never stored)."""
    return dispersion_omega(spec.k_r, spec.k_z, params)


@dataclass(frozen=True)
class LineOfForceSpec:
    """Linearly polarised line of force; ``theta0`` is an axis, kept in [0, pi)."""

    theta0: float
    k_r: float
    k_z: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.k_r > 0:
            raise ValueError(f"k_r must be positive, got {self.k_r}")
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be non-negative, got {self.amplitude}")
        t0 = math.fmod(self.theta0, math.pi)
        if t0 < 0:
            t0 += math.pi
        if t0 >= math.pi:
            t0 = 0.0
        object.__setattr__(self, "theta0", t0)


@dataclass(frozen=True)
class WavepacketSpec:
    """Amplitude-modulated packet: components are ``(k_z, amplitude, phase)`` triples."""

    n: int
    k_r: float
    components: tuple = field(default_factory=tuple)

    def __post_init__(self):
        comps = tuple((float(kz), float(a), float(ph)) for kz, a, ph in self.components)
        if not comps:
            raise ValueError("wavepacket needs at least one component")
        if any(a < 0 for _, a, _ in comps):
            raise ValueError("component amplitudes must be non-negative")
        if not self.k_r > 0:
            raise ValueError(f"k_r must be positive, got {self.k_r}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def gaussian(cls, n, k_r, k_center, sigma, count=9, spacing=None, peak=1.0):
        """Gaussian-weighted packet of ``count`` components centred on ``k_center``."""
        if spacing is None:
            spacing = sigma / 2.0
        offsets = (np.arange(count) - (count - 1) / 2.0) * spacing
        comps = [
            (k_center + dk, peak * math.exp(-0.5 * (dk / sigma) ** 2), 0.0) for dk in offsets
        ]
        return cls(n, k_r, tuple(comps))


def _wrap_angle(theta):
    th = np.mod(theta, TWO_PI)
    return np.where(th >= TWO_PI, 0.0, th)


@dataclass(frozen=True)
class SpacetimePoint:
    """Event in cylindrical coordinates; fields may be broadcastable arrays."""

    r: float
    theta: float
    z: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        if np.any(r < 0):
            raise ValueError("radius must be non-negative")
        th = _wrap_angle(np.asarray(self.theta, dtype=float))
        if np.ndim(th) == 0:
            th = float(th)
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_cartesian(cls, x, y, z=0.0, t=0.0):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.hypot(x, y)
        th = np.arctan2(y, x)
        if r.ndim == 0:
            return cls(float(r), float(th), z, t)
        return cls(r, th, z, t)

    @property
    def x(self):
        return self.r * np.cos(self.theta)

    @property
    def y(self):
        return self.r * np.sin(self.theta)

    def cartesian(self):
        return self.x, self.y, self.z, self.t


# ---------------------------------------------------------------------------
# Bessel mode sums


class ModeField:
    """Finite sum of Bessel modes sharing one radial wavenumber.

    ``modes`` is a sequence of ``(coef, m, k_z)`` with complex ``coef`` and
    integer azimuthal order ``m``.  Each mode carries its own frequency from
    the dispersion relation.  ``amplitude`` and ``omega`` are scales used by
    tolerance checks.
    """

    def __init__(self, k_r: float, modes: Sequence, params: FluidParams | None = None,
                 amplitude: float | None = None, label: str = "modes"):
        self.params = params or FluidParams()
        self.k_r = float(k_r)
        self.modes = [(complex(c), int(m), float(kz)) for c, m, kz in modes]
        self.omegas = [dispersion_omega(self.k_r, kz, self.params) for _, _, kz in self.modes]
        self.label = label
        if amplitude is None:
            amplitude = sum(abs(c) for c, _, _ in self.modes)
        self.amplitude = float(amplitude)
        self.omega = max(self.omegas, default=0.0)

    def _fm(self, x, y):
        """Return a dict m -> F_m(x, y) covering every order the derivatives need."""
        r = np.hypot(x, y)
        theta = np.arctan2(y, x)
        orders = {m + d for _, m, _ in self.modes for d in range(-2, 3)}
        mmax = max(abs(m) for m in orders)
        table = bessel_table(mmax, self.k_r * r)
        out = {}
        for m in orders:
            jm = table[abs(m)]
            if m < 0 and m % 2:
                jm = -jm
            out[m] = jm * np.exp(1j * m * theta)
        return out

    def _carriers(self, z, t):
        return [
            coef * np.exp(1j * (w * t - kz * z))
            for (coef, _, kz), w in zip(self.modes, self.omegas)
        ]

    def _broadcast(self, x, y, z, t):
        return np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z, t)))

    def complex_value(self, x, y, z, t):
        """Analytic signal whose real part is the excess density."""
        x, y, z, t = self._broadcast(x, y, z, t)
        total = np.zeros(x.shape, dtype=complex)
        if not self.modes:
            return total
        fm = self._fm(x, y)
        for g, (_, m, _) in zip(self._carriers(z, t), self.modes):
            total += g * fm[m]
        return total

    def value(self, x, y, z, t):
        return self.complex_value(x, y, z, t).real

    __call__ = value

    def time_evaluator(self, x, y, z):
        """Return ``t -> value(x, y, z, t)`` with the spatial factors precomputed."""
        x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
        if not self.modes:
            return lambda t: np.zeros(x.shape)
        fm = self._fm(x, y)
        spatial = [coef * fm[m] * np.exp(-1j * kz * z) for coef, m, kz in self.modes]

        def at(t):
            total = np.zeros(x.shape, dtype=complex)
            for s, w in zip(spatial, self.omegas):
                total += s * np.exp(1j * w * t)
            return total.real

        return at

    def _complex_gradient(self, x, y, z, t, weight_by_omega=False):
        # spatial gradient of each mode's analytic signal, shape (..., 3)
        x, y, z, t = self._broadcast(x, y, z, t)
        grad = np.zeros(x.shape + (3,), dtype=complex)
        if not self.modes:
            return grad
        k = self.k_r
        fm = self._fm(x, y)
        for g, (_, m, kz), w in zip(self._carriers(z, t), self.modes, self.omegas):
            s = g / w if weight_by_omega else g
            grad[..., 0] += s * 0.5 * k * (fm[m - 1] - fm[m + 1])
            grad[..., 1] += s * 0.5j * k * (fm[m + 1] + fm[m - 1])
            grad[..., 2] += s * (-1j * kz) * fm[m]
        return grad

    def gradient(self, x, y, z, t):
        return self._complex_gradient(x, y, z, t).real

    def complex_spacetime_gradient(self, x, y, z, t):
        """(d_t, d_x, d_y, d_z) of the analytic signal, shape (..., 4)."""
        x, y, z, t = self._broadcast(x, y, z, t)
        out = np.zeros(x.shape + (4,), dtype=complex)
        out[..., 1:] = self._complex_gradient(x, y, z, t)
        if self.modes:
            fm = self._fm(x, y)
            for g, (_, m, _), w in zip(self._carriers(z, t), self.modes, self.omegas):
                out[..., 0] += 1j * w * g * fm[m]
        return out

    def spacetime_gradient(self, x, y, z, t):
        """Derivatives ordered (t, x, y, z); shape (..., 4)."""
        x, y, z, t = self._broadcast(x, y, z, t)
        out = np.zeros(x.shape + (4,))
        if not self.modes:
            return out
        fm = self._fm(x, y)
        k = self.k_r
        for g, (_, m, kz), w in zip(self._carriers(z, t), self.modes, self.omegas):
            f = g * fm[m]
            out[..., 0] += (1j * w * f).real
            out[..., 1] += (g * 0.5 * k * (fm[m - 1] - fm[m + 1])).real
            out[..., 2] += (g * 0.5j * k * (fm[m + 1] + fm[m - 1])).real
            out[..., 3] += (-1j * kz * f).real
        return out

    def spacetime_hessian(self, x, y, z, t):
        """Second derivatives in (t, x, y, z) order; shape (..., 4, 4)."""
        x, y, z, t = self._broadcast(x, y, z, t)
        hess = np.zeros(x.shape + (4, 4))
        if not self.modes:
            return hess
        fm = self._fm(x, y)
        k = self.k_r
        q = 0.25 * k * k
        for g, (_, m, kz), w in zip(self._carriers(z, t), self.modes, self.omegas):
            f0 = fm[m]
            fx = 0.5 * k * (fm[m - 1] - fm[m + 1])
            fy = 0.5j * k * (fm[m + 1] + fm[m - 1])
            fxx = q * (fm[m - 2] - 2.0 * f0 + fm[m + 2])
            fyy = -q * (fm[m + 2] + 2.0 * f0 + fm[m - 2])
            fxy = 1j * q * (fm[m - 2] - fm[m + 2])
            it, iz = 1j * w, -1j * kz
            block = {
                (0, 0): it * it * f0,
                (0, 1): it * fx,
                (0, 2): it * fy,
                (0, 3): it * iz * f0,
                (1, 1): fxx,
                (1, 2): fxy,
                (1, 3): iz * fx,
                (2, 2): fyy,
                (2, 3): iz * fy,
                (3, 3): iz * iz * f0,
            }
            for (a, b), v in block.items():
                val = (g * v).real
                hess[..., a, b] += val
                if a != b:
                    hess[..., b, a] += val
        return hess

    def velocity(self, x, y, z, t):
        """First-order flow velocity ``-(c^2/rho0) * integral(grad rho dt)``."""
        p = self.params
        grad = self._complex_gradient(x, y, z, t, weight_by_omega=True)
        return -(p.c**2 / p.rho0) * grad.imag

    def mean_momentum(self, x, y, z, t=0.0):
        """Cycle-averaged momentum density, fast (sum-frequency) terms dropped."""
        p = self.params
        phi = self.complex_value(x, y, z, t)
        gam = self._complex_gradient(x, y, z, t, weight_by_omega=True)
        return -(p.c**2 / (2.0 * p.rho0)) * (np.conj(phi)[..., None] * gam).imag


def vortex_modes(spec: VortexSpec, params: FluidParams | None = None, phase_offset=0.0) -> ModeField:
    # J_n e^{-i n theta} = (-1)^n F_{-n}
    coef = spec.amplitude * (-1) ** (spec.n % 2) * np.exp(1j * phase_offset)
    return ModeField(spec.k_r, [(coef, -spec.n, spec.k_z)], params,
                     amplitude=spec.amplitude, label=f"vortex(n={spec.n})")


def line_of_force_modes(spec: LineOfForceSpec, params: FluidParams | None = None) -> ModeField:
    # J_1 cos(theta - theta0) = (e^{-i theta0} F_1 - e^{i theta0} F_{-1}) / 2
    a = 0.5 * spec.amplitude
    modes = [
        (a * np.exp(-1j * spec.theta0), 1, spec.k_z),
        (-a * np.exp(1j * spec.theta0), -1, spec.k_z),
    ]
    return ModeField(spec.k_r, modes, params, amplitude=spec.amplitude,
                     label=f"line_of_force(theta0={spec.theta0:.6g})")


def wavepacket_modes(spec: WavepacketSpec, params: FluidParams | None = None) -> ModeField:
    sign = (-1) ** (spec.n % 2)
    modes = [(sign * a * np.exp(1j * ph), -spec.n, kz) for kz, a, ph in spec.components]
    return ModeField(spec.k_r, modes, params, label=f"wavepacket(n={spec.n})")


def zero_field(params: FluidParams | None = None) -> ModeField:
    return ModeField(1.0, [], params, amplitude=0.0, label="zero")


# ---------------------------------------------------------------------------
# Pointwise generators


def vortex_phase(spec: VortexSpec, params: FluidParams, p: SpacetimePoint):
    """Phase ``omega t - n theta - k_z z``, without range reduction."""
    return omega(spec, params) * p.t - spec.n * p.theta - spec.k_z * p.z


def vortex_density(spec: VortexSpec, params: FluidParams, p: SpacetimePoint, phase_offset=0.0):
    s = vortex_phase(spec, params, p) + phase_offset
    return spec.amplitude * bessel_j(spec.n, spec.k_r * np.asarray(p.r, dtype=float)) * np.cos(s)


def vortex_velocity(spec: VortexSpec, params: FluidParams, p: SpacetimePoint):
    """Flow velocity in Cartesian components, shape ``(..., 3)``.

    Equals ``-(c^2/(omega rho0)) * [R cos(S) grad(S) + grad(R) sin(S)]`` with
    ``R = A J_n(k_r r)``; on the axis the continuous limit is returned.
    """
    x, y, z, t = p.cartesian()
    return vortex_modes(spec, params).velocity(x, y, z, t)


def line_of_force_density(spec: LineOfForceSpec, params: FluidParams, p: SpacetimePoint):
    w = omega(spec, params)
    r = np.asarray(p.r, dtype=float)
    return (spec.amplitude * bessel_j(1, spec.k_r * r)
            * np.cos(w * p.t - spec.k_z * p.z) * np.cos(p.theta - spec.theta0))


def wavepacket_density(spec: WavepacketSpec, params: FluidParams, p: SpacetimePoint):
    total = 0.0
    for kz, a, ph in spec.components:
        comp = VortexSpec(spec.n, spec.k_r, kz, a)
        total = total + vortex_density(comp, params, p, phase_offset=ph)
    return total


# ---------------------------------------------------------------------------
# Plane waves and the monopole radiator


class PlaneWave:
    """``A cos(omega t - k.x + phase)`` with ``omega = c |k|``."""

    def __init__(self, k, amplitude=1.0, phase=0.0, params: FluidParams | None = None):
        self.params = params or FluidParams()
        self.k = np.asarray(k, dtype=float)
        if self.k.shape != (3,) or not np.linalg.norm(self.k) > 0:
            raise ValueError("wavevector must be a nonzero 3-vector")
        self.amplitude = float(amplitude)
        self.phase = float(phase)
        self.omega = self.params.c * float(np.linalg.norm(self.k))
        self.label = "plane_wave"

    def _arg(self, x, y, z, t):
        kx, ky, kz = self.k
        return self.omega * t - (kx * x + ky * y + kz * z) + self.phase

    def value(self, x, y, z, t):
        return self.amplitude * np.cos(self._arg(x, y, z, t))

    __call__ = value

    def time_evaluator(self, x, y, z):
        return lambda t: self.value(x, y, z, t)

    def spacetime_gradient(self, x, y, z, t):
        s = -self.amplitude * np.sin(self._arg(x, y, z, t))
        w = np.array([self.omega, *(-self.k)])
        return s[..., None] * w

    def spacetime_hessian(self, x, y, z, t):
        c = -self.amplitude * np.cos(self._arg(x, y, z, t))
        w = np.array([self.omega, *(-self.k)])
        return c[..., None, None] * np.outer(w, w)


class MonopoleField:
    """Outgoing spherical wave ``(A/d) cos(omega (t - d/c))`` from a point source."""

    def __init__(self, source_amplitude, omega, source_position=(0.0, 0.0, 0.0),
                 params: FluidParams | None = None):
        self.params = params or FluidParams()
        self.amplitude = float(source_amplitude)
        self.omega = float(omega)
        self.source = np.asarray(source_position, dtype=float)
        self.label = "monopole"

    def _geometry(self, x, y, z):
        dx = np.asarray(x, dtype=float) - self.source[0]
        dy = np.asarray(y, dtype=float) - self.source[1]
        dz = np.asarray(z, dtype=float) - self.source[2]
        d = np.sqrt(dx * dx + dy * dy + dz * dz)
        if np.any(d == 0):
            raise ZeroDivisionError("field point coincides with the monopole source")
        n = np.stack(np.broadcast_arrays(dx, dy, dz), axis=-1) / d[..., None]
        return d, n

    def _g(self, d, t):
        ph = self.omega * (t - d / self.params.c)
        a, w = self.amplitude, self.omega
        return a * np.cos(ph), -a * w * np.sin(ph), -a * w * w * np.cos(ph)

    def value(self, x, y, z, t):
        d, _ = self._geometry(x, y, z)
        g, _, _ = self._g(d, t)
        return g / d

    __call__ = value

    def gradient(self, x, y, z, t):
        d, n = self._geometry(x, y, z)
        g, g1, _ = self._g(d, t)
        h = g1 / (self.params.c * d) + g / d**2
        return -n * h[..., None]

    def spacetime_gradient(self, x, y, z, t):
        d, n = self._geometry(x, y, z)
        g, g1, _ = self._g(d, t)
        h = g1 / (self.params.c * d) + g / d**2
        return np.concatenate([(g1 / d)[..., None], -n * h[..., None]], axis=-1)

    def spacetime_hessian(self, x, y, z, t):
        d, n = self._geometry(x, y, z)
        g, g1, g2 = self._g(d, t)
        c = self.params.c
        h = g1 / (c * d) + g / d**2
        dh = -g2 / (c * c * d) - 2.0 * g1 / (c * d**2) - 2.0 * g / d**3
        nn = n[..., :, None] * n[..., None, :]
        eye = np.eye(3)
        hs = -(eye - nn) * (h / d)[..., None, None] - nn * dh[..., None, None]
        out = np.zeros(d.shape + (4, 4))
        out[..., 1:, 1:] = hs
        out[..., 0, 0] = g2 / d
        mixed = -n * (g2 / (c * d) + g1 / d**2)[..., None]
        out[..., 0, 1:] = mixed
        out[..., 1:, 0] = mixed
        return out


def monopole_pressure(source_amplitude, omega, source_position, p: SpacetimePoint,
                      params: FluidParams | None = None):
    """Excess pressure of the outgoing monopole wave at event ``p``."""
    field_ = MonopoleField(source_amplitude, omega, source_position, params)
    x, y, z, t = p.cartesian()
    return field_.value(x, y, z, t)
