"""Certification of wave-equation solutions.

Two independent routes: pointwise residuals ``d_tt f - c^2 lap f`` from closed
form second derivatives, and leapfrog FDTD evolution compared against the
analytic field.  Lorentz boosts (invariant speed ``c``) map certified solutions
to certified solutions; :class:`BoostedField` carries derivatives through the
chain rule so boosted fields can be certified the same way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import field_calculus as fc
from .analytic_fields import FluidParams, SpacetimePoint


class UnsupportedFieldError(TypeError):
    pass


class CflError(ValueError):
    pass


class InstabilityError(FloatingPointError):
    pass


# ---------------------------------------------------------------------------
# Analytic residuals


def wave_residual_analytic(fieldobj, params: FluidParams, points):
    """(max-abs, RMS) of ``d_tt f - c^2 lap f`` over ``points`` of shape (N, 4) as (x, y, z, t)."""
    hess = getattr(fieldobj, "spacetime_hessian", None)
    if hess is None:
        raise UnsupportedFieldError(
            f"{type(fieldobj).__name__} does not provide analytic second derivatives")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    H = hess(pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3])
    res = H[:, 0, 0] - params.c**2 * (H[:, 1, 1] + H[:, 2, 2] + H[:, 3, 3])
    return float(np.max(np.abs(res))), float(np.sqrt(np.mean(res * res)))


def random_events(n, rng: np.random.Generator, radius=6.0, z_extent=6.0, t_extent=10.0):
    """``n`` events (x, y, z, t) with cylindrical radius up to ``radius``."""
    r = radius * np.sqrt(rng.uniform(0, 1, n))
    th = rng.uniform(0, 2 * math.pi, n)
    z = rng.uniform(-z_extent, z_extent, n)
    t = rng.uniform(-t_extent, t_extent, n)
    return np.column_stack([r * np.cos(th), r * np.sin(th), z, t])


def certify(fieldobj, params: FluidParams, points, rel_tol=1e-10):
    """Residual check against ``rel_tol * A * omega^2``; returns a report dict."""
    mx, rms = wave_residual_analytic(fieldobj, params, points)
    bound = rel_tol * fieldobj.amplitude * fieldobj.omega**2
    return {"field": getattr(fieldobj, "label", type(fieldobj).__name__),
            "max_abs": mx, "rms": rms, "bound": bound, "passed": bool(mx <= bound)}


# ---------------------------------------------------------------------------
# Lorentz boosts


@dataclass(frozen=True)
class BoostSpec:
    speed: float
    direction: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        nrm = np.linalg.norm(d)
        if d.shape != (3,) or not nrm > 0:
            raise ValueError("boost direction must be a nonzero 3-vector")
        object.__setattr__(self, "direction", tuple(float(v) for v in d / nrm))
        object.__setattr__(self, "speed", float(self.speed))

    def gamma(self, params: FluidParams) -> float:
        beta = self.speed / params.c
        if not abs(beta) < 1:
            raise ValueError(f"boost speed {self.speed} must be below c = {params.c}")
        return 1.0 / math.sqrt(1.0 - beta * beta)

    def matrix(self, params: FluidParams) -> np.ndarray:
        """4x4 map from lab (t, x, y, z) to primed coordinates."""
        g = self.gamma(params)
        v = self.speed
        n = np.asarray(self.direction)
        L = np.zeros((4, 4))
        L[0, 0] = g
        L[0, 1:] = -g * v * n / params.c**2
        L[1:, 0] = -g * v * n
        L[1:, 1:] = np.eye(3) + (g - 1.0) * np.outer(n, n)
        return L

    def inverse(self) -> "BoostSpec":
        return BoostSpec(-self.speed, self.direction)


def boost_cartesian(boost: BoostSpec, params: FluidParams, x, y, z, t):
    L = boost.matrix(params)
    ev = np.stack(np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, x, y, z))), axis=-1)
    out = ev @ L.T
    return out[..., 1], out[..., 2], out[..., 3], out[..., 0]


def boost_event(p: SpacetimePoint, boost: BoostSpec, params: FluidParams) -> SpacetimePoint:
    """Standard boost: ``t' = g (t - v.x/c^2)``, ``x_par' = g (x_par - v t)``, ``x_perp' = x_perp``."""
    x, y, z, t = boost_cartesian(boost, params, p.x, p.y, p.z, p.t)
    return SpacetimePoint.from_cartesian(x, y, z, t)


class BoostedField:
    """``p -> base(boost(p))`` with chain-rule derivatives."""

    def __init__(self, base, boost: BoostSpec, params: FluidParams | None = None):
        self.base = base
        self.boost = boost
        self.params = params or getattr(base, "params", FluidParams())
        self.L = boost.matrix(self.params)
        self.amplitude = base.amplitude
        self.omega = base.omega
        self.label = f"boosted[{getattr(base, 'label', 'field')}, v={boost.speed:g}]"

    def _primed(self, x, y, z, t):
        return boost_cartesian(self.boost, self.params, x, y, z, t)

    def value(self, x, y, z, t):
        return self.base.value(*self._primed(x, y, z, t))

    __call__ = value

    def spacetime_gradient(self, x, y, z, t):
        g = self.base.spacetime_gradient(*self._primed(x, y, z, t))
        return g @ self.L

    def complex_value(self, x, y, z, t):
        return self.base.complex_value(*self._primed(x, y, z, t))

    def complex_spacetime_gradient(self, x, y, z, t):
        return self.base.complex_spacetime_gradient(*self._primed(x, y, z, t)) @ self.L

    def spacetime_hessian(self, x, y, z, t):
        H = self.base.spacetime_hessian(*self._primed(x, y, z, t))
        return np.einsum("ai,...ab,bj->...ij", self.L, H, self.L)


def boosted_field(fieldobj, boost: BoostSpec, params: FluidParams | None = None) -> BoostedField:
    return BoostedField(fieldobj, boost, params)


def _core_equations(fieldobj, z, t):
    if hasattr(fieldobj, "complex_value"):
        # zero of the analytic signal: the Lorentz image of the rest-frame core
        a = fieldobj.amplitude

        def eqs(p):
            v = complex(fieldobj.complex_value(p[0], p[1], z, t))
            return [v.real / a, v.imag / a]

        def jac(p):
            g = fieldobj.complex_spacetime_gradient(p[0], p[1], z, t)[..., 1:3] / a
            return [[g[0].real, g[1].real], [g[0].imag, g[1].imag]]

        return eqs, jac
    w = fieldobj.omega

    def eqs(p):
        g = fieldobj.spacetime_gradient(p[0], p[1], z, t)
        return [float(fieldobj.value(p[0], p[1], z, t)), float(g[..., 0]) / w]

    def jac(p):
        g = fieldobj.spacetime_gradient(p[0], p[1], z, t)
        H = fieldobj.spacetime_hessian(p[0], p[1], z, t)
        return [[float(g[..., 1]), float(g[..., 2])],
                [float(H[..., 0, 1]) / w, float(H[..., 0, 2]) / w]]

    return eqs, jac


def track_core(fieldobj, times, guess=(0.0, 0.0), z=0.0):
    """Locate the phase singularity in the plane ``z`` at each time.

    Fields with an analytic signal are solved for its zero; otherwise the
    core is taken as the common root of ``f`` and ``d_t f / omega``, which is
    only valid for a core at rest.  Each starting point is extrapolated from
    the previous two positions.
    """
    pos = np.asarray(guess, dtype=float)
    out = []
    for i, t in enumerate(times):
        if i >= 2:
            s = (t - times[i - 1]) / (times[i - 1] - times[i - 2])
            pos = out[-1] + s * (out[-1] - out[-2])
        eqs, jac = _core_equations(fieldobj, z, t)
        sol = optimize.root(eqs, pos, jac=jac, method="hybr", options={"xtol": 1e-14})
        # hybr reports failure when the guess is already an exact root
        if not sol.success and np.max(np.abs(sol.fun)) > 1e-12:
            raise RuntimeError(f"core tracking failed at t={t}: {sol.message}")
        pos = sol.x
        out.append(pos.copy())
    return np.array(out)


def core_speed(fieldobj, period: float, samples: int = 9, guess=(0.0, 0.0)):
    """Least-squares core velocity (vx, vy) over one period."""
    times = np.linspace(0.0, period, samples)
    path = track_core(fieldobj, times, guess)
    A = np.column_stack([times, np.ones_like(times)])
    coef, *_ = np.linalg.lstsq(A, path, rcond=None)
    return coef[0], path


# ---------------------------------------------------------------------------
# FDTD


@dataclass
class FdtdState:
    current: fc.GridField
    previous: fc.GridField
    dt: float
    c: float
    step: int = 0

    @property
    def time(self) -> float:
        return self.current.time_tag

    @property
    def cfl(self) -> float:
        return cfl_number(self.c, self.dt, self.current.spec.spacing)


def cfl_number(c, dt, spacing) -> float:
    return c * dt * math.sqrt(sum(1.0 / h**2 for h in spacing))


CFL_LIMIT = 0.9


def _boundary_mask(dims):
    m = np.ones(dims, dtype=bool)
    m[1:-1, 1:-1, 1:-1] = False
    return m


def _evaluator(fieldfn, x, y, z):
    owner = fieldfn if hasattr(fieldfn, "time_evaluator") else getattr(fieldfn, "__self__", None)
    if owner is not None and hasattr(owner, "time_evaluator"):
        return owner.time_evaluator(x, y, z)
    return lambda t: np.broadcast_to(np.asarray(fieldfn(x, y, z, t), dtype=float), x.shape)


def fdtd_evolve(fieldfn, grid: fc.GridSpec, dt: float, steps: int, params: FluidParams,
                t0: float = 0.0) -> FdtdState:
    """Leapfrog ``rho+ = 2 rho - rho- + (c dt)^2 lap rho`` from analytic snapshots.

    ``fieldfn(x, y, z, t)`` (or a field object with ``time_evaluator``)
    supplies the snapshots at ``t0 - dt`` and ``t0`` and the Dirichlet data
    clamped on the outer layer every step.
    """
    cfl = cfl_number(params.c, dt, grid.spacing)
    if cfl > CFL_LIMIT:
        raise CflError(f"CFL number {cfl:.4f} exceeds {CFL_LIMIT}")
    if any(n < 3 for n in grid.dims):
        raise fc.GridTooSmallError("FDTD needs at least 3 nodes per axis")
    X, Y, Z = grid.mesh()
    bmask = _boundary_mask(grid.dims)
    boundary = _evaluator(fieldfn, X[bmask], Y[bmask], Z[bmask])
    prev = np.array(_evaluator(fieldfn, X, Y, Z)(t0 - dt), dtype=float)
    cur = np.array(_evaluator(fieldfn, X, Y, Z)(t0), dtype=float)
    cx, cy, cz = ((params.c * dt / h) ** 2 for h in grid.spacing)
    inner = (slice(1, -1),) * 3
    nxt = np.empty_like(cur)
    work = np.empty_like(cur[inner])
    for k in range(1, steps + 1):
        c0 = cur[inner]
        # nxt = 2 c0 - prev + sum_a c_a (neighbours_a - 2 c0), accumulated in place
        acc = nxt[inner]
        np.multiply(c0, 2.0 - 2.0 * (cx + cy + cz), out=acc)
        acc -= prev[inner]
        for coef, hi, lo in (
            (cx, cur[2:, 1:-1, 1:-1], cur[:-2, 1:-1, 1:-1]),
            (cy, cur[1:-1, 2:, 1:-1], cur[1:-1, :-2, 1:-1]),
            (cz, cur[1:-1, 1:-1, 2:], cur[1:-1, 1:-1, :-2]),
        ):
            np.add(hi, lo, out=work)
            work *= coef
            acc += work
        nxt[bmask] = boundary(t0 + k * dt)
        if not np.isfinite(acc).all():
            raise InstabilityError(f"non-finite value at step {k}")
        prev, cur, nxt = cur, nxt, prev
    return FdtdState(fc.GridField(grid, cur, t0 + steps * dt),
                     fc.GridField(grid, prev, t0 + (steps - 1) * dt), dt, params.c, steps)


def fdtd_error(fieldfn, grid: fc.GridSpec, dt: float, steps: int, params: FluidParams) -> float:
    """Max interior error of the FDTD result against the analytic field."""
    st = fdtd_evolve(fieldfn, grid, dt, steps, params)
    X, Y, Z = grid.mesh()
    exact = fc.GridField(grid, _evaluator(fieldfn, X, Y, Z)(st.time), st.time)
    diff = st.current.values - exact.values
    return float(np.max(np.abs(diff[1:-1, 1:-1, 1:-1])))


def fdtd_convergence(fieldfn, grid: fc.GridSpec, duration: float, params: FluidParams,
                     cfl: float = 0.8):
    """Errors at ``h`` and ``h/2`` over ``duration`` with ``dt`` halved exactly.

    Returns ``(err_coarse, err_fine, observed_order)``.
    """
    dt_max = cfl / (params.c * math.sqrt(sum(1.0 / h**2 for h in grid.spacing)))
    steps = int(math.ceil(duration / dt_max))
    dt = duration / steps
    e1 = fdtd_error(fieldfn, grid, dt, steps, params)
    e2 = fdtd_error(fieldfn, grid.refined(), dt / 2, 2 * steps, params)
    return e1, e2, math.log2(e1 / e2)
