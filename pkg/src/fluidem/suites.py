"""Verification suites shared by the command line and the acceptance tests.

Each suite returns a list of check records ``{"name", "value", "bound",
"passed", ...}``.  Tolerances come from :data:`DEFAULT_TOLERANCES` and can be
overridden per call.
"""
from __future__ import annotations

import math
import time

import numpy as np

from . import em_analogue as em
from . import field_calculus as fc
from . import wave_verification as wv
from .analytic_fields import (FluidParams, LineOfForceSpec, VortexSpec, WavepacketSpec,
                              line_of_force_modes, vortex_modes, wavepacket_modes)

DEFAULT_TOLERANCES = {
    "wave_rel": 1e-10,        # residual / (A omega^2)
    "winding_analytic": 1e-9,
    "winding_snapshot": 1e-4,
    "pbar_rel": 1e-10,
    "gauss_rel": 1e-10,       # max|div B| / (max|B| / h)
    "faraday_rel": 1e-8,      # residual / (max|B| omega)
    "core_speed": 1e-6,       # in units of c
    "boosted_winding": 1e-6,
    "stencil": 1e-9,
    "fdtd_error": 1e-3,       # in units of A
    "fdtd_order": 0.1,
}

SUITES = ("wave", "lorentz", "calculus", "em", "fdtd")
DEFAULT_SPEEDS = (0.2, 0.5, 0.8)


def resolve_tolerances(overrides=None) -> dict:
    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (overrides or {}).items():
        if key not in tol:
            raise KeyError(f"unknown tolerance {key!r}; known: {', '.join(sorted(tol))}")
        tol[key] = float(val)
    return tol


def _check(name, value, bound, passed=None, **extra):
    if passed is None:
        passed = value <= bound
    return {"name": name, "value": float(value), "bound": float(bound),
            "passed": bool(passed), **extra}


def certified_fields(params: FluidParams):
    """Vortices over n in {0..3}, k_z in {0, 0.5, 2}, a line of force and a packet."""
    out = [vortex_modes(VortexSpec(n, 1.0, kz), params) for n in range(4) for kz in (0.0, 0.5, 2.0)]
    for kz in (0.0, 0.5, 2.0):
        out.append(line_of_force_modes(LineOfForceSpec(0.7, 1.0, kz), params))
    out.append(wavepacket_modes(WavepacketSpec.gaussian(1, 1.0, 2.0, 0.2), params))
    return out


def suite_wave(params=None, tol=None, seed=0, points=1000):
    params = params or FluidParams()
    tol = resolve_tolerances(tol)
    events = wv.random_events(points, np.random.default_rng(seed))
    checks = []
    for f in certified_fields(params):
        rep = wv.certify(f, params, events, tol["wave_rel"])
        checks.append(_check(f"residual {f.label} k_z={f.modes[0][2]:g}", rep["max_abs"],
                             rep["bound"], rms=rep["rms"]))
    return checks


def _boosted_winding(v, params, radius=1.0, samples=64):
    spec = VortexSpec(1, 1.0, 0.5)
    base = vortex_modes(spec, params)
    boost = wv.BoostSpec(v, (0.0, 0.0, 1.0))
    bf = wv.BoostedField(base, boost, params)
    # a z boost keeps the field monochromatic in the lab, with a Doppler shifted frequency
    w_lab = boost.gamma(params) * (base.omega + spec.k_z * v)
    tq = 0.5 * math.pi / w_lab
    loop = fc.SampledLoop(radius=radius, samples=samples)
    return em.winding_from_snapshots(lambda x, y, z: bf.value(x, y, z, 0.0),
                                     lambda x, y, z: bf.value(x, y, z, tq), loop)


def suite_lorentz(params=None, tol=None, speeds=DEFAULT_SPEEDS, seed=0, points=1000):
    params = params or FluidParams()
    tol = resolve_tolerances(tol)
    events = wv.random_events(points, np.random.default_rng(seed))
    checks = []
    for v in speeds:
        for direction in ((0.0, 0.0, 1.0), (1.0, 0.0, 0.0)):
            boost = wv.BoostSpec(v * params.c, direction)
            for base in (vortex_modes(VortexSpec(1, 1.0, 0.5), params),
                         line_of_force_modes(LineOfForceSpec(0.7, 1.0, 0.5), params)):
                bf = wv.BoostedField(base, boost, params)
                rep = wv.certify(bf, params, events, tol["wave_rel"])
                checks.append(_check(f"residual {bf.label} dir={direction}", rep["max_abs"],
                                     rep["bound"]))
        # a transverse boost moves the core; a boost along the axis leaves it fixed
        base = vortex_modes(VortexSpec(1, 1.0, 0.0), params)
        bf = wv.BoostedField(base, wv.BoostSpec(v * params.c, (1.0, 0.0, 0.0)), params)
        vel, _ = wv.core_speed(bf, 2.0 * math.pi / base.omega, samples=17)
        err = math.hypot(vel[0] - v * params.c, vel[1]) / params.c
        checks.append(_check(f"core speed v={v}c", err, tol["core_speed"],
                             measured=[float(vel[0]), float(vel[1])]))
        w = _boosted_winding(v * params.c, params)
        checks.append(_check(f"boosted winding v={v}c", abs(w + 2.0 * math.pi),
                             tol["boosted_winding"], winding=w))
    return checks


def suite_calculus(tol=None, seed=0):
    """Central stencils are exact on quadratics; div curl and curl grad vanish."""
    tol = resolve_tolerances(tol)
    rng = np.random.default_rng(seed)
    grid = fc.GridSpec((-1.0, -0.5, 0.25), (0.1, 0.125, 0.2), (9, 8, 7))
    Q = rng.normal(size=(3, 3))
    Q = Q + Q.T
    b = rng.normal(size=3)

    def quad(x, y, z, t=0.0):
        p = np.stack([x, y, z], axis=-1)
        return 0.5 * np.einsum("...i,ij,...j->...", p, Q, p) + p @ b

    f = fc.sample(quad, grid)
    X, Y, Z = grid.mesh()
    P = np.stack([X, Y, Z], axis=-1)
    g = fc.grad(f)
    exact_g = fc.GridField(grid, P @ Q + b, 0.0, g.margin)
    lap = fc.laplacian(f)
    exact_lap = fc.GridField(grid, np.full(grid.dims, np.trace(Q)), 0.0, lap.margin)
    v = fc.vector_field([fc.sample(lambda x, y, z, t, c=c: np.sin(c[0] * x + c[1] * y * z + c[2]),
                                   grid).values for c in rng.normal(size=(3, 3))], grid)
    scale = float(np.max(np.abs(Q))) + float(np.max(np.abs(b)))
    return [
        _check("grad exact on quadratic", (g - exact_g).norms()[0] / scale, tol["stencil"]),
        _check("laplacian exact on quadratic", (lap - exact_lap).norms()[0] / scale, tol["stencil"]),
        _check("div curl = 0", fc.div(fc.curl(v)).norms()[0] * grid.h**2, tol["stencil"]),
        _check("curl grad = 0", fc.curl(fc.grad(f)).norms()[0] * grid.h / scale, tol["stencil"]),
    ]


def snapshot_winding(modes, radius, tq, samples=128, h=0.05):
    """Winding retrieved from gridded snapshots at ``t = 0`` and ``tq`` on a thin slab."""
    grid = fc.GridSpec.box((-radius - 0.5, -radius - 0.5, -h), (radius + 0.5, radius + 0.5, h), h)
    at = modes.time_evaluator(*grid.mesh())
    s0 = fc.GridField(grid, at(0.0), 0.0)
    s1 = fc.GridField(grid, at(tq), tq)
    return em.winding_from_snapshots(s0, s1, fc.SampledLoop(radius=radius, samples=samples),
                                     amplitude=modes.amplitude)


def pbar_oracle_specs():
    return [VortexSpec(1, 1.0, 0.5), VortexSpec(2, 1.3, 0.0), LineOfForceSpec(0.4, 0.9, 0.7)]


def pbar_oracle_error(spec, params, nsteps=256):
    """Max relative gap between closed-form pbar and a brute period average of rho u."""
    modes = vortex_modes(spec, params) if isinstance(spec, VortexSpec) else line_of_force_modes(spec, params)
    axis = np.linspace(-2.0, 2.0, 5) + 0.13
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    analytic = em.mean_momentum_analytic(spec, params, pts)
    period = 2.0 * math.pi / modes.omega
    brute = np.array([em.mean_momentum_brute(modes.value, modes.velocity, params, p, period, nsteps)
                      for p in pts])
    # floor the scale where pbar vanishes identically (n = 0, k_z = 0)
    floor = params.c**2 * spec.amplitude**2 * spec.k_r / (2.0 * modes.omega * params.rho0)
    scale = max(float(np.max(np.abs(analytic))), floor)
    return float(np.max(np.abs(brute - analytic))) / scale


def suite_em(params=None, tol=None):
    params = params or FluidParams()
    tol = resolve_tolerances(tol)
    checks = []
    for n in (0, 1, 2, 3, -2):
        spec = VortexSpec(n, 1.0, 0.5)
        phasefn = em.vortex_phase_fn(spec, params)
        modes = vortex_modes(spec, params)
        tq = 0.5 * math.pi / modes.omega
        for radius in (1.0, 2.0, 5.0):
            for samples in (64, 128):
                loop = fc.SampledLoop(radius=radius, samples=samples)
                w = em.phase_winding(phasefn, loop) / (2.0 * math.pi)
                checks.append(_check(f"winding n={n} r={radius} N={samples}", abs(w + n),
                                     tol["winding_analytic"], winding_over_2pi=w))
            # snapshot path through gridded density and interpolation
            w = snapshot_winding(modes, radius, tq, 128)
            w /= 2.0 * math.pi
            checks.append(_check(f"snapshot winding n={n} r={radius}", abs(w + n),
                                 tol["winding_snapshot"], winding_over_2pi=w))
    for spec in pbar_oracle_specs():
        checks.append(_check(f"pbar oracle {spec}", pbar_oracle_error(spec, params), tol["pbar_rel"]))
    for spec in (VortexSpec(1, 1.0, 0.0), VortexSpec(2, 1.0, 0.5)):
        grid = fc.GridSpec.box((-2.0, -2.0, -0.5), (2.0, 2.0, 0.5), 0.05)
        B = em.magnetic_field(em.MeanMomentumField.from_spec(spec, params), grid)
        div_max, scale = em.gauss_residual(B)
        checks.append(_check(f"gauss {spec}", div_max / scale, tol["gauss_rel"]))
    packet = wavepacket_modes(WavepacketSpec.gaussian(1, 1.0, 2.0, 0.2), params)
    grid = fc.GridSpec.box((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0), 0.05)
    far, _ = em.faraday_residual(packet.mean_momentum, grid, 0.3, 1e-3)
    bmax = em.magnetic_field(packet.mean_momentum, grid, 0.3).norms()[0]
    checks.append(_check("faraday wavepacket", far / (bmax * packet.omega), tol["faraday_rel"]))
    return checks


FDTD_BOX = ((-2.0, -2.0, -0.5), (2.0, 2.0, 0.5))


def suite_fdtd(params=None, tol=None, h=0.05, cfl=0.8):
    params = params or FluidParams()
    tol = resolve_tolerances(tol)
    grid = fc.GridSpec.box(*FDTD_BOX, h)
    checks = []
    for f in (vortex_modes(VortexSpec(1, 1.0, 0.5), params),
              line_of_force_modes(LineOfForceSpec(0.7, 1.0, 0.5), params)):
        period = 2.0 * math.pi / f.omega
        e1, e2, order = wv.fdtd_convergence(f, grid, period, params, cfl)
        checks.append(_check(f"fdtd error {f.label} h={h}", e1 / f.amplitude, tol["fdtd_error"]))
        checks.append(_check(f"fdtd order {f.label}", abs(order - 2.0), tol["fdtd_order"],
                             order=order, err_coarse=e1, err_fine=e2))
    return checks


def run_suites(names, params=None, tol=None, speeds=DEFAULT_SPEEDS, seed=0):
    """Run the named suites; returns ``{suite: {"checks", "passed", "seconds"}}``."""
    runners = {
        "wave": lambda: suite_wave(params, tol, seed),
        "lorentz": lambda: suite_lorentz(params, tol, speeds, seed),
        "calculus": lambda: suite_calculus(tol, seed),
        "em": lambda: suite_em(params, tol),
        "fdtd": lambda: suite_fdtd(params, tol),
    }
    out = {}
    for name in names:
        if name not in runners:
            raise KeyError(f"unknown suite {name!r}")
        t0 = time.perf_counter()
        checks = runners[name]()
        out[name] = {"checks": checks, "passed": all(c["passed"] for c in checks),
                     "seconds": time.perf_counter() - t0}
    return out
