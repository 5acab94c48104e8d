import math

import numpy as np
import pytest

from fluidem import field_calculus as fc
from fluidem import wave_verification as wv
from fluidem.analytic_fields import (FluidParams, LineOfForceSpec, PlaneWave, SpacetimePoint,
                                     VortexSpec, WavepacketSpec, line_of_force_modes,
                                     vortex_modes, wavepacket_modes, zero_field)
from fluidem.suites import _boosted_winding, certified_fields

P = FluidParams()


@pytest.fixture(scope="module")
def events():
    return wv.random_events(1000, np.random.default_rng(3))


def test_certified_fields_pass(events):
    for f in certified_fields(P):
        rep = wv.certify(f, P, events)
        assert rep["passed"], rep


def test_residual_at_rounding_level(events):
    f = vortex_modes(VortexSpec(1, 1.0, 0.5), P)
    mx, rms = wv.wave_residual_analytic(f, P, events)
    assert mx <= 1e-10 * f.amplitude * f.omega**2
    assert rms <= mx


def test_zero_field_residual_exact(events):
    assert wv.wave_residual_analytic(zero_field(P), P, events) == (0.0, 0.0)


def test_unsupported_field():
    class Bare:
        def value(self, x, y, z, t):
            return 0.0

    with pytest.raises(wv.UnsupportedFieldError):
        wv.wave_residual_analytic(Bare(), P, np.zeros((1, 4)))


def test_non_solution_fails(events):
    # dispersion broken by hand: a Bessel mode with omega too large
    f = vortex_modes(VortexSpec(1, 1.0, 0.5), FluidParams(c=1.0))
    rep = wv.certify(f, FluidParams(c=0.9), events)
    assert not rep["passed"]


def test_boost_identity_at_rest():
    L = wv.BoostSpec(0.0, (1, 2, 3)).matrix(P)
    assert np.array_equal(L, np.eye(4))


def test_boost_roundtrip():
    rng = np.random.default_rng(1)
    b = wv.BoostSpec(0.7, tuple(rng.normal(size=3)))
    ev = rng.normal(size=(200, 4)) * 5
    x, y, z, t = wv.boost_cartesian(b, P, ev[:, 0], ev[:, 1], ev[:, 2], ev[:, 3])
    x, y, z, t = wv.boost_cartesian(b.inverse(), P, x, y, z, t)
    assert np.max(np.abs(np.column_stack([x, y, z, t]) - ev)) <= 1e-12 * 5 * 10


def test_interval_invariance():
    rng = np.random.default_rng(2)
    params = FluidParams(c=1.5)
    b = wv.BoostSpec(0.6 * params.c, tuple(rng.normal(size=3)))
    ev = rng.uniform(-1, 1, size=(1000, 4))
    x, y, z, t = wv.boost_cartesian(b, params, ev[:, 0], ev[:, 1], ev[:, 2], ev[:, 3])
    before = params.c**2 * ev[:, 3] ** 2 - np.sum(ev[:, :3] ** 2, axis=1)
    after = params.c**2 * t**2 - (x**2 + y**2 + z**2)
    assert np.max(np.abs(after - before)) <= 1e-12


def test_boost_event_standard_form():
    b = wv.BoostSpec(0.5, (0, 0, 1))
    p = wv.boost_event(SpacetimePoint.from_cartesian(0.3, -0.2, 1.0, 2.0), b, P)
    g = 1 / math.sqrt(1 - 0.25)
    assert p.t == pytest.approx(g * (2.0 - 0.5 * 1.0), abs=1e-14)
    assert p.z == pytest.approx(g * (1.0 - 0.5 * 2.0), abs=1e-14)
    assert p.x == pytest.approx(0.3, abs=1e-14)
    assert p.y == pytest.approx(-0.2, abs=1e-14)


@pytest.mark.parametrize("v", [1.0, -1.0, 1.5])
def test_superluminal_boost_rejected(v):
    with pytest.raises(ValueError):
        wv.BoostSpec(v).gamma(P)


def test_zero_direction_rejected():
    with pytest.raises(ValueError):
        wv.BoostSpec(0.1, (0, 0, 0))


def test_boosted_zero_field():
    bf = wv.boosted_field(zero_field(P), wv.BoostSpec(0.5), P)
    x = np.linspace(-1, 1, 7)
    assert np.all(bf.value(x, x, x, x) == 0)


@pytest.mark.parametrize("v", [0.2, 0.5, 0.8])
@pytest.mark.parametrize("direction", [(0, 0, 1), (1, 0, 0), (1, 1, 1)])
def test_lorentz_closure(events, v, direction):
    for base in (vortex_modes(VortexSpec(1, 1.0, 0.5), P),
                 line_of_force_modes(LineOfForceSpec(0.7, 1.0, 2.0), P),
                 wavepacket_modes(WavepacketSpec.gaussian(1, 1.0, 2.0, 0.2), P)):
        bf = wv.BoostedField(base, wv.BoostSpec(v * P.c, direction), P)
        assert wv.certify(bf, P, events)["passed"]


def test_boosted_gradient_matches_finite_difference():
    base = vortex_modes(VortexSpec(2, 1.0, 0.5), P)
    bf = wv.BoostedField(base, wv.BoostSpec(0.6, (1, 2, 0)), P)
    p = np.array([0.4, -0.3, 0.2, 0.7])
    h = 1e-5
    g = bf.spacetime_gradient(*p)
    order = (3, 0, 1, 2)  # gradient index -> (x, y, z, t) slot
    for i, slot in enumerate(order):
        e = np.zeros(4)
        e[slot] = h
        fd = (bf.value(*(p + e)) - bf.value(*(p - e))) / (2 * h)
        assert g[i] == pytest.approx(fd, abs=1e-8)


@pytest.mark.parametrize("v", [0.2, 0.5, 0.8])
def test_boosted_core_speed(v):
    base = vortex_modes(VortexSpec(1, 1.0, 0.0), P)
    bf = wv.BoostedField(base, wv.BoostSpec(v, (1.0, 0.0, 0.0)), P)
    vel, path = wv.core_speed(bf, 2 * math.pi / base.omega, samples=17)
    assert abs(vel[0] - v) <= 1e-6 and abs(vel[1]) <= 1e-6
    # the core is where the field and its analytic partner both vanish
    assert np.max(np.abs(bf.complex_value(path[:, 0], path[:, 1], 0.0,
                                          np.linspace(0, 2 * math.pi, 17)))) <= 1e-10


def test_axial_boost_leaves_core_on_axis():
    base = vortex_modes(VortexSpec(1, 1.0, 0.5), P)
    bf = wv.BoostedField(base, wv.BoostSpec(0.5, (0, 0, 1)), P)
    vel, path = wv.core_speed(bf, 2 * math.pi, samples=9, guess=(0.05, -0.05))
    assert np.max(np.abs(path)) <= 1e-10


def test_core_at_rest_without_analytic_signal():
    f = vortex_modes(VortexSpec(1, 1.0, 0.0), P)

    class RealOnly:
        amplitude, omega = f.amplitude, f.omega
        value = staticmethod(f.value)
        spacetime_gradient = staticmethod(f.spacetime_gradient)
        spacetime_hessian = staticmethod(f.spacetime_hessian)

    path = wv.track_core(RealOnly(), np.linspace(0.1, 1.0, 5), guess=(0.1, 0.1))
    assert np.max(np.abs(path)) <= 1e-10


@pytest.mark.parametrize("v", [0.2, 0.5, 0.8])
def test_boosted_winding(v):
    assert _boosted_winding(v * P.c, P) == pytest.approx(-2 * math.pi, abs=1e-6)


# FDTD on small grids


def small_grid(h=0.1):
    return fc.GridSpec.box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5), h)


def test_fdtd_zero_field_stays_zero():
    st = wv.fdtd_evolve(zero_field(P), small_grid(), 0.05, 20, P)
    assert np.all(st.current.values == 0) and st.step == 20
    assert st.time == pytest.approx(1.0)
    assert st.cfl == pytest.approx(0.05 * math.sqrt(300))


def test_fdtd_cfl_rejected():
    with pytest.raises(wv.CflError):
        wv.fdtd_evolve(zero_field(P), small_grid(), 0.06, 1, P)


def test_fdtd_tiny_grid_rejected():
    grid = fc.GridSpec((0, 0, 0), (0.1, 0.1, 0.1), (2, 5, 5))
    with pytest.raises(fc.GridTooSmallError):
        wv.fdtd_evolve(zero_field(P), grid, 0.01, 1, P)


def test_fdtd_instability_reports_step():
    # boundary data that blows up after a few steps poisons the interior
    def bad(x, y, z, t):
        return np.full(np.shape(x), np.inf if t > 0.05 else 0.0)

    with pytest.raises(wv.InstabilityError, match="step"):
        wv.fdtd_evolve(bad, small_grid(), 0.02, 10, P)


def test_fdtd_plane_wave_second_order():
    k = np.array([1.0, 2.0, 0.5])
    f = PlaneWave(k, params=P)
    grid = fc.GridSpec.box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5), 0.1)
    e1, e2, order = wv.fdtd_convergence(f, grid, 2 * math.pi / f.omega, P)
    assert e1 <= 1e-2
    assert order == pytest.approx(2.0, abs=0.1)


def test_fdtd_plain_callable_matches_field_object():
    f = vortex_modes(VortexSpec(1, 1.0, 0.5), P)
    grid = small_grid()
    a = wv.fdtd_evolve(f, grid, 0.03, 10, P).current.values
    b = wv.fdtd_evolve(lambda x, y, z, t: f.value(x, y, z, t), grid, 0.03, 10, P).current.values
    assert np.max(np.abs(a - b)) <= 1e-13


def test_fdtd_vortex_second_order():
    f = vortex_modes(VortexSpec(1, 2.0, 1.0), P)
    grid = fc.GridSpec.box((-0.6, -0.6, -0.3), (0.6, 0.6, 0.3), 0.05)
    e1, e2, order = wv.fdtd_convergence(f, grid, 2 * math.pi / f.omega, P)
    assert order == pytest.approx(2.0, abs=0.1)
