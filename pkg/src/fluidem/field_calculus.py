"""Uniform-grid fields, central-difference operators and loop/disk quadrature.

Operators use second-order central stencils and never reach the boundary:
each application widens the invalid margin by one cell.  Values inside the
margin are stored as zeros and excluded from every norm.
"""
from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator

MIN_STENCIL_DIMS = 5


class PoisonedFieldError(ValueError):
    """A sampled field produced a non-finite value."""


class GridTooSmallError(ValueError):
    pass


class OutsideGridError(ValueError):
    """Quadrature nodes fell outside the valid region of a gridded field."""


@dataclass(frozen=True)
class GridSpec:
    origin: tuple
    spacing: tuple
    dims: tuple

    def __post_init__(self):
        origin = tuple(float(v) for v in self.origin)
        spacing = tuple(float(v) for v in self.spacing)
        dims = tuple(int(v) for v in self.dims)
        if not (len(origin) == len(spacing) == len(dims) == 3):
            raise ValueError("origin, spacing and dims must all have three entries")
        if any(not h > 0 for h in spacing):
            raise ValueError(f"spacing must be positive on every axis, got {spacing}")
        if any(n < 1 for n in dims):
            raise ValueError(f"dims must be positive, got {dims}")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def box(cls, lower, upper, h):
        """Grid covering ``[lower, upper]`` per axis with step ``h`` (rounded to fit)."""
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        counts = np.rint((upper - lower) / h).astype(int) + 1
        return cls(tuple(lower), (h, h, h), tuple(counts))

    def axes(self):
        return tuple(o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.dims))

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    @property
    def h(self):
        return min(self.spacing)

    @property
    def upper(self):
        return tuple(o + h * (n - 1) for o, h, n in zip(self.origin, self.spacing, self.dims))

    def refined(self):
        """Same extent with half the spacing."""
        return GridSpec(self.origin, tuple(h / 2 for h in self.spacing),
                        tuple(2 * n - 1 for n in self.dims))


@dataclass(frozen=True, eq=False)
class GridField:
    spec: GridSpec
    values: np.ndarray
    time_tag: float = 0.0
    margin: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        dims = self.spec.dims
        if vals.shape not in (dims, dims + (3,)):
            raise ValueError(f"values shape {vals.shape} does not match dims {dims}")
        if not np.all(np.isfinite(vals)):
            raise PoisonedFieldError("grid field contains non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def rank(self) -> str:
        return "scalar" if self.values.ndim == 3 else "vector3"

    def interior(self):
        m = self.margin
        return tuple(slice(m, n - m) for n in self.spec.dims)

    def valid_values(self):
        return self.values[self.interior()]

    def norms(self):
        """(max-abs, RMS) over the valid interior; vectors use the node magnitude."""
        v = self.valid_values()
        mag = np.abs(v) if self.rank == "scalar" else np.sqrt(np.sum(v * v, axis=-1))
        if mag.size == 0:
            raise GridTooSmallError("no valid interior nodes")
        return float(mag.max()), float(np.sqrt(np.mean(mag * mag)))

    def component(self, i):
        if self.rank != "vector3":
            raise ValueError("component() needs a vector field")
        return GridField(self.spec, self.values[..., i], self.time_tag, self.margin)

    def __add__(self, other):
        return _combine(self, other, np.add)

    def __sub__(self, other):
        return _combine(self, other, np.subtract)

    def scaled(self, factor):
        return GridField(self.spec, self.values * factor, self.time_tag, self.margin)


def _combine(a: GridField, b: GridField, op):
    if a.spec != b.spec or a.rank != b.rank:
        raise ValueError("fields live on different grids or have different rank")
    margin = max(a.margin, b.margin)
    return _masked(a.spec, op(a.values, b.values), a.time_tag, margin)


def _masked(spec, values, time_tag, margin):
    out = np.zeros_like(values)
    sl = tuple(slice(margin, n - margin) for n in spec.dims)
    out[sl] = values[sl]
    return GridField(spec, out, time_tag, margin)


def vector_field(components, spec: GridSpec, time_tag=0.0, margin=0) -> GridField:
    return GridField(spec, np.stack(components, axis=-1), time_tag, margin)


def sample(fieldfn: Callable, spec: GridSpec, t: float = 0.0) -> GridField:
    """Evaluate ``fieldfn(x, y, z, t)`` on every node (vectorised call)."""
    x, y, z = spec.mesh()
    vals = np.asarray(fieldfn(x, y, z, t), dtype=float)
    if vals.shape == ():
        vals = np.full(spec.dims, float(vals))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        node = tuple(float(a[idx[:3]]) for a in (x, y, z))
        raise PoisonedFieldError(f"non-finite sample at node {idx[:3]} = {node}, t={t}")
    return GridField(spec, vals, float(t), 0)


# ---------------------------------------------------------------------------
# Central-difference operators


def _check_stencil(f: GridField):
    need = 2 * (f.margin + 1) + 1
    if any(n < max(MIN_STENCIL_DIMS, need) for n in f.spec.dims):
        raise GridTooSmallError(
            f"grid dims {f.spec.dims} too small for a stencil at margin {f.margin}")


def _d(values, axis, h):
    """Central first difference along ``axis``; edges left as zero."""
    out = np.zeros_like(values)
    n = values.shape[axis]
    hi = [slice(None)] * values.ndim
    lo = [slice(None)] * values.ndim
    mid = [slice(None)] * values.ndim
    hi[axis], lo[axis], mid[axis] = slice(2, n), slice(0, n - 2), slice(1, n - 1)
    out[tuple(mid)] = (values[tuple(hi)] - values[tuple(lo)]) / (2.0 * h)
    return out


def _d2(values, axis, h):
    out = np.zeros_like(values)
    n = values.shape[axis]
    hi = [slice(None)] * values.ndim
    lo = [slice(None)] * values.ndim
    mid = [slice(None)] * values.ndim
    hi[axis], lo[axis], mid[axis] = slice(2, n), slice(0, n - 2), slice(1, n - 1)
    out[tuple(mid)] = (values[tuple(hi)] - 2.0 * values[tuple(mid)] + values[tuple(lo)]) / (h * h)
    return out


def grad(f: GridField) -> GridField:
    if f.rank != "scalar":
        raise ValueError("grad needs a scalar field")
    _check_stencil(f)
    hs = f.spec.spacing
    comps = [_d(f.values, a, hs[a]) for a in range(3)]
    return _masked(f.spec, np.stack(comps, axis=-1), f.time_tag, f.margin + 1)


def div(v: GridField) -> GridField:
    if v.rank != "vector3":
        raise ValueError("div needs a vector field")
    _check_stencil(v)
    hs = v.spec.spacing
    total = sum(_d(v.values[..., a], a, hs[a]) for a in range(3))
    return _masked(v.spec, total, v.time_tag, v.margin + 1)


def curl(v: GridField) -> GridField:
    if v.rank != "vector3":
        raise ValueError("curl needs a vector field")
    _check_stencil(v)
    hx, hy, hz = v.spec.spacing
    vx, vy, vz = (v.values[..., i] for i in range(3))
    cx = _d(vz, 1, hy) - _d(vy, 2, hz)
    cy = _d(vx, 2, hz) - _d(vz, 0, hx)
    cz = _d(vy, 0, hx) - _d(vx, 1, hy)
    return _masked(v.spec, np.stack([cx, cy, cz], axis=-1), v.time_tag, v.margin + 1)


def laplacian(f: GridField) -> GridField:
    if f.rank != "scalar":
        raise ValueError("laplacian needs a scalar field")
    _check_stencil(f)
    hs = f.spec.spacing
    total = sum(_d2(f.values, a, hs[a]) for a in range(3))
    return _masked(f.spec, total, f.time_tag, f.margin + 1)


def time_derivative(f_at: Callable[[float], GridField], t: float, dt: float) -> GridField:
    """Central difference ``(f(t+dt) - f(t-dt)) / (2 dt)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    fp, fm = f_at(t + dt), f_at(t - dt)
    diff = (fp - fm).scaled(1.0 / (2.0 * dt))
    return GridField(diff.spec, diff.values, float(t), diff.margin)


# ---------------------------------------------------------------------------
# Loops, disks and quadrature


def _plane_basis(normal):
    n = np.asarray(normal, dtype=float)
    norm = np.linalg.norm(n)
    if not norm > 0:
        raise ValueError("normal must be nonzero")
    n = n / norm
    helper = np.array([0.0, 1.0, 0.0]) if abs(n[1]) < 0.9 else np.array([0.0, 0.0, 1.0])
    e1 = np.cross(helper, n)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return n, e1, e2


@dataclass(frozen=True)
class SampledLoop:
    """Circle traversed counter-clockwise about ``normal`` with uniform nodes."""

    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0
    normal: tuple = (0.0, 0.0, 1.0)
    samples: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("loop radius must be positive")
        if self.samples < 16:
            raise ValueError("a sampled loop needs at least 16 nodes")
        n, _, _ = _plane_basis(self.normal)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "normal", tuple(float(c) for c in n))

    def angles(self):
        return 2.0 * math.pi * np.arange(self.samples) / self.samples

    def nodes(self):
        _, e1, e2 = _plane_basis(self.normal)
        a = self.angles()[:, None]
        return np.asarray(self.center) + self.radius * (np.cos(a) * e1 + np.sin(a) * e2)

    def tangents(self):
        """Arc-length weighted tangent vectors ``dl`` at each node."""
        _, e1, e2 = _plane_basis(self.normal)
        a = self.angles()[:, None]
        step = 2.0 * math.pi / self.samples
        return self.radius * step * (-np.sin(a) * e1 + np.cos(a) * e2)

    def as_dict(self):
        return {"center": list(self.center), "radius": self.radius,
                "normal": list(self.normal), "samples": self.samples}


@dataclass(frozen=True)
class Disk:
    center: tuple = (0.0, 0.0, 0.0)
    radius: float = 1.0
    normal: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")
        n, _, _ = _plane_basis(self.normal)
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "normal", tuple(float(c) for c in n))

    def boundary(self, samples=64) -> SampledLoop:
        return SampledLoop(self.center, self.radius, self.normal, samples)

    def as_dict(self):
        return {"center": list(self.center), "radius": self.radius, "normal": list(self.normal)}


def interpolate(f: GridField, points) -> np.ndarray:
    """Trilinear interpolation of ``f`` at ``points`` (shape (..., 3)) inside its valid region."""
    pts = np.asarray(points, dtype=float)
    sl = f.interior()
    axes = [ax[s] for ax, s in zip(f.spec.axes(), sl)]
    lo = np.array([a[0] for a in axes])
    hi = np.array([a[-1] for a in axes])
    tol = 1e-12 * np.maximum(1.0, np.abs(hi))
    if np.any(pts < lo - tol) or np.any(pts > hi + tol):
        raise OutsideGridError("quadrature nodes leave the valid region of the grid")
    pts = np.clip(pts, lo, hi)
    # degenerate axes (single valid node) are not interpolable
    if any(len(a) < 2 for a in axes):
        raise GridTooSmallError("valid region is a single node thick")
    interp = RegularGridInterpolator(axes, f.values[sl], method="linear")
    return interp(pts.reshape(-1, 3)).reshape(pts.shape[:-1] + f.values.shape[3:])


def _evaluate(v, pts, t):
    if isinstance(v, GridField):
        return interpolate(v, pts)
    return np.asarray(v(pts[..., 0], pts[..., 1], pts[..., 2], t), dtype=float)


def line_integral(v, loop: SampledLoop, t: float = 0.0) -> float:
    """Trapezoidal circulation of ``v`` (callable ``v(x, y, z, t)`` or vector GridField)."""
    vals = _evaluate(v, loop.nodes(), t)
    if vals.shape != (loop.samples, 3):
        raise ValueError("line_integral needs a 3-vector field")
    return float(np.sum(np.sum(vals * loop.tangents(), axis=1)))


def disk_nodes(disk: Disk, order: int = 32):
    """Polar quadrature nodes and weights: Gauss-Legendre radius x trapezoid angle."""
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    xr, wr = np.polynomial.legendre.leggauss(order)
    r = 0.5 * disk.radius * (xr + 1.0)
    wr = 0.5 * disk.radius * wr * r
    nphi = max(4 * order, 16)
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    _, e1, e2 = _plane_basis(disk.normal)
    rr, pp = np.meshgrid(r, phi, indexing="ij")
    pts = (np.asarray(disk.center) + rr[..., None] * (np.cos(pp)[..., None] * e1
                                                     + np.sin(pp)[..., None] * e2))
    weights = np.repeat(wr[:, None], nphi, axis=1) * (2.0 * math.pi / nphi)
    return pts, weights


def surface_integral(B, disk: Disk, order: int = 32, t: float = 0.0) -> float:
    """Flux of ``B`` through ``disk`` along its normal."""
    pts, w = disk_nodes(disk, order)
    vals = _evaluate(B, pts, t)
    normal_comp = vals @ np.asarray(disk.normal)
    return float(np.sum(normal_comp * w))


# ---------------------------------------------------------------------------
# Serialisation
#
# Binary layout (all little-endian):
#   magic   8 bytes  b"FLDGRID1"
#   dims    3 x int64   (nx, ny, nz)
#   spacing 3 x float64 (hx, hy, hz)
#   origin  3 x float64 (ox, oy, oz)
#   rank    int64       1 = scalar, 3 = vector
#   time    float64     time_tag
#   margin  int64       invalid boundary cells per side
#   values  float64 array, C order over (ix, iy, iz[, component])

MAGIC = b"FLDGRID1"
_HEADER = struct.Struct("<8s3q3d3dqdq")


def to_bytes(f: GridField) -> bytes:
    rank = 1 if f.rank == "scalar" else 3
    header = _HEADER.pack(MAGIC, *f.spec.dims, *f.spec.spacing, *f.spec.origin,
                          rank, f.time_tag, f.margin)
    return header + np.ascontiguousarray(f.values, dtype="<f8").tobytes()


def from_bytes(blob: bytes) -> GridField:
    if len(blob) < _HEADER.size:
        raise ValueError("truncated grid field header")
    magic, nx, ny, nz, hx, hy, hz, ox, oy, oz, rank, t, margin = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError("not a grid field file")
    shape = (nx, ny, nz) if rank == 1 else (nx, ny, nz, 3)
    vals = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    if vals.size != int(np.prod(shape)):
        raise ValueError("value count does not match header")
    spec = GridSpec((ox, oy, oz), (hx, hy, hz), (nx, ny, nz))
    return GridField(spec, vals.reshape(shape), t, margin)


def write_binary(f: GridField, path) -> Path:
    path = Path(path)
    path.write_bytes(to_bytes(f))
    return path


def read_binary(path) -> GridField:
    return from_bytes(Path(path).read_bytes())


def fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(f: GridField, path, z_index: int | None = None) -> Path:
    """Node table; ``z_index`` restricts output to one z slice."""
    path = Path(path)
    x, y, z = f.spec.mesh()
    m = f.margin
    nx, ny, nz = f.spec.dims
    valid = np.zeros(f.spec.dims, dtype=bool)
    valid[m:nx - m, m:ny - m, m:nz - m] = True
    ks = range(nz) if z_index is None else [z_index]
    cols = ["value"] if f.rank == "scalar" else ["vx", "vy", "vz"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", *cols, "valid"])
        for i in range(nx):
            for j in range(ny):
                for k in ks:
                    v = f.values[i, j, k]
                    vs = [fmt(v)] if f.rank == "scalar" else [fmt(c) for c in v]
                    w.writerow([fmt(x[i, j, k]), fmt(y[i, j, k]), fmt(z[i, j, k]), *vs,
                                int(valid[i, j, k])])
    return path
