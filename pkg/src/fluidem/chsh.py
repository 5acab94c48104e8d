"""Monte Carlo of the line-of-force account of a CHSH polariser experiment.

Each trial: the source stimulates a line of force at 0 or pi/2 (uniform).
The packet heading to A passes its polariser, and is detected, only for the
0 line.  The packet heading to B re-couples to B's line at ``phi`` with
probability ``cos^2(theta_src - phi)`` and is detected only then.

Randomness is counter based: trial ``i`` of stream ``s`` reads the four
64-bit words of Philox4x64 block ``i`` under key ``(seed, s)``.  Word 0 picks
the source line (top bit), word 1 drives the coupling draw.  Any split of the
trial range therefore reproduces the serial tally exactly.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

RNG_ALGORITHM = "philox4x64-10; key=(seed, stream); block=trial index; words: 0=source, 1=coupling"
_CHUNK = 1 << 20
_U53 = 2.0**-53


@dataclass(frozen=True)
class ChshConfig:
    alpha_a: float = 0.0
    alpha_b: float = 0.0
    trials: int = 100_000
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @property
    def phi(self) -> float:
        return self.alpha_b - self.alpha_a


@dataclass(frozen=True)
class TrialOutcome:
    detected_a: bool
    detected_b: bool
    source_line: float


@dataclass(frozen=True)
class TrialTally:
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int

    @property
    def n(self) -> int:
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    @property
    def correlation(self) -> float:
        return (self.n_pp + self.n_mm - self.n_pm - self.n_mp) / self.n

    @property
    def stderr(self) -> float:
        e = self.correlation
        return math.sqrt(max(0.0, 1.0 - e * e) / self.n)

    @property
    def singles_a(self) -> float:
        return (self.n_pp + self.n_pm) / self.n

    @property
    def singles_b(self) -> float:
        return (self.n_pp + self.n_mp) / self.n

    def __add__(self, other: "TrialTally") -> "TrialTally":
        return TrialTally(self.n_pp + other.n_pp, self.n_pm + other.n_pm,
                          self.n_mp + other.n_mp, self.n_mm + other.n_mm)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(n=self.n, E=self.correlation, stderr=self.stderr,
                   singles_a=self.singles_a, singles_b=self.singles_b)
        return out


def _words(seed: int, stream: int, start: int, count: int) -> np.ndarray:
    bg = np.random.Philox(key=[seed, stream])
    if start:
        bg.advance(start)
    return bg.random_raw(4 * count).reshape(count, 4)


def _uniform(words) -> np.ndarray:
    # (0, 1]: u <= p is never true for p = 0 and always true for p = 1
    return ((words >> np.uint64(11)).astype(np.float64) + 1.0) * _U53


def _resolve(phi, source_bits, u):
    """Vectorised trial rule.  ``source_bits`` 0 -> line at 0, 1 -> line at pi/2."""
    theta = np.where(source_bits == 0, 0.0, 0.5 * math.pi)
    p_couple = np.cos(theta - phi) ** 2
    det_a = source_bits == 0
    det_b = u <= p_couple
    return det_a, det_b


def run_trial(phi: float, seed: int, index: int, stream: int = 0,
              source_line: float | None = None) -> TrialOutcome:
    """One trial drawn from counter block ``index``.

    ``source_line`` (0 or pi/2) overrides the random source choice while
    keeping the coupling draw, which pins the deterministic branches.
    """
    w = _words(seed, stream, index, 1)[0]
    if source_line is None:
        bit = int(w[0] >> np.uint64(63))
    elif source_line == 0:
        bit = 0
    elif math.isclose(source_line, 0.5 * math.pi):
        bit = 1
    else:
        raise ValueError("source_line must be 0 or pi/2")
    det_a, det_b = _resolve(phi, np.array([bit]), _uniform(w[1:2]))
    return TrialOutcome(bool(det_a[0]), bool(det_b[0]), 0.0 if bit == 0 else 0.5 * math.pi)


def _tally_range(phi, seed, stream, start, count) -> TrialTally:
    w = _words(seed, stream, start, count)
    bits = (w[:, 0] >> np.uint64(63)).astype(np.int64)
    det_a, det_b = _resolve(phi, bits, _uniform(w[:, 1]))
    pp = int(np.count_nonzero(det_a & det_b))
    pm = int(np.count_nonzero(det_a & ~det_b))
    mp = int(np.count_nonzero(~det_a & det_b))
    return TrialTally(pp, pm, mp, count - pp - pm - mp)


def run_experiment(config: ChshConfig, workers: int = 1, chunk: int = _CHUNK) -> TrialTally:
    """Tally ``config.trials`` trials; identical for any ``workers``/``chunk``."""
    phi = config.phi
    ranges = [(s, min(chunk, config.trials - s)) for s in range(0, config.trials, chunk)]
    job = lambda r: _tally_range(phi, config.seed, config.stream, r[0], r[1])  # noqa: E731
    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, ranges))
    else:
        parts = [job(r) for r in ranges]
    total = TrialTally(0, 0, 0, 0)
    for p in parts:
        total = total + p
    return total


def correlation_analytic(phi):
    return np.cos(2.0 * np.asarray(phi, dtype=float)) if np.ndim(phi) else math.cos(2.0 * phi)


CANONICAL_ANGLES = (0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)


def chsh_statistic(angles=CANONICAL_ANGLES, trials: int | None = None, seed: int = 0,
                   workers: int = 1):
    """``S = E(a,b) - E(a,b') + E(a',b) + E(a',b')``.

    Analytic when ``trials`` is None; otherwise Monte Carlo with one
    independent stream per setting pair.  Returns ``(S, details)``.
    """
    a, a2, b, b2 = angles
    pairs = [(a, b, +1), (a, b2, -1), (a2, b, +1), (a2, b2, +1)]
    total, details = 0.0, []
    for stream, (x, y, sign) in enumerate(pairs):
        if trials is None:
            e = correlation_analytic(y - x)
            entry = {"alpha_a": x, "alpha_b": y, "sign": sign, "E": e}
        else:
            tally = run_experiment(ChshConfig(x, y, trials, seed, stream), workers)
            e = tally.correlation
            entry = {"alpha_a": x, "alpha_b": y, "sign": sign, "stream": stream, **tally.as_dict()}
        total += sign * e
        details.append(entry)
    return total, details


def correlation_curve(points: int = 19, trials: int = 100_000, seed: int = 0, workers: int = 1):
    """Rows ``(phi, E_hat, stderr, cos 2 phi)`` for ``phi`` evenly spaced on [0, pi]."""
    rows = []
    for i, phi in enumerate(np.linspace(0.0, math.pi, points)):
        tally = run_experiment(ChshConfig(0.0, float(phi), trials, seed, i), workers)
        rows.append((float(phi), tally.correlation, tally.stderr,
                     float(correlation_analytic(float(phi))), tally))
    return rows
