"""Paired samples, normalization and the synthetic data generators.

Every generator is a pure function of its arguments and ``seed``; the
ground truth (latent values, noise draws, and the curve itself) travels
with the sample so tests can compare against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.stats import norm


@dataclass(frozen=True)
class GroundTruth:
    t: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    curve: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] = field(repr=False)


@dataclass(frozen=True)
class PairedSample:
    x: np.ndarray
    y: np.ndarray
    normalization: Optional[tuple[tuple[float, float], tuple[float, float]]] = None
    provenance: str = ""
    truth: Optional[GroundTruth] = field(default=None, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-D and of equal length")
        if x.size < 1:
            raise ValueError("empty sample")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def swapped(self) -> "PairedSample":
        norm_ = None if self.normalization is None else self.normalization[::-1]
        truth = None
        if self.truth is not None:
            tr = self.truth
            truth = GroundTruth(tr.t, tr.ny, tr.nx, lambda t, c=tr.curve: c(t)[::-1])
        return PairedSample(self.y, self.x, norm_, self.provenance + " (swapped)", truth)


def normalize(sample: PairedSample) -> PairedSample:
    """Shift and scale each axis to mean 0 and variance 1 (n - 1 denominator).

    Offsets and scales compose with any earlier normalization so that
    :func:`denormalize` always returns to the raw data.
    """
    if sample.n < 2:
        raise ValueError("need at least two points to normalize")
    out = []
    for a in (sample.x, sample.y):
        sd = a.std(ddof=1)
        if not sd > 0:
            raise ValueError("zero variance: cannot normalize")
        out.append((float(a.mean()), float(sd)))
    (mx, sx), (my, sy) = out
    x = (sample.x - mx) / sx
    y = (sample.y - my) / sy
    # second pass removes rounding left by the first
    x = (x - x.mean()) / x.std(ddof=1)
    y = (y - y.mean()) / y.std(ddof=1)
    if sample.normalization is not None:
        (ox, kx), (oy, ky) = sample.normalization
        mx, sx = ox + kx * mx, kx * sx
        my, sy = oy + ky * my, ky * sy
    return replace(sample, x=x, y=y, normalization=((mx, sx), (my, sy)))


def denormalize(sample: PairedSample) -> PairedSample:
    if sample.normalization is None:
        return sample
    (mx, sx), (my, sy) = sample.normalization
    return replace(sample, x=sample.x * sx + mx, y=sample.y * sy + my, normalization=None)


# -- generators ---------------------------------------------------------------

def phi(t, mu: float, sd: float = 0.1) -> np.ndarray:
    return norm.pdf(t, loc=mu, scale=sd)


def gen_section3(n: int = 200, seed: int = 0, noise: float = 0.1) -> PairedSample:
    """X = 4 phi_{-0.1}(T) + 4 phi_{1.1}(T) + N_X,  Y = phi_{-0.1}(T) - phi_{1.1}(T) + N_Y.

    phi_mu is the N(mu, 0.1^2) density, T ~ U[0, 1], noises ~ U[-noise, noise].
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 1.0, n)
    nx = rng.uniform(-noise, noise, n)
    ny = rng.uniform(-noise, noise, n)

    def curve(tt):
        a, b = phi(tt, -0.1), phi(tt, 1.1)
        return 4.0 * a + 4.0 * b, a - b

    u, v = curve(t)
    return PairedSample(u + nx, v + ny, provenance=f"section3 seed={seed}",
                        truth=GroundTruth(t, nx, ny, curve))


@dataclass(frozen=True)
class BumpFamily:
    """sum_j a_j exp(-(t - c_j)^2 / (2 w_j^2)), a linear combination of bumps."""

    amplitudes: np.ndarray
    centers: np.ndarray
    widths: np.ndarray

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)[..., None]
        return (self.amplitudes * np.exp(-0.5 * ((t - self.centers) / self.widths) ** 2)).sum(-1)


def random_bumps(rng: np.random.Generator, count: int, mixed_sign: bool = True) -> BumpFamily:
    """Random bump combination: centers in [0, 1], widths in [0.15, 0.3].

    With ``mixed_sign`` the amplitude signs alternate, which makes the
    function non-monotone on [0, 1] for typical draws.
    """
    if count < 1:
        raise ValueError("need at least one bump")
    centers = np.sort(rng.uniform(0.0, 1.0, count))
    widths = rng.uniform(0.15, 0.3, count)
    amps = rng.uniform(0.5, 1.5, count)
    if mixed_sign:
        amps = amps * np.where(np.arange(count) % 2 == 0, 1.0, -1.0) * rng.choice([-1.0, 1.0])
    else:
        amps = amps * rng.choice([-1.0, 1.0])
    return BumpFamily(amps, centers, widths)


_MONO_GRID = np.linspace(0.0, 1.0, 1001)


def is_monotone(f, grid=_MONO_GRID) -> bool:
    d = np.diff(f(grid))
    return bool(np.all(d > 0) or np.all(d < 0))


def _curve_pair(u: BumpFamily, v: BumpFamily, v_shift: float = 0.0):
    def curve(t):
        return u(t), v(t) + v_shift
    return curve


_CHECK_GRID = np.linspace(0.0, 1.0, 201)


def curve_clearance(curve, min_gap: float = 0.15) -> float:
    """Closest approach of the curve to itself, relative to its extent.

    Only pairs of latent values more than ``min_gap`` apart count, so a
    value near zero means the curve (nearly) crosses itself.
    """
    u, v = curve(_CHECK_GRID)
    d = np.hypot(np.subtract.outer(u, u), np.subtract.outer(v, v))
    far = np.abs(np.subtract.outer(_CHECK_GRID, _CHECK_GRID)) > min_gap
    extent = max(np.ptp(u), np.ptp(v))
    return float(d[far].min() / extent)


def fold_ratio(f) -> float:
    """Total variation over range on [0, 1]; 1 for monotone functions."""
    vals = f(_CHECK_GRID)
    return float(np.abs(np.diff(vals)).sum() / np.ptp(vals))


def folded_curve(rng: np.random.Generator, bump_count: int, tries: int = 1000):
    """Draw u, v until both fold back and the curve keeps clear of itself."""
    for _ in range(tries):
        u = random_bumps(rng, bump_count)
        v = random_bumps(rng, bump_count)
        curve = _curve_pair(u, v)
        if min(fold_ratio(u), fold_ratio(v)) >= 1.2 and curve_clearance(curve) >= 0.2:
            return u, v
    raise RuntimeError(f"no admissible bump curve after {tries} draws")


def _folded(rng: np.random.Generator, bump_count: int, tries: int = 1000) -> BumpFamily:
    for _ in range(tries):
        f = random_bumps(rng, bump_count)
        if fold_ratio(f) >= 1.2:
            return f
    raise RuntimeError(f"no folded bump combination after {tries} draws")


def gen_dataset1(n: int = 200, seed: int = 0, bump_count: int = 3, noise: float = 0.035,
                 ) -> PairedSample:
    """Bump-combination curve with uniform noise on [-noise, noise] in both axes.

    Both coordinates are non-monotone and the curve does not come close to
    crossing itself (see :func:`folded_curve`).
    """
    if bump_count < 2:
        raise ValueError("bump_count must be at least 2")
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    u, v = folded_curve(rng, bump_count)
    t = rng.uniform(0.0, 1.0, n)
    nx = rng.uniform(-noise, noise, n)
    ny = rng.uniform(-noise, noise, n)
    curve = _curve_pair(u, v)
    cu, cv = curve(t)
    return PairedSample(cu + nx, cv + ny, provenance=f"dataset1 seed={seed}",
                        truth=GroundTruth(t, nx, ny, curve))


def monotone_bumps(rng: np.random.Generator, count: int, tries: int = 100) -> BumpFamily:
    """Bump combination that is strictly monotone on [0, 1], by rejection.

    Two wide bumps sit outside [0, 1] with opposite signs, so each is
    monotone in the same direction on the interval; ``count - 2`` smaller
    bumps inside the interval add shape.  Draws that are not monotone on a
    grid are rejected.
    """
    for _ in range(tries):
        sign = rng.choice([-1.0, 1.0])
        centers = [rng.uniform(-0.6, -0.2), rng.uniform(1.2, 1.6)]
        widths = [rng.uniform(0.4, 0.7), rng.uniform(0.4, 0.7)]
        amps = [sign * rng.uniform(0.5, 1.5), -sign * rng.uniform(0.5, 1.5)]
        for _ in range(max(count - 2, 0)):
            centers.append(rng.uniform(0.0, 1.0))
            widths.append(rng.uniform(0.15, 0.3))
            amps.append(rng.uniform(-0.3, 0.3))
        f = BumpFamily(np.array(amps), np.array(centers), np.array(widths))
        if is_monotone(f):
            return f
    raise RuntimeError(f"no monotone bump combination after {tries} draws")


def gen_dataset2(n: int = 200, seed: int = 0, bump_count: int = 3, noise_x: float = 0.008,
                 noise_y: float = 0.0015) -> PairedSample:
    """Invertible v with unequal noises N_X ~ U[-noise_x, noise_x], N_Y ~ U[-noise_y, 0].

    The mean of N_Y (-noise_y / 2) is moved into v so that the recorded
    noise is centered; the observed data are unaffected.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    u = _folded(rng, bump_count)
    v = monotone_bumps(rng, bump_count)
    t = rng.uniform(0.0, 1.0, n)
    nx = rng.uniform(-noise_x, noise_x, n)
    ny_raw = rng.uniform(-noise_y, 0.0, n)
    shift = -0.5 * noise_y
    curve = _curve_pair(u, v, shift)
    cu, cv = curve(t)
    ny = ny_raw - shift
    return PairedSample(cu + nx, cv + ny, provenance=f"dataset2 seed={seed}",
                        truth=GroundTruth(t, nx, ny, curve))


def noise_amplitude_dataset3(t) -> np.ndarray:
    return 0.005 + 0.07 * np.asarray(t, dtype=float)


def gen_dataset3(n: int = 200, seed: int = 0, bump_count: int = 3) -> PairedSample:
    """Like dataset 1, but the noise amplitude grows linearly with T.

    N = a(T) * U[-1, 1] with a(T) = 0.005 + 0.07 T, so noise and latent
    value are dependent.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    u, v = folded_curve(rng, bump_count)
    t = rng.uniform(0.0, 1.0, n)
    a = noise_amplitude_dataset3(t)
    nx = a * rng.uniform(-1.0, 1.0, n)
    ny = a * rng.uniform(-1.0, 1.0, n)
    curve = _curve_pair(u, v)
    cu, cv = curve(t)
    return PairedSample(cu + nx, cv + ny, provenance=f"dataset3 seed={seed}",
                        truth=GroundTruth(t, nx, ny, curve))


GENERATORS = {
    "section3": gen_section3,
    "1": gen_dataset1,
    "2": gen_dataset2,
    "3": gen_dataset3,
    "dataset1": gen_dataset1,
    "dataset2": gen_dataset2,
    "dataset3": gen_dataset3,
}


def generate(name: str, n: int, seed: int) -> PairedSample:
    try:
        gen = GENERATORS[str(name)]
    except KeyError:
        raise ValueError(f"unknown dataset {name!r}") from None
    return gen(n=n, seed=seed)
