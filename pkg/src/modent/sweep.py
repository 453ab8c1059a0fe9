"""Parameter sweeps of N<C>, transition estimates and mobility edges."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping

import numpy as np
from scipy.signal import find_peaks

from modent.ensemble import BinnedCurve, EnsembleSpec, GlobalStats, run_ensemble
from modent.errors import ConfigError, ConvergenceFailure
from modent.models import Family

log = logging.getLogger(__name__)

DEFAULT_EDGE_THRESHOLD = 0.8
PEAK_PROMINENCE = 0.1
JUMP_FACTOR = 3.0
FLAT_FACTOR = 10.0

# samples per system size for the long-range hopping ensembles
HOPPING_SAMPLES = {200: 200, 400: 100, 800: 50}


class Method(str, Enum):
    MAX_SLOPE = "max_slope"
    MAX_CURVATURE = "max_curvature"
    JUMP = "jump"
    LINEAR_FIT = "linear_fit"


@dataclass(frozen=True)
class TransitionEstimate:
    location: float
    method: Method
    uncertainty: float
    max_slope: float


@dataclass(frozen=True)
class MobilityEdgeEstimate:
    lower_edge: float | None
    upper_edge: float | None
    threshold: float
    N: int | None
    advisory: bool = False


def _prepare(grid, values, min_points=5):
    x = np.asarray(grid, dtype=np.float64)
    y = np.asarray(values, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("grid and values must be 1D arrays of equal length")
    if x.shape[0] < min_points:
        raise ValueError(f"need at least {min_points} grid points, got {x.shape[0]}")
    if np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    return x, y


def _is_flat(y, stderr) -> bool:
    span = float(y.max() - y.min())
    se = 0.0 if stderr is None else float(np.mean(np.broadcast_to(np.asarray(stderr, dtype=np.float64), y.shape)))
    return span == 0.0 or span < FLAT_FACTOR * se


def max_slope(grid, values) -> TransitionEstimate:
    x, y = _prepare(grid, values, 2)
    slopes = np.diff(y) / np.diff(x)
    i = int(np.argmax(np.abs(slopes)))
    return TransitionEstimate(0.5 * (x[i] + x[i + 1]), Method.MAX_SLOPE, float(x[i + 1] - x[i]), float(abs(slopes[i])))


def max_curvature(grid, values) -> TransitionEstimate:
    """Interior grid point with the largest absolute second divided difference."""
    x, y = _prepare(grid, values, 3)
    s = np.diff(y) / np.diff(x)
    curv = 2.0 * np.diff(s) / (x[2:] - x[:-2])
    i = int(np.argmax(np.abs(curv))) + 1
    return TransitionEstimate(float(x[i]), Method.MAX_CURVATURE, float(0.5 * (x[i + 1] - x[i - 1])), float(np.abs(s).max()))


def jump(grid, values) -> TransitionEstimate | None:
    """Midpoint of the largest step, if it exceeds 3x the median absolute step."""
    x, y = _prepare(grid, values, 2)
    steps = np.abs(np.diff(y))
    i = int(np.argmax(steps))
    if steps[i] <= JUMP_FACTOR * np.median(steps):
        return None
    slope = np.abs(np.diff(y) / np.diff(x)).max()
    return TransitionEstimate(0.5 * (x[i] + x[i + 1]), Method.JUMP, float(x[i + 1] - x[i]), float(slope))


def linear_fit_departure(grid, values, fit_below: float | None = None, stderr=None, k: float = 3.0) -> TransitionEstimate | None:
    """First grid point past the fit window that leaves the fitted line.

    A straight line is fitted to the points with ``grid < fit_below`` (default:
    the first half of the grid); the departure threshold is ``k`` times the
    larger of the fit's RMS residual and the mean standard error.
    """
    x, y = _prepare(grid, values, 5)
    window = x < fit_below if fit_below is not None else np.arange(x.shape[0]) < x.shape[0] // 2
    if np.count_nonzero(window) < 2:
        raise ValueError("linear fit window needs at least two points")
    slope, icpt = np.polyfit(x[window], y[window], 1)
    resid = y - (slope * x + icpt)
    rms = float(np.sqrt(np.mean(resid[window] ** 2)))
    se = 0.0 if stderr is None else float(np.mean(stderr))
    tol = k * max(rms, se)
    beyond = np.flatnonzero(~window & (np.abs(resid) > tol))
    if beyond.size == 0:
        return None
    i = int(beyond[0])
    return TransitionEstimate(float(x[i]), Method.LINEAR_FIT, float(np.median(np.diff(x))), float(np.abs(np.diff(y) / np.diff(x)).max()))


def detect_transition(grid, values, stderr=None, method: Method | str | None = None) -> TransitionEstimate | None:
    """Locate a jump or inflexion in a concurrence-vs-parameter curve.

    By default a jump is reported when one step exceeds three times the median
    absolute step; otherwise the point of maximum curvature is returned.
    Returns None for a flat curve (span below 10x the mean standard error).
    """
    x, y = _prepare(grid, values)
    if _is_flat(y, stderr):
        return None
    if method is None:
        return jump(x, y) or max_curvature(x, y)
    method = Method(method)
    if method is Method.MAX_SLOPE:
        return max_slope(x, y)
    if method is Method.MAX_CURVATURE:
        return max_curvature(x, y)
    if method is Method.JUMP:
        return jump(x, y)
    return linear_fit_departure(x, y, stderr=stderr)


def all_estimates(grid, values, stderr=None) -> dict[Method, TransitionEstimate | None]:
    x, y = _prepare(grid, values)
    if _is_flat(y, stderr):
        return {m: None for m in Method}
    return {
        Method.MAX_SLOPE: max_slope(x, y),
        Method.MAX_CURVATURE: max_curvature(x, y),
        Method.JUMP: jump(x, y),
        Method.LINEAR_FIT: linear_fit_departure(x, y, stderr=stderr),
    }


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def detect_mobility_edges(curve: BinnedCurve, threshold: float = DEFAULT_EDGE_THRESHOLD, advisory: bool = False) -> MobilityEdgeEstimate:
    """Outermost crossings of ``threshold`` by the binned N<C^beta> curve.

    Crossings are linearly interpolated between neighbouring populated bins.
    The lower edge is absent when the lowest bin is already above threshold
    (and likewise for the upper edge); both are absent when no bin reaches it.
    """
    mask = curve.populated
    if np.count_nonzero(mask) < 16:
        raise ValueError(f"need at least 16 populated bins, got {np.count_nonzero(mask)}")
    x = curve.bin_centers[mask]
    y = curve.mean_scaled_concurrence[mask]
    above = np.flatnonzero(y >= threshold)
    lower = upper = None
    if above.size:
        i, j = int(above[0]), int(above[-1])
        if i > 0:
            lower = float(_crossing(x[i - 1], y[i - 1], x[i], y[i], threshold))
        if j < x.shape[0] - 1:
            upper = float(_crossing(x[j], y[j], x[j + 1], y[j + 1], threshold))
    return MobilityEdgeEstimate(lower, upper, float(threshold), curve.N, advisory)


def local_maxima(curve: BinnedCurve, window: int = 3, min_prominence: float = PEAK_PROMINENCE) -> np.ndarray:
    """Energies of the bumps in a binned curve after a ``window``-bin moving average.

    A maximum counts only if its prominence exceeds ``min_prominence`` times
    the range of the smoothed curve, which discards bin-to-bin noise in the
    localized tails. Pass ``min_prominence=0`` to get every strict maximum.
    """
    mask = curve.populated
    x = curve.bin_centers[mask]
    y = curve.mean_scaled_concurrence[mask]
    if window < 1 or window > y.shape[0]:
        raise ValueError(f"window must be in [1, {y.shape[0]}], got {window}")
    ys = np.convolve(y, np.ones(window) / window, mode="valid")
    xs = x[window // 2 : window // 2 + ys.shape[0]]
    span = float(ys.max() - ys.min())
    peaks, _ = find_peaks(ys, prominence=min_prominence * span if min_prominence > 0 else None)
    return xs[peaks]


def mobility_edges_for(spec: EnsembleSpec, curve: BinnedCurve, threshold: float = DEFAULT_EDGE_THRESHOLD) -> MobilityEdgeEstimate:
    # the dimer model has no sharp edge; its estimate is flagged advisory
    return detect_mobility_edges(curve, threshold, advisory=spec.params.family is Family.RANDOM_DIMER)


@dataclass(frozen=True, eq=False)
class SweepResult:
    """N<C> against one control parameter for several system sizes."""

    parameter: str
    grid: np.ndarray
    sizes: tuple[int, ...]
    means: dict[int, np.ndarray]
    stderrs: dict[int, np.ndarray]
    samples: dict[int, int]
    transition_estimates: dict[int, TransitionEstimate | None]
    estimates: dict[int, dict[Method, TransitionEstimate | None]] = field(default_factory=dict)

    @property
    def per_N(self) -> dict[int, list[tuple[float, float]]]:
        return {n: list(zip(self.means[n].tolist(), self.stderrs[n].tolist())) for n in self.sizes}


def grid_seed(base_seed: int, grid_index: int) -> int:
    """64-bit seed for the ensemble at one grid point."""
    return int(np.random.SeedSequence([int(base_seed), int(grid_index)]).generate_state(1, np.uint64)[0])


def default_samples(family: Family, N: int, fallback: int) -> int:
    if family is Family.LONG_RANGE_HOPPING:
        return HOPPING_SAMPLES.get(N, fallback)
    return fallback


def sweep_parameter(
    base: EnsembleSpec,
    parameter: str,
    grid,
    sizes,
    samples: int | Mapping[int, int] | None = None,
    workers: int = 1,
    progress: Callable[[int, float, GlobalStats], None] | None = None,
) -> SweepResult:
    """Run one ensemble per (grid value, size) and estimate transitions.

    The ensemble at grid index ``i`` uses seed ``grid_seed(base.seed, i)`` for
    every size, so any single point can be reproduced on its own.
    ``samples`` may be a mapping N -> count; the default is ``base.samples``.
    """
    x = np.asarray(grid, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] == 0:
        raise ConfigError("grid: must be a nonempty list of values")
    if np.any(np.diff(x) <= 0):
        raise ConfigError("grid: values must be strictly increasing")
    sizes = tuple(int(n) for n in sizes)
    if not sizes:
        raise ConfigError("sizes: need at least one system size")
    base.params.with_value(parameter, x[0])  # validates the parameter name

    means, errs, used = {}, {}, {}
    for N in sizes:
        if isinstance(samples, Mapping):
            n_samples = int(samples[N])
        elif samples is not None:
            n_samples = int(samples)
        else:
            n_samples = base.samples
        m = np.empty(x.shape[0])
        e = np.empty(x.shape[0])
        for i, value in enumerate(x):
            params = replace(base.params.with_value(parameter, float(value)), N=N, seed=grid_seed(base.seed, i))
            spec = replace(base, params=params, samples=n_samples)
            try:
                _, stats = run_ensemble(spec, workers=workers)
            except ConvergenceFailure as exc:
                ctx = f"{parameter}={value}, N={N}"
                raise ConvergenceFailure(exc.index, exc.iterations, exc.realization, ctx) from exc
            m[i], e[i] = stats.mean, stats.stderr
            used[N] = spec.samples
            if progress is not None:
                progress(N, float(value), stats)
        means[N], errs[N] = m, e

    headline, every = {}, {}
    for N in sizes:
        if x.shape[0] >= 5:
            headline[N] = detect_transition(x, means[N], errs[N])
            every[N] = all_estimates(x, means[N], errs[N])
        else:
            headline[N], every[N] = None, {}
    return SweepResult(parameter, x, sizes, means, errs, used, headline, every)
