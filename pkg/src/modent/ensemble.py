"""Disorder ensembles: realizations, energy binning and global statistics.

Each realization ``r`` is a pure function of ``(params, seed, r)``. Results are
collected per realization index and reduced in index order, so the output does
not depend on how many workers ran or in which order they finished.
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from modent.eigensolve import SOLVERS, diagonalize
from modent.entanglement import spectrum_concurrence
from modent.errors import ConfigError, ConvergenceFailure
from modent.models import Family, ModelParams, build_hamiltonian

log = logging.getLogger(__name__)

MODES = ("energy", "index")


@dataclass(frozen=True)
class EnsembleSpec:
    """What to average over.

    ``base_seed`` defaults to ``params.seed``. The slowly varying model has no
    disorder, so its sample count is forced to 1.
    """

    params: ModelParams
    samples: int = 1
    energy_bins: int = 100
    energy_range: tuple[float, float] | None = None
    base_seed: int | None = None
    solver: str = "lapack"
    mode: str = "energy"

    def __post_init__(self):
        if isinstance(self.samples, bool) or not isinstance(self.samples, (int, np.integer)) or self.samples < 1:
            raise ConfigError(f"samples: must be a positive integer, got {self.samples!r}")
        if not self.params.family.is_random and self.samples != 1:
            log.info("slowly varying potential is deterministic; using samples=1 instead of %d", self.samples)
            object.__setattr__(self, "samples", 1)
        if isinstance(self.energy_bins, bool) or not isinstance(self.energy_bins, (int, np.integer)) or self.energy_bins < 8:
            raise ConfigError(f"energy_bins: must be an integer >= 8, got {self.energy_bins!r}")
        if self.energy_range is not None:
            lo, hi = (float(x) for x in self.energy_range)
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigError(f"energy_range: need finite E_min < E_max, got {self.energy_range!r}")
            object.__setattr__(self, "energy_range", (lo, hi))
        if self.base_seed is not None:
            object.__setattr__(self, "params", replace(self.params, seed=self.base_seed))
            object.__setattr__(self, "base_seed", None)
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver: expected one of {SOLVERS}, got {self.solver!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {self.mode!r}")

    @property
    def seed(self) -> int:
        return self.params.seed


@dataclass(frozen=True, eq=False)
class BinnedCurve:
    """Ensemble-averaged N<C^beta> against energy.

    Empty bins carry ``count == 0`` and NaN mean/stderr; writers skip them.
    ``out_of_range`` counts states that fell outside a user-fixed energy range.
    """

    bin_centers: np.ndarray
    mean_scaled_concurrence: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    edges: np.ndarray | None = None
    out_of_range: int = 0
    N: int | None = None

    @property
    def populated(self) -> np.ndarray:
        return self.counts > 0

    def __len__(self):
        return self.bin_centers.shape[0]


@dataclass(frozen=True, eq=False)
class GlobalStats:
    """Mean and standard error of N<C> across realizations."""

    mean: float
    stderr: float
    samples: int
    per_realization: np.ndarray


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    m = float(np.mean(values))
    if values.shape[0] < 2:
        return m, 0.0
    return m, float(np.std(values, ddof=1) / np.sqrt(values.shape[0]))


def bin_energies(energies, values, bins: int, energy_range: tuple[float, float] | None = None) -> BinnedCurve:
    """Average ``values`` over uniform energy bins.

    Without ``energy_range`` the bins span the data padded by 1% of its width
    on each side. A point exactly on the upper edge goes to the last bin;
    points outside a fixed range are counted in ``out_of_range``.
    """
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    e = np.asarray(energies, dtype=np.float64).ravel()
    v = np.asarray(values, dtype=np.float64).ravel()
    if e.shape != v.shape:
        raise ValueError("energies and values differ in length")
    if e.shape[0] == 0:
        raise ValueError("no points to bin")
    if energy_range is None:
        lo, hi = float(e.min()), float(e.max())
        pad = 0.01 * (hi - lo) if hi > lo else 0.01 * max(abs(lo), 1.0)
        lo, hi = lo - pad, hi + pad
    else:
        lo, hi = map(float, energy_range)
    edges = np.linspace(lo, hi, bins + 1)
    inside = (e >= lo) & (e <= hi)
    out = int(np.count_nonzero(~inside))
    e, v = e[inside], v[inside]
    idx = np.floor((e - lo) / (hi - lo) * bins).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)

    counts = np.bincount(idx, minlength=bins)
    sums = np.bincount(idx, weights=v, minlength=bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = sums / counts
        dev = np.bincount(idx, weights=(v - mean[idx]) ** 2, minlength=bins)
        stderr = np.where(counts > 1, np.sqrt(dev / np.maximum(counts - 1, 1)) / np.sqrt(counts), 0.0)
    empty = counts == 0
    mean[empty] = np.nan
    stderr[empty] = np.nan
    return BinnedCurve(0.5 * (edges[1:] + edges[:-1]), mean, stderr, counts, edges, out)


def _realization(params: ModelParams, index: int, solver: str):
    try:
        report = spectrum_concurrence(diagonalize(build_hamiltonian(params, index), solver))
    except ConvergenceFailure as exc:
        raise ConvergenceFailure(exc.index, exc.iterations, realization=index, context=exc.context) from exc
    return index, report.energies, report.scaled, report.scaled_global


def _run_chunk(params: ModelParams, indices: list[int], solver: str):
    return [_realization(params, i, solver) for i in indices]


class EnsembleAccumulator:
    """Per-realization results keyed by realization index.

    Merging is a union of disjoint index sets, so partial accumulators can be
    combined in any order; :meth:`finalize` always reduces in index order.
    """

    def __init__(self):
        self._records: dict[int, tuple[np.ndarray, np.ndarray, float]] = {}

    def __len__(self):
        return len(self._records)

    def add(self, index: int, energies, scaled, scaled_global: float) -> None:
        if index in self._records:
            raise ValueError(f"realization {index} added twice")
        self._records[int(index)] = (np.asarray(energies), np.asarray(scaled), float(scaled_global))

    def merge(self, other: "EnsembleAccumulator") -> "EnsembleAccumulator":
        clash = self._records.keys() & other._records.keys()
        if clash:
            raise ValueError(f"overlapping realizations: {sorted(clash)[:5]}")
        out = EnsembleAccumulator()
        out._records = {**self._records, **other._records}
        return out

    def finalize(self, spec: EnsembleSpec) -> tuple[BinnedCurve, GlobalStats]:
        if not self._records:
            raise ValueError("no realizations to aggregate")
        keys = sorted(self._records)
        energies = np.stack([self._records[k][0] for k in keys])
        scaled = np.stack([self._records[k][1] for k in keys])
        glob = np.array([self._records[k][2] for k in keys])
        mean, err = _mean_stderr(glob)
        stats = GlobalStats(mean, err, len(keys), glob)

        if spec.mode == "index":
            centers = energies.mean(axis=0)
            m = scaled.mean(axis=0)
            n = scaled.shape[0]
            se = scaled.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(m)
            counts = np.full(m.shape, n, dtype=np.int64)
            curve = BinnedCurve(centers, m, se, counts, None, 0, spec.params.N)
        else:
            curve = bin_energies(energies, scaled, spec.energy_bins, spec.energy_range)
            curve = replace(curve, N=spec.params.N)
            if curve.out_of_range:
                log.warning("%d eigenvalues fell outside energy_range %s", curve.out_of_range, spec.energy_range)
        return curve, stats


def _chunks(indices: list[int], n: int) -> list[list[int]]:
    size = max(1, -(-len(indices) // n))
    return [indices[i : i + size] for i in range(0, len(indices), size)]


def accumulate(spec: EnsembleSpec, indices=None, workers: int = 1, executor: Executor | None = None) -> EnsembleAccumulator:
    """Run realizations ``indices`` (default: all) into a fresh accumulator."""
    indices = list(range(spec.samples)) if indices is None else [int(i) for i in indices]
    acc = EnsembleAccumulator()
    if executor is None and workers <= 1:
        for i in indices:
            acc.add(*_realization(spec.params, i, spec.solver))
        return acc
    own = executor is None
    pool = executor or ProcessPoolExecutor(max_workers=workers)
    try:
        n_jobs = workers if workers > 1 else 4
        futures = [pool.submit(_run_chunk, spec.params, chunk, spec.solver) for chunk in _chunks(indices, n_jobs)]
        for fut in futures:
            for rec in fut.result():
                acc.add(*rec)
    finally:
        if own:
            pool.shutdown()
    return acc


def run_ensemble(spec: EnsembleSpec, workers: int = 1, executor: Executor | None = None) -> tuple[BinnedCurve, GlobalStats]:
    """Build, diagonalize and analyse every realization, then aggregate.

    Returns the energy-binned curve of N<C^beta> and the statistics of N<C>.
    """
    return accumulate(spec, workers=workers, executor=executor).finalize(spec)
