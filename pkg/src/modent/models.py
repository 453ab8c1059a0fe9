"""On-site potentials and Hamiltonians for the four 1D model families.

Formulas index sites from 1 (``n = storage_index + 1``); arrays are 0-based.
Energies are in units of the hopping ``t`` (chains) or ``J`` (long-range hopping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping

import numpy as np

from modent.errors import ConfigError

RNG_VERSION = "pcg64-seedsequence-v1"
_SEED_MAX = 2**64 - 1


class Family(str, Enum):
    SLOWLY_VARYING = "slowly_varying"
    RANDOM_DIMER = "random_dimer"
    LONG_RANGE_CORRELATED = "long_range_correlated"
    LONG_RANGE_HOPPING = "long_range_hopping"

    @property
    def is_random(self) -> bool:
        return self is not Family.SLOWLY_VARYING


class Boundary(str, Enum):
    OPEN = "open"
    PERIODIC = "periodic"


# config key -> ModelParams attribute
_KEY_TO_ATTR = {"lambda": "lam"}
_ATTR_TO_KEY = {v: k for k, v in _KEY_TO_ATTR.items()}

_COMMON_KEYS = ("family", "N", "seed", "boundary")
_FAMILY_KEYS = {
    Family.SLOWLY_VARYING: ("t", "lambda", "alpha_pi", "nu"),
    Family.RANDOM_DIMER: ("t", "Va", "Vb", "q"),
    Family.LONG_RANGE_CORRELATED: ("t", "alpha"),
    Family.LONG_RANGE_HOPPING: ("W", "mu", "J", "distance"),
}
_REQUIRED = {
    Family.SLOWLY_VARYING: ("lambda",),
    Family.RANDOM_DIMER: ("Va",),
    Family.LONG_RANGE_CORRELATED: ("alpha",),
    Family.LONG_RANGE_HOPPING: ("mu",),
}
MODEL_KEYS = frozenset(_COMMON_KEYS) | {k for ks in _FAMILY_KEYS.values() for k in ks}


def _finite(name: str, value: Any) -> float:
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected a number, got {value!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{name}: must be finite, got {value!r}")
    return x


@dataclass(frozen=True)
class ModelParams:
    """Parameters of one model family.

    Only the fields relevant to ``family`` are used; the others keep their
    defaults and are left out of :meth:`to_mapping`. The slowly varying
    potential is parametrised by ``alpha_pi`` (the product pi*alpha) directly.
    """

    family: Family
    N: int
    t: float = 1.0
    lam: float | None = None
    alpha_pi: float = 0.2
    nu: float = 0.7
    Va: float | None = None
    Vb: float = 1.0
    q: float = 0.5
    alpha: float | None = None
    W: float = 5.0
    mu: float | None = None
    J: float = 1.0
    distance: str = "ring"
    seed: int = 0
    boundary: Boundary | None = None

    def __post_init__(self):
        try:
            fam = Family(self.family)
        except ValueError:
            choices = ", ".join(f.value for f in Family)
            raise ConfigError(f"family: unknown value {self.family!r} (choose from {choices})") from None
        object.__setattr__(self, "family", fam)

        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)) or int(self.N) != self.N:
            raise ConfigError(f"N: expected an integer, got {self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        if self.N < 2:
            raise ConfigError(f"N: need at least 2 sites, got {self.N}")

        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigError(f"seed: expected an integer, got {self.seed!r}")
        if not 0 <= int(self.seed) <= _SEED_MAX:
            raise ConfigError(f"seed: must lie in [0, 2**64), got {self.seed}")
        object.__setattr__(self, "seed", int(self.seed))

        boundary = self.boundary
        if boundary is None:
            boundary = Boundary.PERIODIC if fam is Family.LONG_RANGE_HOPPING else Boundary.OPEN
        try:
            boundary = Boundary(boundary)
        except ValueError:
            raise ConfigError(f"boundary: expected 'open' or 'periodic', got {self.boundary!r}") from None
        object.__setattr__(self, "boundary", boundary)

        for key in _REQUIRED[fam]:
            if getattr(self, _KEY_TO_ATTR.get(key, key)) is None:
                raise ConfigError(f"{key}: required for family {fam.value}")
        for key in _FAMILY_KEYS[fam]:
            attr = _KEY_TO_ATTR.get(key, key)
            if key != "distance":
                object.__setattr__(self, attr, _finite(key, getattr(self, attr)))

        if fam is Family.SLOWLY_VARYING:
            if not 0.0 <= self.nu <= 1.0:
                raise ConfigError(f"nu: must lie in [0, 1], got {self.nu}")
            if self.alpha_pi <= 0:
                raise ConfigError(f"alpha_pi: must be positive, got {self.alpha_pi}")
        elif fam is Family.RANDOM_DIMER:
            if not 0.0 <= self.q <= 1.0:
                raise ConfigError(f"q: must lie in [0, 1], got {self.q}")
            if self.N % 2:
                raise ConfigError(f"N: random dimer chain needs an even site count, got {self.N}")
        elif fam is Family.LONG_RANGE_CORRELATED:
            if self.alpha <= 0:
                raise ConfigError(f"alpha: spectral exponent must be positive, got {self.alpha}")
            if self.N % 2:
                raise ConfigError(f"N: correlated potential needs an even site count, got {self.N}")
        else:
            if self.mu <= 0:
                raise ConfigError(f"mu: hopping exponent must be positive, got {self.mu}")
            if self.W < 0:
                raise ConfigError(f"W: disorder width must be non-negative, got {self.W}")
            if self.distance not in ("ring", "bare"):
                raise ConfigError(f"distance: expected 'ring' or 'bare', got {self.distance!r}")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ModelParams":
        """Build from config keys (``lambda``, ``Va``, ...). Unknown keys are errors."""
        data = dict(data)
        if "family" not in data or "N" not in data:
            missing = [k for k in ("family", "N") if k not in data]
            raise ConfigError(f"missing required keys: {', '.join(missing)}")
        try:
            fam = Family(data["family"])
        except ValueError:
            choices = ", ".join(f.value for f in Family)
            raise ConfigError(f"family: unknown value {data['family']!r} (choose from {choices})") from None
        allowed = set(_COMMON_KEYS) | set(_FAMILY_KEYS[fam])
        if fam is Family.SLOWLY_VARYING and "alpha" in data:
            if "alpha_pi" in data:
                raise ConfigError("alpha and alpha_pi are mutually exclusive")
            data["alpha_pi"] = math.pi * _finite("alpha", data.pop("alpha"))
        for key in data:
            if key not in allowed:
                if key in MODEL_KEYS:
                    raise ConfigError(f"{key}: does not apply to family {fam.value}")
                raise ConfigError(f"{key}: unknown model key")
        missing = [k for k in _REQUIRED[fam] if k not in data]
        if missing:
            raise ConfigError(f"missing required keys for {fam.value}: {', '.join(missing)}")
        kwargs = {_KEY_TO_ATTR.get(k, k): v for k, v in data.items()}
        return cls(**kwargs)

    def to_mapping(self) -> dict[str, Any]:
        """Config-key mapping holding only the keys relevant to the family."""
        out: dict[str, Any] = {
            "family": self.family.value,
            "N": self.N,
            "seed": self.seed,
            "boundary": self.boundary.value,
        }
        for key in _FAMILY_KEYS[self.family]:
            out[key] = getattr(self, _KEY_TO_ATTR.get(key, key))
        return out

    def with_value(self, key: str, value: Any) -> "ModelParams":
        """Copy with one config key changed (used by parameter sweeps)."""
        if key == "delta_v":
            if self.family is not Family.RANDOM_DIMER:
                raise ConfigError("delta_v: only defined for the random dimer model")
            return replace(self, Va=self.Vb + float(value))
        if key == "alpha" and self.family is Family.SLOWLY_VARYING:
            return replace(self, alpha_pi=math.pi * float(value))
        if key not in MODEL_KEYS or key in ("family", "boundary"):
            raise ConfigError(f"{key}: not a sweepable model parameter")
        if key not in _FAMILY_KEYS[self.family] and key not in ("N", "seed"):
            raise ConfigError(f"{key}: does not apply to family {self.family.value}")
        return replace(self, **{_KEY_TO_ATTR.get(key, key): value})


def realization_rng(seed: int, realization_index: int) -> np.random.Generator:
    """Independent PCG64 stream for one disorder realization.

    The stream depends only on ``(seed, realization_index)``, so ensembles are
    reproducible regardless of which worker computes which realization.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(realization_index)])))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PotentialVector:
    values: np.ndarray
    params: ModelParams
    realization_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        if self.values.shape != (self.params.N,):
            raise ValueError(f"potential has shape {self.values.shape}, expected ({self.params.N},)")

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """Real symmetric operator.

    Nearest-neighbour chains are kept as ``diagonal``/``off_diagonal`` (plus a
    ``corner`` coupling between the first and last site under periodic
    boundaries); the long-range hopping model is stored ``dense``.
    """

    N: int
    boundary: Boundary
    diagonal: np.ndarray | None = None
    off_diagonal: np.ndarray | None = None
    corner: float = 0.0
    dense: np.ndarray | None = None
    potential: PotentialVector | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dense is not None:
            object.__setattr__(self, "dense", _frozen(self.dense))
            if self.dense.shape != (self.N, self.N):
                raise ValueError(f"dense matrix has shape {self.dense.shape}, expected {(self.N, self.N)}")
        else:
            object.__setattr__(self, "diagonal", _frozen(self.diagonal))
            object.__setattr__(self, "off_diagonal", _frozen(self.off_diagonal))
            if self.diagonal.shape != (self.N,) or self.off_diagonal.shape != (self.N - 1,):
                raise ValueError("tridiagonal storage needs N diagonal and N-1 off-diagonal entries")

    @property
    def is_tridiagonal(self) -> bool:
        return self.dense is None and self.corner == 0.0

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return np.array(self.dense)
        h = np.diag(self.diagonal)
        idx = np.arange(self.N - 1)
        h[idx, idx + 1] = self.off_diagonal
        h[idx + 1, idx] = self.off_diagonal
        if self.corner:
            h[0, self.N - 1] += self.corner
            h[self.N - 1, 0] += self.corner
        return h

    def matmul(self, x: np.ndarray) -> np.ndarray:
        """``H @ x`` for a vector or a matrix of column vectors."""
        if self.dense is not None:
            return self.dense @ x
        x = np.asarray(x, dtype=np.float64)
        vec = x.ndim == 1
        if vec:
            x = x[:, None]
        d, e = self.diagonal[:, None], self.off_diagonal[:, None]
        y = d * x
        y[:-1] += e * x[1:]
        y[1:] += e * x[:-1]
        if self.corner:
            y[0] += self.corner * x[-1]
            y[-1] += self.corner * x[0]
        return y[:, 0] if vec else y


def build_slowly_varying(params: ModelParams) -> PotentialVector:
    """V_n = lambda * cos(pi*alpha * n**nu), n = 1..N. Deterministic."""
    if params.family is not Family.SLOWLY_VARYING:
        raise ConfigError(f"expected family slowly_varying, got {params.family.value}")
    n = np.arange(1, params.N + 1, dtype=np.float64)
    return PotentialVector(params.lam * np.cos(params.alpha_pi * n**params.nu), params)


def build_random_dimer(params: ModelParams, rng: np.random.Generator, realization_index: int = 0) -> PotentialVector:
    """Binary disorder assigned to site pairs (0,1), (2,3), ...

    Each pair independently takes ``Va`` with probability ``q`` and ``Vb``
    otherwise; both sites of a pair always share the value.
    """
    if params.family is not Family.RANDOM_DIMER:
        raise ConfigError(f"expected family random_dimer, got {params.family.value}")
    if params.N % 2:
        raise ConfigError(f"N: random dimer chain needs an even site count, got {params.N}")
    u = rng.random(params.N // 2)
    pairs = np.where(u < params.q, params.Va, params.Vb)
    return PotentialVector(np.repeat(pairs, 2), params, realization_index)


def correlated_amplitudes(N: int, alpha: float) -> np.ndarray:
    """Mode amplitudes [k**-alpha * (2pi/N)**(1-alpha)]**(1/2) for k = 1..N/2."""
    k = np.arange(1, N // 2 + 1, dtype=np.float64)
    return np.sqrt(k ** (-alpha) * (2.0 * np.pi / N) ** (1.0 - alpha))


def synthesize_correlated(amplitudes: np.ndarray, phases: np.ndarray, N: int, method: str = "direct") -> np.ndarray:
    """Raw sum V_i = sum_k a_k cos(2 pi i k / N + phi_k) for i = 1..N.

    ``direct`` is the O(N^2) reference; ``fft`` evaluates the same sum with an
    inverse FFT.
    """
    amplitudes = np.asarray(amplitudes, dtype=np.float64)
    phases = np.asarray(phases, dtype=np.float64)
    k = np.arange(1, amplitudes.shape[0] + 1, dtype=np.float64)
    if method == "direct":
        i = np.arange(1, N + 1, dtype=np.float64)
        arg = (2.0 * np.pi / N) * np.outer(i, k) + phases
        return np.cos(arg) @ amplitudes
    if method == "fft":
        if amplitudes.shape[0] >= N:
            raise ValueError("fft synthesis needs fewer modes than sites")
        coeff = np.zeros(N, dtype=np.complex128)
        coeff[1 : amplitudes.shape[0] + 1] = amplitudes * np.exp(1j * phases)
        full = np.fft.ifft(coeff) * N  # full[m] = sum_k c_k exp(2 pi i m k / N)
        return np.roll(full.real, -1)  # site i=1..N maps to m = i mod N
    raise ValueError(f"unknown synthesis method {method!r}")


def build_long_range_correlated(
    params: ModelParams, rng: np.random.Generator, realization_index: int = 0, method: str = "direct"
) -> PotentialVector:
    """Power-law correlated potential with spectral density ~ 1/k**alpha.

    Draws N/2 phases uniformly in [0, 2pi), sums the Fourier modes and
    rescales the sequence to zero mean and unit (population) standard deviation.
    """
    if params.family is not Family.LONG_RANGE_CORRELATED:
        raise ConfigError(f"expected family long_range_correlated, got {params.family.value}")
    N = params.N
    phases = rng.random(N // 2) * (2.0 * np.pi)
    raw = synthesize_correlated(correlated_amplitudes(N, params.alpha), phases, N, method)
    raw = raw - raw.mean()
    sd = raw.std()
    if sd == 0.0:
        raise ArithmeticError("correlated potential has zero variance; cannot normalise")
    values = raw / sd
    # second centring pass removes the rounding left by the first
    values -= values.mean()
    return PotentialVector(values, params, realization_index)


def _distance_matrix(N: int, kind: str) -> np.ndarray:
    idx = np.arange(N)
    d = np.abs(idx[:, None] - idx[None, :])
    if kind == "ring":
        d = np.minimum(d, N - d)
    return d


def build_long_range_hopping(params: ModelParams, rng: np.random.Generator, realization_index: int = 0) -> Hamiltonian:
    """Dense H with eps_n ~ U[-W/2, W/2] on the diagonal and J/dist**mu off it."""
    if params.family is not Family.LONG_RANGE_HOPPING:
        raise ConfigError(f"expected family long_range_hopping, got {params.family.value}")
    N = params.N
    eps = rng.uniform(-params.W / 2.0, params.W / 2.0, N)
    dist = _distance_matrix(N, params.distance).astype(np.float64)
    if params.boundary is Boundary.OPEN:
        dist = _distance_matrix(N, "bare").astype(np.float64)
    upper = np.triu_indices(N, k=1)
    h = np.zeros((N, N))
    h[upper] = params.J / dist[upper] ** params.mu
    h = h + h.T  # exact mirror: transpose copies bits
    h[np.diag_indices(N)] = eps
    return Hamiltonian(N, params.boundary, dense=h, potential=PotentialVector(eps, params, realization_index))


def assemble_chain_hamiltonian(potential: PotentialVector, t: float = 1.0, boundary: Boundary | str = Boundary.OPEN) -> Hamiltonian:
    """Nearest-neighbour chain: on-site ``potential``, hopping ``-t``."""
    boundary = Boundary(boundary)
    N = len(potential)
    off = np.full(N - 1, -float(t))
    corner = -float(t) if boundary is Boundary.PERIODIC else 0.0
    return Hamiltonian(N, boundary, diagonal=potential.values, off_diagonal=off, corner=corner, potential=potential)


def build_potential(params: ModelParams, realization_index: int = 0, method: str = "direct") -> PotentialVector:
    """On-site potential of one realization of a chain family."""
    fam = params.family
    if fam is Family.SLOWLY_VARYING:
        return build_slowly_varying(params)
    rng = realization_rng(params.seed, realization_index)
    if fam is Family.RANDOM_DIMER:
        return build_random_dimer(params, rng, realization_index)
    if fam is Family.LONG_RANGE_CORRELATED:
        return build_long_range_correlated(params, rng, realization_index, method)
    raise ConfigError("long_range_hopping has no separate potential; use build_hamiltonian")


def build_hamiltonian(params: ModelParams, realization_index: int = 0) -> Hamiltonian:
    """Hamiltonian of realization ``realization_index`` of ``params``."""
    if params.family is Family.LONG_RANGE_HOPPING:
        return build_long_range_hopping(params, realization_rng(params.seed, realization_index), realization_index)
    return assemble_chain_hamiltonian(build_potential(params, realization_index), params.t, params.boundary)
