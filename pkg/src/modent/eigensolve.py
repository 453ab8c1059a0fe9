"""Full eigendecomposition of real symmetric Hamiltonians.

The native route is Householder reduction to tridiagonal form followed by the
implicit-shift QL algorithm with the orthogonal accumulator carried along.
``solver="lapack"`` routes the same request through LAPACK (``stemr`` for
tridiagonal input, ``syevd`` for dense) and returns the same :class:`Spectrum`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from modent.errors import ConvergenceFailure
from modent.models import Hamiltonian

MAX_SWEEPS = 50
DEGENERACY_TOL = 1e-10
SOLVERS = ("native", "lapack")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenpairs in ascending energy order.

    ``states[:, b]`` holds the amplitudes of eigenstate ``b``; columns are
    orthonormal. ``residual_norm`` is max_b ||H psi_b - E_b psi_b||_2.
    """

    energies: np.ndarray
    states: np.ndarray
    residual_norm: float

    @property
    def N(self) -> int:
        return self.energies.shape[0]

    def state(self, beta: int) -> np.ndarray:
        return self.states[:, beta]


def householder_tridiagonalize(h: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reduce a dense symmetric matrix to tridiagonal form.

    Returns ``(diagonal, off_diagonal, q)`` with ``q.T @ h @ q`` equal to the
    tridiagonal matrix. Columns whose sub-subdiagonal part is already zero are
    left untouched, so tridiagonal input comes back unchanged with ``q = I``.
    """
    a = np.array(h, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1 :, k]
        tail = np.linalg.norm(x[1:])
        if tail == 0.0:
            continue
        xnorm = math.hypot(x[0], tail)
        sign = 1.0 if x[0] >= 0.0 else -1.0
        v = x.copy()
        v[0] += sign * xnorm
        beta = 2.0 / (v @ v)

        sub = a[k + 1 :, k + 1 :]
        p = beta * (sub @ v)
        w = p - (0.5 * beta * (p @ v)) * v
        sub -= np.outer(v, w)
        sub -= np.outer(w, v)
        a[k + 1, k] = a[k, k + 1] = -sign * xnorm
        a[k + 2 :, k] = 0.0
        a[k, k + 2 :] = 0.0

        qs = q[:, k + 1 :]
        qs -= beta * np.outer(qs @ v, v)
    return np.diag(a).copy(), np.diag(a, -1).copy(), q


@njit(cache=True)
def _tql2(d, e, zt, max_sweeps):
    # JAMA/EISPACK tql2. zt holds the accumulator transposed (row i = column i)
    # so the rotations touch contiguous memory. Returns -1 or the failing index.
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0**-52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_sweeps:
                    return l
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h

                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        zi1 = zt[i + 1, k]
                        zi = zt[i, k]
                        zt[i + 1, k] = s * zi + c * zi1
                        zt[i, k] = c * zi - s * zi1
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return -1


def _reorthonormalize_clusters(energies: np.ndarray, states: np.ndarray) -> None:
    """Modified Gram-Schmidt inside numerically degenerate clusters (in place)."""
    n = energies.shape[0]
    if n < 2:
        return
    spread = energies[-1] - energies[0]
    tol = DEGENERACY_TOL * spread if spread > 0 else 0.0
    start = 0
    for i in range(1, n + 1):
        if i < n and energies[i] - energies[i - 1] <= tol:
            continue
        if i - start > 1:
            block = states[:, start:i]
            for j in range(block.shape[1]):
                for k in range(j):
                    block[:, j] -= (block[:, k] @ block[:, j]) * block[:, k]
                block[:, j] /= np.linalg.norm(block[:, j])
        start = i


def _tridiagonal_matmul(d, e, x):
    y = d[:, None] * x
    y[:-1] += e[:, None] * x[1:]
    y[1:] += e[:, None] * x[:-1]
    return y


def _residual(apply_h, energies, states) -> float:
    if energies.shape[0] == 0:
        return 0.0
    r = apply_h(states) - states * energies
    return float(np.max(np.linalg.norm(r, axis=0)))


def _finish(energies, states, apply_h) -> Spectrum:
    order = np.argsort(energies, kind="stable")
    energies = np.ascontiguousarray(energies[order])
    states = np.ascontiguousarray(states[:, order])
    _reorthonormalize_clusters(energies, states)
    res = _residual(apply_h, energies, states)
    energies.setflags(write=False)
    states.setflags(write=False)
    return Spectrum(energies, states, res)


def tql_implicit(diagonal, off_diagonal, q=None, operator=None, max_sweeps: int = MAX_SWEEPS) -> Spectrum:
    """Eigenpairs of a symmetric tridiagonal matrix by implicit-shift QL.

    ``q`` is the accumulator from :func:`householder_tridiagonalize` (identity
    when omitted); returned states are ``q`` times the tridiagonal eigenvectors.
    The residual is measured against ``operator`` (a :class:`Hamiltonian` or an
    array) when given, otherwise against the tridiagonal matrix itself.

    Raises :class:`ConvergenceFailure` if any eigenvalue needs more than
    ``max_sweeps`` QL iterations.
    """
    d = np.array(diagonal, dtype=np.float64, copy=True)
    n = d.shape[0]
    e = np.zeros(n)
    off = np.asarray(off_diagonal, dtype=np.float64)
    if off.shape != (max(n - 1, 0),):
        raise ValueError(f"need {n - 1} off-diagonal entries, got {off.shape}")
    e[1:] = off
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
        raise ValueError("tridiagonal matrix has non-finite entries")
    zt = np.eye(n) if q is None else np.array(np.asarray(q, dtype=np.float64).T, order="C", copy=True)
    if n:
        failed = _tql2(d, e, zt, max_sweeps)
        if failed >= 0:
            raise ConvergenceFailure(int(failed), max_sweeps)
    states = zt.T

    if operator is not None:
        apply_h = operator.matmul if isinstance(operator, Hamiltonian) else (lambda x: operator @ x)
    elif q is None:
        apply_h = lambda x: _tridiagonal_matmul(np.asarray(diagonal, float), off, x)  # noqa: E731
    else:
        qm = np.asarray(q, dtype=np.float64)
        apply_h = lambda x: qm @ _tridiagonal_matmul(np.asarray(diagonal, float), off, qm.T @ x)  # noqa: E731
    return _finish(d, states, apply_h)


def _lapack(h: Hamiltonian) -> Spectrum:
    from scipy.linalg import eigh_tridiagonal

    if h.is_tridiagonal:
        if h.N == 1:
            w, v = np.array(h.diagonal, copy=True), np.ones((1, 1))
        else:
            w, v = eigh_tridiagonal(h.diagonal, h.off_diagonal)
    else:
        w, v = np.linalg.eigh(h.to_dense())
    return _finish(w, v, h.matmul)


def diagonalize(h: Hamiltonian, solver: str = "native") -> Spectrum:
    """All N eigenpairs of ``h``, ascending.

    Tridiagonal Hamiltonians go straight to the QL iteration; dense ones
    (long-range hopping, periodic chains) are reduced by Householder first.
    """
    if solver == "lapack":
        return _lapack(h)
    if solver != "native":
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    if h.is_tridiagonal:
        return tql_implicit(h.diagonal, h.off_diagonal, operator=h)
    d, e, q = householder_tridiagonalize(h.to_dense())
    return tql_implicit(d, e, q, operator=h)
