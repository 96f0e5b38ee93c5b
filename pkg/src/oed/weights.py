"""Optimal design weights over a fixed candidate set.

Solves ``min_w Phi(sum_i w_i mu_i)`` over the probability simplex. The
returned weights satisfy the Kiefer-Wolfowitz condition restricted to the
candidate set: ``phi(xi, x_i) >= -tol`` everywhere and ``|phi(xi, x_i)| <= tol``
on the support, which certifies optimality within the candidates.

The iteration combines multiplicative updates (Titterington's rule for the
D-criterion, the exponent-1/2 rule for A) with occasional monotone
vertex-direction and vertex-exchange line searches that accelerate the
endgame; the E-criterion uses entropic mirror ascent on the smallest
eigenvalue. No external convex solver is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .designs import (
    Criterion,
    SINGULAR_RTOL,
    _as_mu_array,
    _inverse_spd,
    _min_eig_projector,
    criterion_value,
    is_invertible,
)
from .exceptions import ConvergenceError, InvalidInputError, SingularInformationError

SUPPORT_EPS = 1e-6      # weights above this must satisfy |phi| <= tol
TRUNCATE_EPS = 1e-9     # weights below this are zeroed on return
ACCEL_EVERY = 8         # line-search acceleration cadence


@dataclass
class WeightSolution:
    """Result of :func:`optimize_weights`."""

    weights: np.ndarray
    objective: float
    kkt_residual: float     # most negative phi over the candidates
    iterations: int
    converged: bool


def _phi_and_value(w, arr, criterion):
    """Objective, phi vector and validity flag for the current weights."""
    M = np.einsum("i,iab->ab", w, arr)
    M = 0.5 * (M + M.T)
    eig = np.linalg.eigvalsh(M)
    if not (eig[-1] > 0 and eig[0] > SINGULAR_RTOL * eig[-1]):
        return None
    d = M.shape[0]
    if criterion in (Criterion.D, Criterion.LOGD):
        Minv = _inverse_spd(M)
        v = np.einsum("ab,iba->i", Minv, arr)
        phi = d - v
        value = float(-np.sum(np.log(eig)))  # track log-D internally
        return M, value, phi, v
    if criterion is Criterion.A:
        Minv = _inverse_spd(M)
        v = np.einsum("ab,iba->i", Minv @ Minv, arr)
        phi = float(np.trace(Minv)) - v
        return M, float(np.sum(1.0 / eig)), phi, v
    if criterion is Criterion.E:
        lam_min, mult, P = _min_eig_projector(M)
        g = np.einsum("dm,idk,km->i", P, arr, P) / mult
        phi = lam_min - g
        return M, float(1.0 / lam_min), phi, g
    raise InvalidInputError(f"unknown criterion {criterion!r}")


def _segment_value(M0, M1, delta, criterion):
    """Phi((1-delta) M0 + delta M1), +inf when the blend is singular."""
    try:
        return criterion_value((1.0 - delta) * M0 + delta * M1, criterion)
    except SingularInformationError:
        return float("inf")


def _line_search(M0, M1, hi, criterion):
    """Best step in [0, hi] along the matrix segment, by bounded 1-D search."""
    if hi <= 0:
        return 0.0, _segment_value(M0, M1, 0.0, criterion)
    res = minimize_scalar(
        lambda t: _segment_value(M0, M1, t, criterion),
        bounds=(0.0, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    f0 = _segment_value(M0, M1, 0.0, criterion)
    if res.fun < f0:
        return float(res.x), float(res.fun)
    return 0.0, f0


def _accelerate(w, arr, phi, criterion):
    """Monotone vertex-direction and vertex-exchange steps (in place)."""
    M = np.einsum("i,iab->ab", w, arr)
    # Vertex direction: blend mass toward the most negative phi candidate.
    j = int(np.argmin(phi))
    if phi[j] < 0:
        delta, _ = _line_search(M, arr[j], 0.999, criterion)
        if delta > 0:
            w *= 1.0 - delta
            w[j] += delta
            M = np.einsum("i,iab->ab", w, arr)
    # Vertex exchange: move mass from the worst support point to the best
    # candidate. M(t) = M + t*(mu_minus - mu_plus) = (1-t)*M + t*(M + mu_- - mu_+).
    support = np.flatnonzero(w > TRUNCATE_EPS)
    if support.size >= 2:
        jp = support[int(np.argmax(phi[support]))]
        jm = int(np.argmin(phi))
        if jm != jp:
            target = M + arr[jm] - arr[jp]
            delta, _ = _line_search(M, target, float(w[jp]), criterion)
            if delta > 0:
                w[jp] -= delta
                w[jm] += delta
                np.clip(w, 0.0, None, out=w)
    w /= w.sum()
    return w


def optimize_weights(mus, criterion: Criterion, tol: float = 1e-6,
                     max_iterations: int = 100_000, *,
                     warm_start=None) -> WeightSolution:
    """Optimal simplex weights for the given candidate Fisher matrices.

    Raises ``SingularInformationError`` when no weight vector yields an
    invertible information matrix and ``ConvergenceError`` (carrying the best
    iterate as ``best``) when the iteration cap is hit before tolerance.
    """
    arr = _as_mu_array(mus)
    n, d = arr.shape[0], arr.shape[1]
    if tol <= 0:
        raise InvalidInputError("tol must be positive")

    # Uniform weights realize the maximal possible range of M; if that matrix
    # is singular then every simplex combination is singular too.
    uniform = np.full(n, 1.0 / n)
    if not is_invertible(np.einsum("i,iab->ab", uniform, arr)):
        raise SingularInformationError(
            "no simplex combination of the candidates is invertible"
        )

    if warm_start is not None:
        w = np.asarray(warm_start, dtype=float).copy()
        if w.shape != (n,) or w.min() < 0 or w.sum() <= 0:
            raise InvalidInputError("warm_start must be a nonnegative n-vector")
        w = np.maximum(w, 1e-16)
        w /= w.sum()
        if not is_invertible(np.einsum("i,iab->ab", w, arr)):
            w = uniform.copy()
    else:
        w = uniform.copy()

    best_value = np.inf
    best_w = w.copy()
    best_residual = -np.inf
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        state = _phi_and_value(w, arr, criterion)
        if state is None:  # blend drifted singular; restart from uniform
            w = uniform.copy()
            continue
        _, value, phi, v = state
        residual = float(phi.min())
        if value < best_value:
            best_value, best_w, best_residual = value, w.copy(), residual
        support = w > SUPPORT_EPS
        if residual > -tol and np.max(np.abs(phi[support])) <= tol:
            break
        if criterion in (Criterion.D, Criterion.LOGD):
            w = w * (v / d)
        elif criterion is Criterion.A:
            w = w * np.sqrt(np.maximum(v, 0.0))
        else:  # E: entropic mirror ascent on lambda_min with decaying step
            g = v
            scale = max(float(np.max(np.abs(g))), 1e-300)
            eta = 2.0 / (scale * np.sqrt(iterations))
            w = w * np.exp(eta * (g - g.max()))
        s = w.sum()
        if not np.isfinite(s) or s <= 0:
            w = uniform.copy()
            continue
        w /= s
        if iterations % ACCEL_EVERY == 0 and criterion is not Criterion.E:
            w = _accelerate(w, arr, phi, criterion)
    else:
        best = _finalize(best_w, arr, criterion, iterations, converged=False)
        raise ConvergenceError(
            f"weight optimization did not reach tol={tol} within "
            f"{max_iterations} iterations (best residual {best_residual:.3e})",
            best=best,
        )

    if criterion is Criterion.E and best_value < _phi_and_value(w, arr, criterion)[1]:
        w = best_w
    return _finalize(w, arr, criterion, iterations, converged=True)


def _finalize(w, arr, criterion, iterations, converged):
    w = np.where(w < TRUNCATE_EPS, 0.0, w)
    w /= w.sum()
    M = np.einsum("i,iab->ab", w, arr)
    state = _phi_and_value(w, arr, criterion)
    residual = float(state[2].min()) if state is not None else -np.inf
    return WeightSolution(
        weights=w,
        objective=criterion_value(M, criterion),
        kkt_residual=residual,
        iterations=iterations,
        converged=converged,
    )
