"""Matrix functional calculus for the boundary-weight operator.

Everything revolves around one scalar function.  On the disc |z| < 2 sqrt(q)
define

    phi(z) = (z + sqrt(z^2 - 4q)) / 2

with the square root cut along the nonnegative reals (argument taken in
(0, 2pi)).  The cut never meets z^2 - 4q on the disc, phi is holomorphic
there, and phi(z) together with q/phi(z) are the two roots of
t^2 - z t + q = 0.  The principal branch would be wrong on real spectra,
where both roots are complex of modulus sqrt(q).

Applying phi to a matrix alpha of spectral norm < 2 sqrt(q) produces tau
with tau + q tau^{-1} = alpha; tau^{-1} is built from the sibling scalar
function, never by inverting tau, so the inversion residual is a real
check and not a tautology.  Construction is by eigendecomposition when
the eigenvector basis is well conditioned and by a Schur triangular
recurrence otherwise; either way the defining residuals are measured
and a pair whose residuals exceed tolerance is rejected loudly
(IllConditionedError) instead of returned quietly.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    BranchCutError,
    IllConditionedError,
    NumericError,
    OperatorDomainError,
    SpectralGuardError,
)

_EIG_COND_LIMIT = 1e8
_CONFLUENCE_CUTOFF = 1e-9


def spectral_norm(a: np.ndarray, rtol: float = 1e-12, max_iter: int = 10000) -> float:
    """Largest singular value by power iteration on a*a.

    Deterministic start vector; convergence is declared when the Rayleigh
    quotient stabilizes to `rtol` relative accuracy.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise OperatorDomainError(f"expected a square matrix, got shape {a.shape}")
    if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(a.imag))):
        raise OperatorDomainError("matrix has non-finite entries")
    if not a.any():
        return 0.0
    b = a.conj().T @ a
    rng = np.random.default_rng(0x5eed)
    v = rng.standard_normal(a.shape[0]) + 1j * rng.standard_normal(a.shape[0])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = b @ v
        lam = float(np.real(np.vdot(v, w)))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            # v landed in the kernel; the matrix is nonzero, so restart once
            v = rng.standard_normal(a.shape[0]) + 1j * rng.standard_normal(a.shape[0])
            v /= np.linalg.norm(v)
            continue
        v = w / nrm
        if lam > 0 and abs(lam - prev) <= rtol * lam:
            return math.sqrt(lam)
        prev = lam
    raise NumericError(f"power iteration did not stabilize in {max_iter} steps")


def _sqrt_cut(w: complex) -> complex:
    """sqrt with branch cut on the nonnegative real axis, argument in (0, 2pi)."""
    if w.imag == 0.0 and w.real >= 0.0:
        raise BranchCutError(f"argument {w} lies on the branch cut")
    theta = math.atan2(w.imag, w.real)
    if theta <= 0.0:
        theta += 2.0 * math.pi
    return math.sqrt(abs(w)) * cmath.exp(0.5j * theta)


def phi_scalar(z: complex, q: int) -> complex:
    return (z + _sqrt_cut(z * z - 4 * q)) / 2.0


def psi_scalar(z: complex, q: int) -> complex:
    """The sibling root (z - sqrt(z^2 - 4q)) / (2q); equals 1/phi(z)."""
    return (z - _sqrt_cut(z * z - 4 * q)) / (2.0 * q)


def phi_prime_scalar(z: complex, q: int) -> complex:
    return (1.0 + z / _sqrt_cut(z * z - 4 * q)) / 2.0


def psi_prime_scalar(z: complex, q: int) -> complex:
    return (1.0 - z / _sqrt_cut(z * z - 4 * q)) / (2.0 * q)


@dataclass(eq=False)
class OperatorPair:
    """alpha together with tau = phi(alpha), its sibling inverse, and the
    measured residuals of the defining identities."""

    q: int
    alpha: np.ndarray
    tau: np.ndarray
    tau_inv: np.ndarray
    residuals: dict
    tol: float
    _powers: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.alpha.shape[0]


def _apply_scalar_eig(alpha: np.ndarray, fn) -> np.ndarray | None:
    lam, vecs = np.linalg.eig(alpha)
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > _EIG_COND_LIMIT:
        return None
    fl = np.array([fn(z) for z in lam], dtype=np.complex128)
    # right-solve keeps one factorization: F = V diag(fl) V^{-1}
    return np.linalg.solve(vecs.T, (vecs * fl).T).T


def _apply_scalar_schur(alpha: np.ndarray, fn, fn_prime) -> np.ndarray:
    t, zmat = scipy.linalg.schur(alpha, output="complex")
    d = t.shape[0]
    f = np.zeros_like(t)
    for i in range(d):
        f[i, i] = fn(t[i, i])
    scale = max(1.0, float(np.max(np.abs(np.diagonal(t)))))
    for offset in range(1, d):
        for i in range(d - offset):
            j = i + offset
            denom = t[j, j] - t[i, i]
            accum = t[i, j] * (f[j, j] - f[i, i])
            for k in range(i + 1, j):
                accum += f[i, k] * t[k, j] - t[i, k] * f[k, j]
            if abs(denom) > _CONFLUENCE_CUTOFF * scale:
                f[i, j] = accum / denom
            elif offset == 1:
                # adjacent equal eigenvalues: divided difference degenerates
                # to the derivative at the cluster
                f[i, j] = t[i, j] * fn_prime((t[i, i] + t[j, j]) / 2.0)
            else:
                raise IllConditionedError(
                    "eigenvalue cluster too deep for the triangular recurrence",
                    residuals={},
                )
    return zmat @ f @ zmat.conj().T


def build_pair(alpha: np.ndarray, q: int, tol: float = 1e-9) -> OperatorPair:
    """Construct tau = phi(alpha) and tau^{-1} = psi(alpha), verify the
    defining residuals, and package the lot.

    Raises OperatorDomainError when alpha is outside the open disc of
    radius 2 sqrt(q) and IllConditionedError when the computed pair fails
    its own residual bounds.
    """
    alpha = np.ascontiguousarray(alpha, dtype=np.complex128)
    if q < 2:
        raise OperatorDomainError(f"branching parameter must be >= 2, got {q}")
    norm_alpha = spectral_norm(alpha)
    if norm_alpha >= 2.0 * math.sqrt(q):
        raise OperatorDomainError(
            f"spectral norm {norm_alpha:.6g} is not inside the disc of radius "
            f"{2.0 * math.sqrt(q):.6g}"
        )
    tau = _apply_scalar_eig(alpha, lambda z: phi_scalar(z, q))
    tau_inv = _apply_scalar_eig(alpha, lambda z: psi_scalar(z, q)) if tau is not None else None
    if tau is None or tau_inv is None:
        tau = _apply_scalar_schur(
            alpha, lambda z: phi_scalar(z, q), lambda z: phi_prime_scalar(z, q)
        )
        tau_inv = _apply_scalar_schur(
            alpha, lambda z: psi_scalar(z, q), lambda z: psi_prime_scalar(z, q)
        )
    eye = np.eye(alpha.shape[0], dtype=np.complex128)
    residuals = {
        "quad": spectral_norm(tau @ tau - alpha @ tau + q * eye),
        "sum": spectral_norm(tau + q * tau_inv - alpha),
        "inv": spectral_norm(tau @ tau_inv - eye),
    }
    bounds = {
        "quad": tol * (1.0 + norm_alpha**2),
        "sum": tol * (1.0 + norm_alpha),
        "inv": tol * (1.0 + spectral_norm(tau) * spectral_norm(tau_inv)),
    }
    bad = {k: v for k, v in residuals.items() if v > bounds[k]}
    if bad:
        raise IllConditionedError(
            f"functional calculus residuals exceed tolerance: {bad}", residuals=residuals
        )
    return OperatorPair(q=q, alpha=alpha, tau=tau, tau_inv=tau_inv, residuals=residuals, tol=tol)


def power(pair: OperatorPair, k: int) -> np.ndarray:
    """tau^k, negative exponents through the sibling inverse; cached."""
    cache = pair._powers
    if k in cache:
        return cache[k]
    if not cache:
        cache[0] = np.eye(pair.dim, dtype=np.complex128)
        cache[1] = pair.tau
        cache[-1] = pair.tau_inv
        if k in cache:
            return cache[k]
    step = 1 if k > 0 else -1
    nearest = max((j for j in list(cache) if j * step > 0 and abs(j) <= abs(k)), key=abs, default=0)
    value = cache.get(nearest, cache[0])
    base = cache[step] if step in cache else (pair.tau if step > 0 else pair.tau_inv)
    for j in range(abs(nearest), abs(k)):
        value = value @ base
        cache[step * (j + 1)] = value
    return cache[k]


def guard_spectrum(pair: OperatorPair) -> dict:
    """Check the two spectral safety conditions and report the margins.

    (a) the spectrum of tau stays away from +q and -q, and
    (b) tau - tau^{-1} is invertible, with its extreme singular values.
    Violation raises SpectralGuardError; success returns the report.
    """
    lam = np.linalg.eigvals(pair.tau)
    margin = float(np.min(np.minimum(np.abs(lam - pair.q), np.abs(lam + pair.q))))
    sing = scipy.linalg.svdvals(pair.tau - pair.tau_inv)
    smin, smax = float(sing[-1]), float(sing[0])
    report = {
        "margin_to_pm_q": margin,
        "sigma_min_diff": smin,
        "sigma_max_diff": smax,
        "cond_diff": smax / smin if smin > 0 else math.inf,
        "tau_spectrum": [[float(z.real), float(z.imag)] for z in lam],
    }
    if margin <= 0.0 or smin <= 0.0:
        raise SpectralGuardError(f"spectral guard violated: {report}")
    return report


def random_in_disc(d: int, q: int, rng: np.random.Generator, fraction: float = 0.75) -> np.ndarray:
    """Random d x d complex matrix rescaled to `fraction` of the disc radius."""
    if not 0.0 < fraction < 1.0:
        raise OperatorDomainError("fraction must lie strictly between 0 and 1")
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    nrm = spectral_norm(a)
    if nrm == 0.0:
        return np.zeros((d, d), dtype=np.complex128)
    return a * (fraction * 2.0 * math.sqrt(q) / nrm)


def matrix_to_json_obj(a: np.ndarray) -> dict:
    return {
        "d": int(a.shape[0]),
        "entries": [[float(z.real), float(z.imag)] for z in np.asarray(a).ravel()],
    }


def matrix_from_json_obj(obj: dict) -> np.ndarray:
    d = int(obj["d"])
    flat = np.array([complex(re, im) for re, im in obj["entries"]], dtype=np.complex128)
    return flat.reshape(d, d)
