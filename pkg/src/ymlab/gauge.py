"""Gauge-covariant geometry on the lattice.

Connections and electric fields are arrays of shape (3, d, n, n, n): spatial
component, algebra direction, sites.  Curvature is stored on the index pairs
PAIRS = ((0,1), (0,2), (1,2)); F_{ji} = -F_{ij} by convention.  Group fields
are (4, n, n, n) unit quaternions for SU(2) and (1, n, n, n) phases for U(1).
"""

from __future__ import annotations

import warnings

import numpy as np

from . import algebra as alg
from .algebra import StructureSpec, bracket
from .grid import Grid
from .spectral import (dealias, derivative_hat, divergence, gradient,
                       inverse_laplacian)

PAIRS = ((0, 1), (0, 2), (1, 2))
_PAIR_INDEX = {(0, 1): (0, 1.0), (1, 0): (0, -1.0),
               (0, 2): (1, 1.0), (2, 0): (1, -1.0),
               (1, 2): (2, 1.0), (2, 1): (2, -1.0)}


class ConvergenceError(RuntimeError):
    """Iterative gauge solver failed to contract."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])


def pair_component(F: np.ndarray, i: int, j: int) -> np.ndarray:
    """F_{ij} from pair storage, with antisymmetry."""
    idx, sign = _PAIR_INDEX[(i, j)]
    return sign * F[idx]


def curvature(grid: Grid, A: np.ndarray, spec: StructureSpec,
              E: np.ndarray | None = None):
    """Magnetic curvature F_ij = d_i A_j - d_j A_i + [A_i, A_j].

    Returns the pair-indexed magnetic field; the electric components F_{0i}
    are whatever E supplies (returned alongside when given).
    """
    Ah = grid.fft(A)
    mag = []
    for i, j in PAIRS:
        lin = grid.ifft(derivative_hat(grid, Ah[j], i) - derivative_hat(grid, Ah[i], j))
        mag.append(lin + dealias(grid, bracket(A[i], A[j], spec)))
    Fmag = np.stack(mag)
    return (Fmag, E) if E is not None else Fmag


def covariant_derivative(grid: Grid, A: np.ndarray, B: np.ndarray, axis: int,
                         spec: StructureSpec) -> np.ndarray:
    """Spatial covariant derivative D_a B = d_a B + [A_a, B].

    The temporal direction needs a time stencil and lives in the heat-flow
    module.
    """
    if axis == 0 and A.shape[0] == 4:
        raise ValueError("temporal covariant derivative requires a time stencil")
    dB = grid.ifft(derivative_hat(grid, grid.fft(B), axis))
    return dB + dealias(grid, bracket(A[axis], B, spec))


def mc_derivative(grid: Grid, U: np.ndarray, spec: StructureSpec,
                  return_residual: bool = False):
    """(d_i U) U^{-1} as an algebra-valued 3-component field.

    Uses the logarithm chart (exact tangency, spectral derivative of log U)
    where the chart is single-valued; falls back to componentwise spectral
    derivatives of the group element followed by tangent projection.
    """
    if spec.name == "u1":
        out = gradient(grid, U[0])[:, None]
        return (out, 0.0) if return_residual else out
    X = alg.log_map(U, spec)
    theta_max = float(np.max(np.sqrt(np.einsum("a...,a...->...", X, X))))
    if theta_max < 0.9 * np.pi:
        dX = np.stack([grid.ifft(derivative_hat(grid, grid.fft(X), i)) for i in range(3)])
        out = np.stack([alg.dexp_right(X, dX[i], spec) for i in range(3)])
        resid = 0.0
    else:
        dU = np.stack([grid.ifft(derivative_hat(grid, grid.fft(U), i)) for i in range(3)])
        comps, resid = [], 0.0
        for i in range(3):
            c, r = alg.maurer_cartan_coeff(U, dU[i], spec, return_residual=True)
            comps.append(c)
            resid = max(resid, r)
        out = np.stack(comps)
    return (out, resid) if return_residual else out


def adjoint_field(U: np.ndarray, X: np.ndarray, spec: StructureSpec) -> np.ndarray:
    """Ad_U applied pointwise to an algebra-valued field (any leading axes)."""
    if X.ndim == 5:  # vector of algebra scalars
        return np.stack([alg.adjoint(U, X[i], spec) for i in range(X.shape[0])])
    return alg.adjoint(U, X, spec)


def gauge_transform(grid: Grid, A: np.ndarray, E: np.ndarray | None,
                    U: np.ndarray, spec: StructureSpec,
                    mc_warn: float = 1e-6):
    """Apply A -> U A U^{-1} - (dU) U^{-1}, E -> U E U^{-1} for spatial U."""
    mc, resid = mc_derivative(grid, U, spec, return_residual=True)
    if resid > mc_warn:
        warnings.warn(f"gauge field is rough: Maurer-Cartan tangency residual {resid:.3e}")
    At = dealias(grid, adjoint_field(U, A, spec)) - dealias(grid, mc)
    if E is None:
        return At, None
    return At, dealias(grid, adjoint_field(U, E, spec))


def gauss_residual(grid: Grid, A: np.ndarray, E: np.ndarray,
                   spec: StructureSpec):
    """Covariant divergence of E: the constraint residual field and its L2 norm."""
    r = divergence(grid, E)
    for ell in range(3):
        r = r + dealias(grid, bracket(A[ell], E[ell], spec))
    return r, grid.l2_norm(r)


def _repair_source_terms(grid, A, phi, spec):
    """d^l [A_l, phi] + [A^l, d_l phi] + [A^l, [A_l, phi]], products dealiased."""
    dphi = np.stack([grid.ifft(derivative_hat(grid, grid.fft(phi), i)) for i in range(3)])
    out = np.zeros_like(phi)
    div_arg = np.stack([dealias(grid, bracket(A[l], phi, spec)) for l in range(3)])
    out = out + divergence(grid, div_arg)
    for l in range(3):
        out = out + dealias(grid, bracket(A[l], dphi[l], spec))
        out = out + dealias(grid, bracket(A[l], dealias(grid, bracket(A[l], phi, spec)), spec))
    return out


def _mean_bracket_matrix(grid, A, spec):
    """Mean of sum_l ad_{A_l}^2 as a (d, d) matrix (zero-mode solvability)."""
    d = spec.dim
    M = np.zeros((d, d))
    for b in range(d):
        e_b = np.zeros((d,) + (grid.n,) * 3)
        e_b[b] = 1.0
        col = np.zeros((d,) + (grid.n,) * 3)
        for l in range(3):
            col += bracket(A[l], bracket(A[l], e_b, spec), spec)
        M[:, b] = col.mean(axis=(1, 2, 3))
    return M


def constraint_repair(grid: Grid, A: np.ndarray, E_raw: np.ndarray,
                      spec: StructureSpec, tol: float = 1e-10,
                      max_iter: int = 40) -> np.ndarray:
    """Project E_raw onto the Gauss constraint surface: E = E_raw + D_A phi.

    phi solves the covariant Poisson equation Delta_A phi = -D^l E_raw_l by
    Picard iteration on the flat Laplacian.  On the torus the flat inverse
    annihilates the spatial mean, so a constant algebra component is solved
    separately through the mean of ad_{A}^2 (absent in the abelian case,
    where the compatibility mean vanishes identically).
    """
    h, _ = gauss_residual(grid, A, E_raw, spec)
    h = -h
    phi = np.zeros_like(h)
    c = np.zeros(spec.dim)
    M = _mean_bracket_matrix(grid, A, spec)
    history = []
    for _ in range(max_iter):
        cfield = c.reshape(-1, 1, 1, 1) * np.ones((grid.n,) * 3)
        psi = phi + cfield
        src = h - _repair_source_terms(grid, A, psi, spec)
        phi = inverse_laplacian(grid, src)
        rhs_mean = (h - _repair_source_terms(grid, A, phi, spec)).mean(axis=(1, 2, 3))
        if np.linalg.norm(M) > 1e-14:
            c = np.linalg.lstsq(M, rhs_mean, rcond=None)[0]
        psi = phi + c.reshape(-1, 1, 1, 1)
        E = E_raw + np.stack(
            [covariant_derivative(grid, A, psi, l, spec) for l in range(3)])
        _, res = gauss_residual(grid, A, E, spec)
        history.append(res)
        if res <= tol:
            return E
        if len(history) > 3 and history[-1] > 0.9 * history[-4]:
            break
    raise ConvergenceError(
        f"constraint repair stalled at residual {history[-1]:.3e} "
        f"after {len(history)} iterations (tol {tol:.1e})", history)


def coulomb_project(grid: Grid, A: np.ndarray, spec: StructureSpec,
                    tol: float = 1e-11, max_iter: int = 40):
    """Iterated exponential gauge change driving div A to zero.

    Each step applies U = exp(V) with grad V the curl-free part of the
    current connection.  Returns the transformed connection and the
    accumulated group field.
    """
    At = A.copy()
    U_tot = alg.identity_group(spec, (grid.n,) * 3)
    history = [grid.l2_norm(divergence(grid, At))]
    for _ in range(max_iter):
        if history[-1] <= tol:
            return At, U_tot, history
        V = inverse_laplacian(grid, divergence(grid, At))
        U_step = alg.exp_map(V, spec)
        At, _ = gauge_transform(grid, At, None, U_step, spec)
        U_tot = alg.group_mul(U_step, U_tot, spec)
        history.append(grid.l2_norm(divergence(grid, At)))
        if history[-1] > history[-2] and history[-1] > 10 * tol:
            raise ConvergenceError(
                f"Coulomb projection diverging: residuals {history[-3:]}", history)
    if history[-1] <= tol:
        return At, U_tot, history
    raise ConvergenceError(
        f"Coulomb projection did not reach tol {tol:.1e}: last {history[-1]:.3e}",
        history)


def random_alg_field(grid: Grid, spec: StructureSpec, rng: np.random.Generator,
                     amplitude: float, mode_cut: float | None = None,
                     decay: float = 2.0, components: int = 0) -> np.ndarray:
    """Band-limited random algebra-valued field with Gaussian spectral decay.

    components=0 gives a scalar (d, n^3) field, otherwise that many leading
    vector components.  Normalized so the max pointwise algebra norm equals
    amplitude.
    """
    if mode_cut is None:
        mode_cut = grid.n / 6.0
    lead = (components,) if components else ()
    f = rng.standard_normal(lead + (spec.dim,) + (grid.n,) * 3)
    m2 = grid.mode_mag2
    keep = m2 <= mode_cut**2
    weight = np.exp(-m2 / max(decay, 1e-6) ** 2) * keep
    f = grid.ifft(weight * grid.fft(f))
    scale = float(np.max(np.sqrt((f * f).sum(axis=-4))))
    if scale > 0:
        f *= amplitude / scale
    return f


def random_gauge(grid: Grid, spec: StructureSpec, seed: int,
                 amplitude: float = 0.3, decay: float = 2.0,
                 mode_cut: float | None = None) -> np.ndarray:
    """Deterministic smooth random gauge transformation U = exp(X)."""
    rng = np.random.default_rng(seed)
    X = random_alg_field(grid, spec, rng, amplitude, mode_cut, decay)
    return alg.exp_map(X, spec)
