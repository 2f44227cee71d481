"""Temporal-gauge evolution on the torus by pseudospectral method of lines.

State is the pair (A_i, E_i) with E_i = dA_i/dt; the update for E is the
covariant curl divergence sum_j D_j F_{ji}, all quadratic and cubic products
dealiased by the two-thirds rule.  Time stepping is classical RK4 under a
CFL guard dt * k_max <= cfl.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .algebra import StructureSpec, bracket
from .gauge import PAIRS, curvature, gauss_residual
from .grid import Grid
from .spectral import (dealias, derivative_hat, divergence, laplacian,
                       leray_cf, leray_df, inverse_laplacian, sobolev_norm)


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping."""


@dataclass
class CauchyState:
    """Temporal-gauge Cauchy data at time t (A_0 = 0, E = dA/dt)."""

    grid: Grid
    spec: StructureSpec
    t: float
    A: np.ndarray
    E: np.ndarray

    def copy(self) -> "CauchyState":
        return CauchyState(self.grid, self.spec, self.t, self.A.copy(), self.E.copy())


@dataclass
class EvolutionConfig:
    dt: float
    T: float
    cfl: float = 0.5
    sample_every: int = 0  # steps between samples; 0 = endpoints only
    keep_states: bool = False

    def __post_init__(self):
        if self.cfl > 1.0:
            raise ValueError("cfl guard must not exceed 1")
        if self.dt <= 0 or self.T < 0:
            raise ValueError("dt must be positive and T nonnegative")


def active_kmax(grid: Grid) -> float:
    """Largest |k| surviving the two-thirds truncation."""
    cut = np.floor(grid.n / 3.0)
    return float(2.0 * np.pi / grid.L * cut * np.sqrt(3.0))


_PAIR_IDX = {(0, 1): (0, 1.0), (1, 0): (0, -1.0), (0, 2): (1, 1.0),
             (2, 0): (1, -1.0), (1, 2): (2, 1.0), (2, 1): (2, -1.0)}


def covariant_curl_div(grid: Grid, spec: StructureSpec, A: np.ndarray) -> np.ndarray:
    """sum_j D_j F_{ji} for the curvature of A, products dealiased."""
    mask = grid.dealias_mask
    Ah = grid.fft(A)
    pair_br = np.stack([bracket(A[i], A[j], spec) for i, j in PAIRS])
    Fh = grid.fft(pair_br) * mask
    for c, (i, j) in enumerate(PAIRS):
        Fh[c] += derivative_hat(grid, Ah[j], i) - derivative_hat(grid, Ah[i], j)
    F = grid.ifft(Fh)
    out_hat = np.empty_like(Ah)
    brk = np.empty_like(A)
    for i in range(3):
        acc_h = 0.0
        acc_b = 0.0
        for j in range(3):
            if i == j:
                continue
            c, sgn = _PAIR_IDX[(j, i)]
            acc_h = acc_h + sgn * derivative_hat(grid, Fh[c], j)
            acc_b = acc_b + sgn * bracket(A[j], F[c], spec)
        out_hat[i] = acc_h
        brk[i] = acc_b
    return grid.ifft(out_hat + grid.fft(brk) * mask)


def ym_rhs(state: CauchyState):
    """Right-hand side (dA/dt, dE/dt) of the temporal-gauge system."""
    return state.E, covariant_curl_div(state.grid, state.spec, state.A)


def rk4_step(y: tuple, dt: float, f):
    """One classical RK4 step on a tuple of arrays."""
    k1 = f(y)
    k2 = f(tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = f(tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = f(tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(a + (dt / 6.0) * (b1 + 2.0 * (b2 + b3) + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def step_rk4(state: CauchyState, dt: float) -> CauchyState:
    def f(y):
        return ym_rhs(replace(state, A=y[0], E=y[1]))

    A, E = rk4_step((state.A, state.E), dt, f)
    if not (np.isfinite(A).all() and np.isfinite(E).all()):
        raise BlowUpError(
            f"non-finite state at t={state.t + dt:.6g} "
            f"(|A|max before step {np.max(np.abs(state.A)):.3e})")
    return CauchyState(state.grid, state.spec, state.t + dt, A, E)


def energy(state: CauchyState) -> float:
    """Total curvature energy: 1/2 sum_{a<b} ||F_ab||_L2^2."""
    F = curvature(state.grid, state.A, state.spec)
    nu = state.spec.metric_normalization
    return 0.5 * nu * (state.grid.l2_norm(F) ** 2 + state.grid.l2_norm(state.E) ** 2)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    gauss: list = field(default_factory=list)
    hsig: list = field(default_factory=list)
    states: list = field(default_factory=list)
    final: CauchyState | None = None


def evolve(state: CauchyState, config: EvolutionConfig,
           sigma: float = 5.0 / 6.0) -> Trajectory:
    """Integrate to t + T, sampling energy / Gauss residual / H^sigma norms."""
    g = state.grid
    if config.dt * active_kmax(g) > config.cfl + 1e-12:
        raise ValueError(
            f"CFL violation: dt*kmax = {config.dt * active_kmax(g):.3f} "
            f"> cfl = {config.cfl}")
    nsteps = int(round(config.T / config.dt))
    traj = Trajectory()

    def sample(st):
        traj.times.append(st.t)
        traj.energies.append(energy(st))
        traj.gauss.append(gauss_residual(g, st.A, st.E, st.spec)[1])
        traj.hsig.append(sobolev_norm(g, st.A, sigma))
        if config.keep_states:
            traj.states.append(st.copy())

    sample(state)
    st = state
    for m in range(1, nsteps + 1):
        st = step_rk4(st, config.dt)
        if (config.sample_every and m % config.sample_every == 0) or m == nsteps:
            sample(st)
    traj.final = st
    return traj


def ymt_bracket_rhs(state: CauchyState) -> np.ndarray:
    """The quadratic/cubic side of the second-order temporal-gauge wave form,
    i.e. what the d'Alembertian of A minus grad div A equals."""
    g, spec = state.grid, state.spec
    A = state.A
    Ah = g.fft(A)
    dA = np.stack([g.ifft(derivative_hat(g, Ah, j)) for j in range(3)])  # dA[j] = d_j A
    divA = g.ifft(sum(derivative_hat(g, Ah[j], j) for j in range(3)))
    out = np.empty_like(A)
    for i in range(3):
        t = np.zeros_like(A[i])
        for j in range(3):
            t = t + dealias(g, bracket(dA[j][i], A[j], spec))       # [d_j A_i, A_j]
            t = t + dealias(g, bracket(A[j], dA[i][j], spec))       # [A_j, d_i A_j]
            t = t - dealias(g, bracket(A[j], dealias(g, bracket(A[j], A[i], spec)), spec))
        # d_j [A_i, A_j] term, assembled spectrally
        br = np.stack([dealias(g, bracket(A[i], A[j], spec)) for j in range(3)])
        t = t + divergence(g, br)
        out[i] = t
    return out


def df_cf_consistency(state: CauchyState) -> dict:
    """Residuals of the Leray-projected first-order system against ym_rhs.

    cf: the curl-free velocity must match InvLap grad [E_j, A_j]
        (an identity on the Gauss constraint surface).
    df: the divergence-free part of dE/dt must match Lap(PA) minus the
        projected bracket terms (an algebraic identity off shell).
    """
    g, spec = state.grid, state.spec
    A, E = state.A, state.E
    _, Edot = ym_rhs(state)
    # curl-free part
    brk = np.zeros_like(E[0])
    for j in range(3):
        brk = brk + dealias(g, bracket(E[j], A[j], spec))
    grad_part = np.stack([inverse_laplacian(
        g, g.ifft(derivative_hat(g, g.fft(brk), i))) for i in range(3)])
    cf_res = leray_cf(g, E) - grad_part
    # divergence-free part
    PA = leray_df(g, A)
    df_lhs = leray_df(g, Edot) - laplacian(g, PA)
    df_rhs = -leray_df(g, ymt_bracket_rhs(state))
    scale = max(g.l2_norm(Edot), 1e-30)
    return {
        "cf_residual": g.l2_norm(cf_res) / max(g.l2_norm(E), 1e-30),
        "df_residual": g.l2_norm(df_lhs - df_rhs) / scale,
    }


def rescale(state: CauchyState, lam: float) -> CauchyState:
    """Critical rescaling A -> A(x/lam)/lam on the grid of period lam*L."""
    if lam <= 0:
        raise ValueError("scaling factor must be positive")
    g2 = Grid(state.grid.n, lam * state.grid.L)
    return CauchyState(g2, state.spec, state.t * lam,
                       state.A / lam, state.E / lam**2)
