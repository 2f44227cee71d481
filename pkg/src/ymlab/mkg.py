"""Maxwell-Klein-Gordon in the temporal gauge: evolution, heat flow,
tension fields, and the modified Hamiltonian.

The Maxwell sector reuses the non-abelian stack with the abelian structure
group (same code path, so a vanishing scalar reproduces those trajectories
bit for bit).  The complex scalar is carried through the full-layout
transforms; covariant derivatives are D_a = d_a + i A_a with A real.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from . import dynamics as dyn
from . import heatflow as hf
from .algebra import u1
from .dynamics import CauchyState, rk4_step
from .gauge import curvature
from .grid import Grid
from .spectral import (cdealias, cgradient, dealias, derivative_hat,
                       divergence, gradient)

_U1 = u1()


@dataclass
class MkgState:
    """Temporal-gauge MKG data: real one-form A (u(1) layout), E = dA/dt,
    complex scalar phi and its velocity phit = dphi/dt."""

    grid: Grid
    t: float
    A: np.ndarray          # (3, 1, n, n, n)
    E: np.ndarray
    phi: np.ndarray        # complex (n, n, n)
    phit: np.ndarray

    def copy(self) -> "MkgState":
        return MkgState(self.grid, self.t, self.A.copy(), self.E.copy(),
                        self.phi.copy(), self.phit.copy())

    def maxwell_state(self) -> CauchyState:
        return CauchyState(self.grid, _U1, self.t, self.A, self.E)


def covariant_grad(grid: Grid, A: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """D_i phi = d_i phi + i A_i phi, product dealiased."""
    dphi = cgradient(grid, phi)
    return np.stack([dphi[i] + 1j * cdealias(grid, A[i, 0] * phi)
                     for i in range(3)])


def scalar_current(grid: Grid, A: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """J_i = Im(phi conj(D_i phi)), the Maxwell source, in u(1) layout."""
    Dphi = covariant_grad(grid, A, phi)
    J = np.stack([dealias(grid, np.imag(phi * np.conj(Dphi[i])))
                  for i in range(3)])
    return J[:, None]


def mkg_rhs(state: MkgState):
    """(dA, dE, dphi, dphit) in the temporal gauge.

    The Maxwell part goes through the Yang-Mills right-hand side with the
    abelian structure spec plus the scalar current; the scalar wave is
    phi_tt = Lap phi + 2i A.grad phi + i (div A) phi - |A|^2 phi.
    """
    g = state.grid
    _, Edot = dyn.ym_rhs(state.maxwell_state())
    Edot = Edot + scalar_current(g, state.A, state.phi)
    phi = state.phi
    phih = g.cfft(phi)
    lap = g.cifft(-g.k2_full * phih)
    dphi = np.stack([g.cifft(1j * g.kfull(i) * phih) for i in range(3)])
    a = state.A[:, 0]
    div_a = divergence(g, state.A)[0]
    a2 = dealias(g, a[0]**2 + a[1]**2 + a[2]**2)
    adot_grad = cdealias(g, a[0] * dphi[0] + a[1] * dphi[1] + a[2] * dphi[2])
    phitdot = lap + 2j * adot_grad + 1j * cdealias(g, div_a * phi) \
        - cdealias(g, a2 * phi)
    return state.E, Edot, state.phit, phitdot


def step(state: MkgState, dt: float) -> MkgState:
    def f(y):
        return mkg_rhs(MkgState(state.grid, state.t, y[0], y[1], y[2], y[3]))

    A, E, phi, phit = rk4_step((state.A, state.E, state.phi, state.phit), dt, f)
    if not (np.isfinite(A).all() and np.isfinite(phi).all()):
        raise dyn.BlowUpError(f"non-finite MKG state at t={state.t + dt:.6g}")
    return MkgState(state.grid, state.t + dt, A, E, phi, phit)


def mkg_energy(state: MkgState) -> float:
    """H = 1/2 int |F|^2 + sum_a |D_a phi|^2  (D_0 phi = phi_t here)."""
    g = state.grid
    F = curvature(g, state.A, _U1)
    Dphi = covariant_grad(g, state.A, state.phi)
    quad = (np.sum(F * F) + np.sum(state.E * state.E)) * g.site_measure
    quad += (np.sum(np.abs(state.phit) ** 2)
             + np.sum(np.abs(Dphi) ** 2)) * g.site_measure
    return 0.5 * float(quad)


def charge(state: MkgState) -> float:
    """Noether charge int Im(phi conj(phi_t)); zero on admissible torus data."""
    return state.grid.integrate(np.imag(state.phi * np.conj(state.phit)))


def constraint_residual(state: MkgState):
    """div E - Im(phi conj(phi_t)) and its L2 norm."""
    g = state.grid
    r = divergence(g, state.E)[0] - dealias(
        g, np.imag(state.phi * np.conj(state.phit)))
    return r, g.l2_norm(r)


def neutralize_charge(phi: np.ndarray, phit: np.ndarray, grid: Grid):
    """Shift phit so the total charge vanishes (torus admissibility)."""
    q = grid.integrate(np.imag(phi * np.conj(phit)))
    m = grid.integrate(np.abs(phi) ** 2)
    if m < 1e-30:
        return phit
    return phit + 1j * (q / m) * phi


def repair_constraint(state: MkgState) -> MkgState:
    """Project E onto the MKG Gauss constraint (abelian: one exact step)."""
    g = state.grid
    rho = dealias(g, np.imag(state.phi * np.conj(state.phit)))
    src = rho - divergence(g, state.E)[0]
    mean = abs(float(np.mean(src)))
    if mean > 1e-10 * max(1.0, g.l2_norm(src)):
        raise ValueError(
            f"constraint source has nonzero mean {mean:.2e}: "
            "charge-neutralize the scalar data first")
    psih = -g.inv_k2 * g.fft(src)
    grad_psi = np.stack([g.ifft(derivative_hat(g, psih, i)) for i in range(3)])
    return MkgState(g, state.t, state.A, state.E + grad_psi[:, None],
                    state.phi, state.phit)


def evolve(state: MkgState, dt: float, T: float, sample_every: int = 0):
    """Integrate, recording energy / charge / constraint residual."""
    if dt * dyn.active_kmax(state.grid) > 0.5 + 1e-12:
        raise ValueError("CFL violation for the MKG step")
    nsteps = int(round(T / dt))
    times, energies, charges, constraint = [], [], [], []

    def sample(st):
        times.append(st.t)
        energies.append(mkg_energy(st))
        charges.append(charge(st))
        constraint.append(constraint_residual(st)[1])

    sample(state)
    st = state
    for m in range(1, nsteps + 1):
        st = step(st, dt)
        if (sample_every and m % sample_every == 0) or m == nsteps:
            sample(st)
    return {"times": times, "energies": energies, "charges": charges,
            "constraint": constraint, "final": st}


# --- MKG heat flow ------------------------------------------------------------

def mkg_heatflow_rhs(grid: Grid, A: np.ndarray, phi: np.ndarray):
    """Parabolic derivatives in the div-A gauge:
    dA_i/ds = Lap A_i + Im(phi conj(D_i phi)),
    dphi/ds = Lap phi + 2i A.grad phi - |A|^2 phi
    (the i div A terms cancel against the gauge drift)."""
    Ah = grid.fft(A)
    dA = grid.ifft(-grid.k2 * Ah) + scalar_current(grid, A, phi)
    phih = grid.cfft(phi)
    dphi_vec = np.stack([grid.cifft(1j * grid.kfull(i) * phih) for i in range(3)])
    a = A[:, 0]
    a2 = dealias(grid, a[0]**2 + a[1]**2 + a[2]**2)
    adg = cdealias(grid, a[0] * dphi_vec[0] + a[1] * dphi_vec[1] + a[2] * dphi_vec[2])
    dphi = grid.cifft(-grid.k2_full * phih) + 2j * adg - cdealias(grid, a2 * phi)
    return dA, dphi


def _mkg_nonlinear(grid, A, phi):
    """Heat-subtracted parts of mkg_heatflow_rhs (for the IF stepper)."""
    NA = scalar_current(grid, A, phi)
    dphi_vec = cgradient(grid, phi)
    a = A[:, 0]
    a2 = dealias(grid, a[0]**2 + a[1]**2 + a[2]**2)
    adg = cdealias(grid, a[0] * dphi_vec[0] + a[1] * dphi_vec[1] + a[2] * dphi_vec[2])
    Nphi = 2j * adg - cdealias(grid, a2 * phi)
    return NA, Nphi


@dataclass
class MkgStencil:
    """Five MKG slices at uniform spacing delta (central slice = index 2)."""

    states: list
    delta: float

    def __post_init__(self):
        if len(self.states) != 5:
            raise ValueError("time stencil needs exactly 5 slices")

    @property
    def grid(self):
        return self.states[0].grid


def make_mkg_stencil(state: MkgState, delta: float, dt: float) -> MkgStencil:
    m = int(round(delta / dt))
    if m < 1 or abs(m * dt - delta) > 1e-12 * max(1.0, delta):
        raise ValueError("stencil spacing must be an integer multiple of dt")
    slices = [None] * 5
    slices[2] = state.copy()
    st = state
    for node in (1, 0):
        for _ in range(m):
            st = step(st, -dt)
        slices[node] = st.copy()
    st = state
    for node in (3, 4):
        for _ in range(m):
            st = step(st, dt)
        slices[node] = st.copy()
    return MkgStencil(slices, delta)


def flow_mkg_stencil(stencil: MkgStencil, s_samples, substeps: int = 4):
    """Lockstep parabolic flow of the five slices with A_0 per slice.

    A_0 obeys dA_0/ds = Lap A_0 + Im(phi conj(d_t phi)) - A_0 |phi|^2 with
    A_0(0) = 0; d_t phi is the cross-slice stencil derivative, evaluated
    stage by stage.  Returns per-sample dicts of stacked fields.
    """
    g = stencil.grid
    delta = stencil.delta
    A = np.stack([st.A for st in stencil.states])       # (5, 3, 1, n^3)
    phi = np.stack([st.phi for st in stencil.states])   # (5, n^3) complex
    A0 = np.zeros((5,) + (g.n,) * 3)
    wrows = np.stack([hf.fornberg_weights(np.arange(5) * delta, m * delta, 1)
                      for m in range(5)])
    sys = hf._IFSystem(g, ("heat", "cheat", "heat"))

    def nonlin(y):
        Am, phim, A0m = y
        NA = np.empty_like(Am)
        Nphi = np.empty_like(phim)
        for m in range(5):
            na, nphi = _mkg_nonlinear(g, Am[m], phim[m])
            NA[m], Nphi[m] = na, nphi
        dt_phi = np.tensordot(wrows, phim, axes=(1, 0))
        NA0 = np.empty_like(A0m)
        for m in range(5):
            NA0[m] = dealias(g, np.imag(phim[m] * np.conj(dt_phi[m]))
                             - A0m[m] * np.abs(phim[m]) ** 2)
        return NA, Nphi, NA0

    s_samples = np.asarray(sorted(float(s) for s in s_samples))
    out = []
    state = (A, phi, A0)
    s_prev = 0.0
    if s_samples[0] == 0.0:
        out.append({"s": 0.0, "A": A.copy(), "phi": phi.copy(), "A0": A0.copy()})
        s_samples = s_samples[1:]
    for s_target in s_samples:
        nsub = hf._leg_substeps(s_prev, s_target, substeps)
        h = (s_target - s_prev) / nsub
        for _ in range(nsub):
            state = sys.step(state, h, nonlin)
        if not np.isfinite(state[0]).all():
            raise hf.ParabolicBlowUpError(f"MKG stencil flow blew up at s={s_target:.3e}")
        out.append({"s": s_target, "A": state[0].copy(), "phi": state[1].copy(),
                    "A0": state[2].copy()})
        s_prev = s_target
    return out


def _slice_fields(grid, sample, stencil):
    """Central-slice level-s fields: A, B, phi, D_t phi, A0."""
    delta = stencil.delta
    A5, phi5, A05 = sample["A"], sample["phi"], sample["A0"]
    w1 = hf.fornberg_weights(np.arange(5) * delta, 2 * delta, 1)
    dtA = np.tensordot(w1, A5, axes=(0, 0))
    dtphi = np.tensordot(w1, phi5, axes=(0, 0))
    A_c, phi_c, A0_c = A5[2], phi5[2], A05[2]
    gradA0 = gradient(grid, A0_c)
    B = dtA - gradA0[:, None]
    Dtphi = dtphi + 1j * cdealias(grid, A0_c * phi_c)
    return A_c, B, phi_c, Dtphi, A0_c


def mkg_energy_at(grid, sample, stencil) -> float:
    A_c, B, phi_c, Dtphi, _ = _slice_fields(grid, sample, stencil)
    F = curvature(grid, A_c, _U1)
    Dphi = covariant_grad(grid, A_c, phi_c)
    quad = (np.sum(F * F) + np.sum(B * B)) * grid.site_measure
    quad += (np.sum(np.abs(Dtphi) ** 2) + np.sum(np.abs(Dphi) ** 2)) * grid.site_measure
    return 0.5 * float(quad)


def mkg_tension(stencil: MkgStencil, s: float, substeps: int = 4):
    """Tension fields (v, w) at level s on the central slice.

    v = box_A phi;  w_j = d^a F_{aj} + Im(phi conj(D_j phi)).
    """
    g = stencil.grid
    delta = stencil.delta
    samples = flow_mkg_stencil(stencil, [s], substeps=substeps)
    smp = samples[-1]
    A5, phi5, A05 = smp["A"], smp["phi"], smp["A0"]
    A_c, B, phi_c, Dtphi, A0_c = _slice_fields(g, smp, stencil)

    w1 = hf.fornberg_weights(np.arange(5) * delta, 2 * delta, 1)
    w2 = hf.fornberg_weights(np.arange(5) * delta, 2 * delta, 2)
    # B per slice, for d_t B at the center
    B5 = np.empty_like(A5)
    for m in range(5):
        wm = hf.fornberg_weights(np.arange(5) * delta, m * delta, 1)
        B5[m] = np.tensordot(wm, A5, axes=(0, 0)) - gradient(g, A05[m])[:, None]
    dtB = np.tensordot(w1, B5, axes=(0, 0))

    Ah = g.fft(A_c)
    div_a = g.ifft(sum(derivative_hat(g, Ah[l], l) for l in range(3)))[0]
    lapA = g.ifft(-g.k2 * Ah)
    grad_div = gradient(g, div_a)
    J = scalar_current(g, A_c, phi_c)
    w = np.empty_like(A_c)
    for j in range(3):
        w[j] = -dtB[j] + lapA[j] - grad_div[j][None] + J[j]

    # v = box_A phi = -D_t D_t phi + sum_j D_j D_j phi
    dt2phi = np.tensordot(w2, phi5, axes=(0, 0))
    dtphi = np.tensordot(w1, phi5, axes=(0, 0))
    dtA0 = np.tensordot(w1, A05, axes=(0, 0))
    DtDtphi = dt2phi + 1j * cdealias(g, dtA0 * phi_c) \
        + 2j * cdealias(g, A0_c * dtphi) - cdealias(g, A0_c**2 * phi_c)
    a = A_c[:, 0]
    phih = g.cfft(phi_c)
    dphi_vec = np.stack([g.cifft(1j * g.kfull(i) * phih) for i in range(3)])
    a2 = dealias(g, a[0]**2 + a[1]**2 + a[2]**2)
    adg = cdealias(g, a[0] * dphi_vec[0] + a[1] * dphi_vec[1] + a[2] * dphi_vec[2])
    div_aD = g.ifft(sum(derivative_hat(g, g.fft(a[l]), l) for l in range(3)))
    DjDjphi = g.cifft(-g.k2_full * phih) + 2j * adg \
        + 1j * cdealias(g, div_aD * phi_c) - cdealias(g, a2 * phi_c)
    v = -DtDtphi + DjDjphi
    return v, w


def mkg_w2_leading(state: MkgState, s: float, n_quad: int = 32) -> np.ndarray:
    """Leading quadratic tension: P_j w(s) ~ -2 P_j Im W(d_t phi, conj grad d_t phi)."""
    from .spectral import leray_df
    g = state.grid
    phit = state.phit
    gh = g.cfft(phit)
    grad_pt = np.stack([g.cifft(1j * g.kfull(i) * gh) for i in range(3)])
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    sq = 0.5 * s * (nodes + 1.0)
    wq = 0.5 * s * weights
    acc = np.zeros((3,) + phit.shape)
    for s_node, w_node in zip(sq, wq):
        decay = np.exp(-s_node * g.k2_full)
        f_heat = g.cifft(decay * gh)
        g_heat = np.stack([g.cifft(decay * g.cfft(grad_pt[i])) for i in range(3)])
        integ = np.stack([np.imag(f_heat * np.conj(g_heat[i])) for i in range(3)])
        from .spectral import heat_propagate
        acc = acc + w_node * heat_propagate(g, integ, s - s_node)
    w2 = -2.0 * leray_df(g, dealias(g, acc))
    return w2[:, None]


def mkg_modified_energy(stencil: MkgStencil, N: float, sigma: float,
                        n_samples: int = 24, span: float = 1024.0,
                        substeps: int = 4):
    """Modified Hamiltonian: sup + ds/s integral of (N^2 s)^{1-sigma} H(t,s)."""
    from .diagnostics import modified_energy
    g = stencil.grid
    sgrid = hf.sample_grid(1.0 / N**2, n_samples, span)
    samples = flow_mkg_stencil(stencil, sgrid, substeps=substeps)
    s_vals = np.array([smp["s"] for smp in samples])
    h_vals = np.array([mkg_energy_at(g, smp, stencil) for smp in samples])
    return modified_energy(s_vals, h_vals, N, sigma)


def mkg_hamiltonian_identity_check(state0: MkgState, t_span: float, s: float,
                                   n_nodes: int = 9, dt: float = 1e-3,
                                   delta: float | None = None,
                                   substeps: int = 4):
    """Residual of H(t1,s) - H(t0,s) = -Re int int D_t phi conj(v) + F_{j0} w_j."""
    if n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError("Simpson rule needs an odd node count >= 3")
    g = state0.grid
    delta = 5.0 * dt if delta is None else delta
    node_dt = t_span / (n_nodes - 1)
    m = int(round(node_dt / dt))
    if abs(m * dt - node_dt) > 1e-12:
        raise ValueError("node spacing must be an integer multiple of dt")
    integrand = []
    endpoint = {}
    st = state0
    for q in range(n_nodes):
        if q > 0:
            for _ in range(m):
                st = step(st, dt)
        stencil = make_mkg_stencil(st, delta, dt)
        smp = flow_mkg_stencil(stencil, [s], substeps=substeps)[-1]
        A_c, B, phi_c, Dtphi, _ = _slice_fields(g, smp, stencil)
        v, w = mkg_tension(stencil, s, substeps=substeps)
        # F_{j0} = -B_j pairs with w_j; the real part applies to the scalar term
        dens = -np.real(Dtphi * np.conj(v)) - sum(B[j, 0] * w[j, 0] for j in range(3))
        integrand.append(g.integrate(dens))
        if q in (0, n_nodes - 1):
            endpoint[q] = mkg_energy_at(g, smp, stencil)
    t_nodes = np.linspace(0.0, t_span, n_nodes)
    rhs = float(simpson(np.asarray(integrand), x=t_nodes))
    lhs = endpoint[n_nodes - 1] - endpoint[0]
    residual = abs(lhs - rhs) / max(abs(lhs) + abs(rhs), 1e-300)
    return residual, lhs, rhs
