"""Yang-Mills heat flow at fixed physical time.

The parabolic evolution runs in the DeTurck gauge (A_s = div A), where the
connection and the electric curvature B_i = F_{0i} satisfy genuinely
parabolic equations.  Stiffness is absorbed exactly by an integrating-factor
RK4: the heat factor is applied in Fourier space and only the bracket terms
are stepped explicitly, so the abelian flow reproduces the heat semigroup to
round-off.  The caloric gauge (A_s = 0) is reached by the pointwise
transport ODE dU/ds = U A_s.

The tension field w_i(s) = D_0 F_{0i} - D^j F_{ji} needs time derivatives at
level s; these come from five Cauchy slices flowed in lockstep, with A_0(s)
reconstructed along the flow from its own ODE (A_0 = 0 at s = 0 in the
temporal gauge).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import algebra as alg
from .algebra import StructureSpec, bracket
from .dynamics import CauchyState, covariant_curl_div, rk4_step
from .gauge import PAIRS, curvature, gauge_transform
from .grid import Grid
from .spectral import derivative_hat, heat_propagate

_PAIR_IDX = {(0, 1): (0, 1.0), (1, 0): (0, -1.0), (0, 2): (1, 1.0),
             (2, 0): (1, -1.0), (1, 2): (2, 1.0), (2, 1): (2, -1.0)}


class ParabolicBlowUpError(RuntimeError):
    """Non-finite values appeared along the parabolic flow."""


@dataclass
class FlowState:
    """DeTurck-flow state at parabolic time s."""

    grid: Grid
    spec: StructureSpec
    s: float
    A: np.ndarray
    B: np.ndarray
    U: np.ndarray | None = None      # caloric transport, when requested
    A0: np.ndarray | None = None     # reconstructed temporal component

    def magnetic(self) -> np.ndarray:
        return curvature(self.grid, self.A, self.spec)


def sample_grid(s0: float, n_samples: int = 32, span: float = 1024.0) -> np.ndarray:
    """Geometric s-samples on [s0/span, s0], preceded by s = 0."""
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    return np.concatenate([[0.0], np.geomspace(s0 / span, s0, n_samples)])


# --- DeTurck right-hand side ------------------------------------------------

def _dealias(grid: Grid, f: np.ndarray) -> np.ndarray:
    return grid.ifft(grid.fft(f) * grid.dealias_mask)


def _grad_all(grid: Grid, Fh: np.ndarray) -> np.ndarray:
    """d_l of every component from the spectral representation: out[l] = d_l F."""
    return np.stack([grid.ifft(derivative_hat(grid, Fh, l)) for l in range(3)])


def deturck_nonlinear(grid: Grid, spec: StructureSpec, A: np.ndarray,
                      B: np.ndarray | None, Ah=None, Bh=None):
    """Bracket terms of the DeTurck parabolic system, dealiased.

    connection:  2[A^l, d_l A_i] - [A^l, d_i A_l] + [A^l, [A_l, A_i]]
    electric:    2[B^l, F_li] + 2[A^l, d_l B_i] + [A^l, [A_l, B_i]]

    Returns (N_A, N_B, F_magnetic); N_B is None when B is None.
    """
    mask = grid.dealias_mask
    Ah = grid.fft(A) if Ah is None else Ah
    dA = _grad_all(grid, Ah)                     # dA[l, i] = d_l A_i
    pair_br = np.stack([bracket(A[i], A[j], spec) for i, j in PAIRS])
    pair_br = grid.ifft(grid.fft(pair_br) * mask)

    def aa(l, i):
        """Dealiased [A_l, A_i]."""
        if l == i:
            return 0.0
        c, sgn = _PAIR_IDX[(l, i)]
        return sgn * pair_br[c]

    Fmag = np.stack([dA[i][j] - dA[j][i] for i, j in PAIRS]) + pair_br
    NA = np.empty_like(A)
    for i in range(3):
        acc = 0.0
        for l in range(3):
            acc = acc + 2.0 * bracket(A[l], dA[l][i], spec) \
                      - bracket(A[l], dA[i][l], spec)
            if l != i:
                acc = acc + bracket(A[l], aa(l, i), spec)
        NA[i] = acc
    NA = _dealias(grid, NA)
    if B is None:
        return NA, None, Fmag

    Bh = grid.fft(B) if Bh is None else Bh
    dB = _grad_all(grid, Bh)
    ab = np.stack([bracket(A[l], B[i], spec) for l in range(3) for i in range(3)])
    ab = grid.ifft(grid.fft(ab) * mask).reshape((3, 3) + B.shape[1:])
    NB = np.empty_like(B)
    for i in range(3):
        acc = 0.0
        for l in range(3):
            if l != i:
                c, sgn = _PAIR_IDX[(l, i)]
                acc = acc + 2.0 * bracket(B[l], sgn * Fmag[c], spec)
            acc = acc + 2.0 * bracket(A[l], dB[l][i], spec)
            acc = acc + bracket(A[l], ab[l, i], spec)
        NB[i] = acc
    return NA, _dealias(grid, NB), Fmag


def deturck_rhs(flow: FlowState):
    """Full parabolic right-hand side (dA/ds, dB/ds), Laplacian included."""
    g = flow.grid
    Ah, Bh = g.fft(flow.A), g.fft(flow.B)
    NA, NB, _ = deturck_nonlinear(g, flow.spec, flow.A, flow.B, Ah, Bh)
    return g.ifft(-g.k2 * Ah) + NA, g.ifft(-g.k2 * Bh) + NB


# --- integrating-factor stepping ---------------------------------------------

class _IFSystem:
    """Integrating-factor RK4 on a family of fields.

    Each field kind is "heat" (real field, exact e^{s Lap} factor through the
    rfft layout), "cheat" (complex scalar, full layout), or "ode" (no linear
    part; stepped inside the same stage structure).
    """

    def __init__(self, grid: Grid, kinds: tuple):
        self.grid = grid
        self.kinds = tuple(kinds)
        if any(k not in ("heat", "cheat", "ode") for k in self.kinds):
            raise ValueError(f"unknown field kinds in {kinds}")

    def _prop(self, u, kind, h):
        g = self.grid
        if kind == "heat":
            return g.ifft(np.exp(-h * g.k2) * g.fft(u))
        if kind == "cheat":
            return g.cifft(np.exp(-h * g.k2_full) * g.cfft(u))
        return u

    def step(self, y: tuple, h: float, nonlin) -> tuple:
        prop = self._prop
        kinds = self.kinds
        k1 = nonlin(y)
        ya = tuple(prop(u0 + 0.5 * h * k, kd, 0.5 * h)
                   for u0, k, kd in zip(y, k1, kinds))
        k2 = nonlin(ya)
        yb = tuple(prop(u0, kd, 0.5 * h) + 0.5 * h * k
                   for u0, k, kd in zip(y, k2, kinds))
        k3 = nonlin(yb)
        yc = tuple(prop(u0, kd, h) + h * prop(k, kd, 0.5 * h)
                   for u0, k, kd in zip(y, k3, kinds))
        k4 = nonlin(yc)
        return tuple(
            prop(u0, kd, h) + (h / 6.0) * (prop(a1, kd, h)
                                           + 2.0 * prop(a2 + a3, kd, 0.5 * h) + a4)
            for u0, a1, a2, a3, a4, kd in zip(y, k1, k2, k3, k4, kinds))


def _leg_substeps(s_lo: float, s_hi: float, base: int) -> int:
    """Substep count for one sample leg; the first leg is refined."""
    if s_lo == 0.0:
        return max(2 * base, 4)
    return base


def flow_step(flow: FlowState, ds: float) -> FlowState:
    """Single integrating-factor RK4 step of the DeTurck system."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    g, spec = flow.grid, flow.spec
    sys = _IFSystem(g, ("heat", "heat"))

    def nonlin(y):
        NA, NB, _ = deturck_nonlinear(g, spec, y[0], y[1])
        return NA, NB

    A, B = sys.step((flow.A, flow.B), ds, nonlin)
    if not (np.isfinite(A).all() and np.isfinite(B).all()):
        raise ParabolicBlowUpError(f"non-finite flow state at s={flow.s + ds:.3e}")
    return FlowState(g, spec, flow.s + ds, A, B, U=flow.U, A0=flow.A0)


def run_flow(origin: CauchyState, s_samples, substeps: int = 4,
             with_transport: bool = False, renorm_tol: float = 1e-6,
             observer=None, keep_states: bool = True) -> list[FlowState]:
    """Flow the Cauchy data through the sample list of parabolic times.

    Returns one FlowState per requested s (including s = 0 if present).
    with_transport integrates the caloric transport U alongside, so the
    caloric connection can be recovered by `to_caloric`.  An observer is
    called with each sampled FlowState; pass keep_states=False to stream
    large runs through the observer without retaining fields.
    """
    g, spec = origin.grid, origin.spec
    s_samples = np.asarray(sorted(float(s) for s in s_samples))
    if s_samples[0] < 0:
        raise ValueError("parabolic times must be nonnegative")
    U0 = alg.identity_group(spec, (g.n,) * 3) if with_transport else None
    cur = FlowState(g, spec, 0.0, origin.A.copy(), origin.E.copy(), U=U0)
    out = []

    def emit(fs: FlowState):
        if observer is not None:
            observer(fs)
        if keep_states:
            out.append(fs)

    if s_samples[0] == 0.0:
        emit(FlowState(g, spec, 0.0, cur.A.copy(), cur.B.copy(),
                       U=None if U0 is None else U0.copy()))
        s_samples = s_samples[1:]

    kinds = ("heat", "heat", "ode") if with_transport else ("heat", "heat")
    sys = _IFSystem(g, kinds)

    def nonlin(y):
        NA, NB, _ = deturck_nonlinear(g, spec, y[0], y[1])
        if not with_transport:
            return NA, NB
        div_a = g.ifft(sum(derivative_hat(g, g.fft(y[0][l]), l) for l in range(3)))
        return NA, NB, _transport_rhs(y[2], div_a, spec)

    s_prev = 0.0
    state = (cur.A, cur.B) + ((cur.U,) if with_transport else ())
    for s_target in s_samples:
        nsub = _leg_substeps(s_prev, s_target, substeps)
        h = (s_target - s_prev) / nsub
        for _ in range(nsub):
            state = sys.step(state, h, nonlin)
            if with_transport:
                U, corr = alg.renormalize(state[2], spec)
                if corr > renorm_tol:
                    raise ParabolicBlowUpError(
                        f"caloric transport left the group: correction {corr:.2e}")
                state = (state[0], state[1], U)
        if not np.isfinite(state[0]).all():
            raise ParabolicBlowUpError(f"non-finite flow state at s={s_target:.3e}")
        emit(FlowState(g, spec, s_target, state[0].copy(), state[1].copy(),
                       U=state[2].copy() if with_transport else None))
        s_prev = s_target
    return out


def _transport_rhs(U: np.ndarray, a_s: np.ndarray, spec: StructureSpec) -> np.ndarray:
    """dU/ds = U A_s with A_s given by algebra coefficients a_s."""
    if spec.name == "u1":
        return a_s.copy()
    q = np.zeros((4,) + a_s.shape[1:])
    q[1:] = 0.5 * a_s  # basis e_a is half the quaternion unit
    return alg.quat_mul(U, q)


def caloric_transport(flow: list[FlowState]) -> list[np.ndarray]:
    """Transport fields U(s) recorded along a run_flow(with_transport=True)."""
    if any(f.U is None for f in flow):
        raise ValueError("flow was run without transport; use with_transport=True")
    return [f.U for f in flow]


def to_caloric(flow: list[FlowState]) -> list[np.ndarray]:
    """Caloric-gauge connection trajectory from the DeTurck flow.

    Applies the recorded transport as a gauge change at each sample:
    A_cal = U A U^{-1} - (dU) U^{-1}, which satisfies A_s = 0 and matches
    the Cauchy data at s = 0.
    """
    out = []
    for f in flow:
        if f.s == 0.0:
            out.append(f.A.copy())
            continue
        if f.U is None:
            raise ValueError("flow was run without transport")
        At, _ = gauge_transform(f.grid, f.A, None, f.U, f.spec)
        out.append(At)
    return out


def caloric_rhs_direct(grid: Grid, spec: StructureSpec, A: np.ndarray) -> np.ndarray:
    """dA_i/ds = D^l F_li, assembled covariantly (degenerate parabolic)."""
    return covariant_curl_div(grid, spec, A)


def run_caloric_direct(origin_A: np.ndarray, grid: Grid, spec: StructureSpec,
                       s_end: float, ds: float) -> np.ndarray:
    """Explicit RK4 on the caloric flow; guarded by the diffusion limit."""
    cut = np.floor(grid.n / 3.0)
    k2max = 3.0 * (2.0 * np.pi / grid.L * cut) ** 2
    if ds * k2max > 0.25:
        raise ValueError(
            f"explicit caloric step too stiff: ds*kmax^2 = {ds * k2max:.3f} > 0.25")
    nsteps = int(round(s_end / ds))
    A = origin_A.copy()
    for _ in range(nsteps):
        A = rk4_step((A,), ds, lambda y: (caloric_rhs_direct(grid, spec, y[0]),))[0]
        if not np.isfinite(A).all():
            raise ParabolicBlowUpError("caloric direct integration blew up")
    return A


# --- time stencils and the tension field -------------------------------------

def fornberg_weights(x_nodes, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights on arbitrary nodes (Fornberg recursion)."""
    x_nodes = np.asarray(x_nodes, float)
    n = len(x_nodes)
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1, c4 = 1.0, x_nodes[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2, c5, c4 = 1.0, c4, x_nodes[i] - x0
        for j in range(i):
            c3 = x_nodes[i] - x_nodes[j]
            c2 *= c3
            for k in range(mn, 0, -1):
                c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
            c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def make_stencil(state: CauchyState, delta: float, dt: float) -> "TimeStencil":
    """Five slices centered on `state`, from one RK4 trajectory.

    delta must be an integer multiple of dt.  The two earlier slices are
    integrated backward from the center, so the central slice is the input
    state itself.
    """
    from .dynamics import step_rk4
    m = int(round(delta / dt))
    if m < 1 or abs(m * dt - delta) > 1e-12 * max(1.0, delta):
        raise ValueError("stencil spacing must be an integer multiple of dt")
    slices = [None] * 5
    slices[2] = state.copy()
    st = state
    for node in (1, 0):
        for _ in range(m):
            st = step_rk4(st, -dt)
        slices[node] = st.copy()
    st = state
    for node in (3, 4):
        for _ in range(m):
            st = step_rk4(st, dt)
        slices[node] = st.copy()
    return TimeStencil(slices, delta)


@dataclass
class TimeStencil:
    """Five Cauchy slices at t0 + m*delta, m = -2..2, from one evolution."""

    states: list
    delta: float

    def __post_init__(self):
        if len(self.states) != 5:
            raise ValueError("time stencil needs exactly 5 slices")
        ts = [st.t for st in self.states]
        steps = np.diff(ts)
        if not np.allclose(steps, self.delta, rtol=1e-10, atol=1e-12):
            raise ValueError(f"stencil spacing not uniform: {ts}")

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def spec(self) -> StructureSpec:
        return self.states[0].spec

    @property
    def center(self) -> CauchyState:
        return self.states[2]

    def d_dt(self, fields: np.ndarray, node: int = 2) -> np.ndarray:
        """First time derivative at slice `node` from the 5 slices.

        fields has the slice axis first (length 5).
        """
        w = fornberg_weights(np.arange(5) * self.delta, node * self.delta, 1)
        return np.tensordot(w, fields, axes=(0, 0))

    def d2_dt2(self, fields: np.ndarray, node: int = 2) -> np.ndarray:
        w = fornberg_weights(np.arange(5) * self.delta, node * self.delta, 2)
        return np.tensordot(w, fields, axes=(0, 0))


def flow_stencil(stencil: TimeStencil, s_samples, substeps: int = 4):
    """Flow the five slices in lockstep, integrating A_0 per slice.

    A_0 obeys dA_0/ds = d_t(div A) - [div A, A_0] - D^l B_l with A_0(0)=0;
    the cross-slice time derivative of div A is evaluated stage by stage so
    every slice sees consistent data.  Returns a list (one entry per sample)
    of lists of 5 FlowStates carrying A, B, A0.
    """
    g, spec = stencil.grid, stencil.spec
    s_samples = np.asarray(sorted(float(s) for s in s_samples))
    d = spec.dim
    A = np.stack([st.A for st in stencil.states])       # (5, 3, d, n, n, n)
    B = np.stack([st.E for st in stencil.states])
    A0 = np.zeros((5, d) + (g.n,) * 3)
    wrows = np.stack([fornberg_weights(np.arange(5) * stencil.delta,
                                       m * stencil.delta, 1) for m in range(5)])

    sys = _IFSystem(g, ("heat", "heat", "ode"))

    def nonlin(y):
        Am, Bm, A0m = y
        NA = np.empty_like(Am)
        NB = np.empty_like(Bm)
        div_a = np.empty((5, d) + (g.n,) * 3)
        dive_cov = np.empty_like(div_a)
        for m in range(5):
            na, nb, _ = deturck_nonlinear(g, spec, Am[m], Bm[m])
            NA[m], NB[m] = na, nb
            Ah = g.fft(Am[m])
            div_a[m] = g.ifft(sum(derivative_hat(g, Ah[l], l) for l in range(3)))
            db = g.ifft(sum(derivative_hat(g, g.fft(Bm[m][l]), l) for l in range(3)))
            for l in range(3):
                db = db + _dealias(g, bracket(Am[m][l], Bm[m][l], spec))
            dive_cov[m] = db
        dt_div = np.tensordot(wrows, div_a, axes=(1, 0))   # (5, d, ...)
        NA0 = np.empty_like(A0m)
        for m in range(5):
            NA0[m] = dt_div[m] - _dealias(g, bracket(div_a[m], A0m[m], spec)) \
                     - dive_cov[m]
        return NA, NB, NA0

    out = []
    state = (A, B, A0)
    s_prev = 0.0
    if s_samples[0] == 0.0:
        out.append(_pack_stencil_states(g, spec, 0.0, state))
        s_samples = s_samples[1:]
    for s_target in s_samples:
        nsub = _leg_substeps(s_prev, s_target, substeps)
        h = (s_target - s_prev) / nsub
        for _ in range(nsub):
            state = sys.step(state, h, nonlin)
        if not np.isfinite(state[0]).all():
            raise ParabolicBlowUpError(f"stencil flow blew up at s={s_target:.3e}")
        out.append(_pack_stencil_states(g, spec, s_target, state))
        s_prev = s_target
    return out


def _pack_stencil_states(g, spec, s, state):
    A, B, A0 = state
    return [FlowState(g, spec, s, A[m].copy(), B[m].copy(), A0=A0[m].copy())
            for m in range(5)]


def tension_field(stencil: TimeStencil, s: float, substeps: int = 4,
                  coarse_warn: float = 1e-3):
    """Yang-Mills tension w_i(s) = D_0 F_{0i} - D^j F_{ji} at the central slice.

    At s = 0 this is the residual of the temporal-gauge equation itself.
    For s > 0 the five slices are flowed to level s and the time derivative
    of B is taken across them; D_0 includes the reconstructed A_0(s).
    """
    g, spec = stencil.grid, stencil.spec
    if s == 0.0:
        B = np.stack([st.E for st in stencil.states])
        dtB = stencil.d_dt(B)
        center = stencil.center
        w = dtB - covariant_curl_div(g, spec, center.A)
        _stencil_resolution_warning(stencil, B, coarse_warn)
        return w
    slices = flow_stencil(stencil, [s], substeps=substeps)[-1]
    B = np.stack([f.B for f in slices])
    dtB = stencil.d_dt(B)
    c = slices[2]
    w = np.empty_like(c.B)
    curl_div = covariant_curl_div(g, spec, c.A)
    for i in range(3):
        w[i] = dtB[i] + _dealias(g, bracket(c.A0, c.B[i], spec)) - curl_div[i]
    _stencil_resolution_warning(stencil, B, coarse_warn)
    return w


def _stencil_resolution_warning(stencil, B, threshold):
    """Compare the 5-point and 3-point time derivatives of B.

    The gap estimates the delta^2 error of the coarse rule; when it is not
    small against the derivative itself the stencil cannot resolve d/dt.
    """
    w5 = fornberg_weights(np.arange(5) * stencil.delta, 2 * stencil.delta, 1)
    w3 = np.array([0.0, -1.0, 0.0, 1.0, 0.0]) / (2.0 * stencil.delta)
    d5 = np.tensordot(w5, B, axes=(0, 0))
    d3 = np.tensordot(w3, B, axes=(0, 0))
    scale = float(np.max(np.abs(d5))) or 1.0
    gap = float(np.max(np.abs(d5 - d3))) / scale
    if gap > threshold * 500.0:
        warnings.warn(f"time stencil may be too coarse: 3/5-point gap {gap:.2e}")


def b_compatibility_residual(stencil: TimeStencil, s: float,
                             substeps: int = 4) -> float:
    """Relative gap between the evolved B(s) and the curvature assembled
    from the stencil: d_t A - grad A_0 + [A_0, A] at the central slice."""
    g, spec = stencil.grid, stencil.spec
    slices = flow_stencil(stencil, [s], substeps=substeps)[-1]
    A_all = np.stack([f.A for f in slices])
    dtA = stencil.d_dt(A_all)
    c = slices[2]
    gradA0 = np.stack([g.ifft(derivative_hat(g, g.fft(c.A0), i)) for i in range(3)])
    B_rec = np.empty_like(c.B)
    for i in range(3):
        B_rec[i] = dtA[i] - gradA0[i] + _dealias(g, bracket(c.A0, c.A[i], spec))
    return g.l2_norm(B_rec - c.B) / max(g.l2_norm(c.B), 1e-30)


def f_bilinear_part(origin: CauchyState, s: float, substeps: int = 6,
                    flow: list[FlowState] | None = None):
    """Difference route for the bilinear curvature part.

    F_bil(s) = F(s) - e^{s Lap} F(0), returned as the pair
    (magnetic pair components, electric components).
    """
    g, spec = origin.grid, origin.spec
    if flow is None:
        flow = run_flow(origin, [s], substeps=substeps)
    end = flow[-1]
    mag = curvature(g, end.A, spec) - heat_propagate(g, curvature(g, origin.A, spec), s)
    ele = end.B - heat_propagate(g, origin.E, s)
    return mag, ele


def _signed_pair(Fmag, i, j):
    c, sgn = _PAIR_IDX[(i, j)]
    return sgn * Fmag[c]


def _feq_quadratic(g: Grid, spec: StructureSpec, A, Fmag, B):
    """Bracket source of the DeTurck curvature equation for all components:
    2[F_a^l, F_lb] + 2[A^l, d_l F_ab] + [A^l, [A_l, F_ab]]."""
    dF = _grad_all(g, g.fft(Fmag))
    dB = _grad_all(g, g.fft(B))
    Gmag = np.empty_like(Fmag)
    Gele = np.empty_like(B)
    for c, (i, j) in enumerate(PAIRS):
        acc = 0.0
        for l in range(3):
            if l != i and l != j:
                acc = acc + 2.0 * bracket(_signed_pair(Fmag, i, l),
                                          _signed_pair(Fmag, l, j), spec)
            acc = acc + 2.0 * bracket(A[l], dF[l][c], spec)
            acc = acc + bracket(A[l], _dealias(g, bracket(A[l], Fmag[c], spec)), spec)
        Gmag[c] = acc
    for i in range(3):
        acc = 0.0
        for l in range(3):
            if l != i:
                acc = acc + 2.0 * bracket(B[l], _signed_pair(Fmag, l, i), spec)
            acc = acc + 2.0 * bracket(A[l], dB[l][i], spec)
            acc = acc + bracket(A[l], _dealias(g, bracket(A[l], B[i], spec)), spec)
        Gele[i] = acc
    return _dealias(g, Gmag), _dealias(g, Gele)


def f_bilinear_duhamel(origin: CauchyState, s: float, n_quad: int = 16,
                       substeps: int = 6):
    """Duhamel-integral route for F_bil, by Gauss-Legendre in s'."""
    g, spec = origin.grid, origin.spec
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    sq = 0.5 * s * (nodes + 1.0)
    wq = 0.5 * s * weights
    order = np.argsort(sq)
    flows = run_flow(origin, sq[order], substeps=substeps)
    acc_mag = 0.0
    acc_ele = 0.0
    for f, w in zip(flows, wq[order]):
        Fmag = curvature(g, f.A, spec)
        Gmag, Gele = _feq_quadratic(g, spec, f.A, Fmag, f.B)
        acc_mag = acc_mag + w * heat_propagate(g, Gmag, s - f.s)
        acc_ele = acc_ele + w * heat_propagate(g, Gele, s - f.s)
    return acc_mag, acc_ele


def w2_leading(origin: CauchyState, s: float, n_quad: int = 32) -> np.ndarray:
    """Leading bilinear tension term via the Duhamel heat form.

    Applies the W symbol, node by node, to the bracket pair
    (E^l(0), d_i E_l(0) - 2 d_l E_i(0)); the overall sign follows the
    w_i = D_0 F_{0i} - D^j F_{ji} convention.
    """
    g, spec = origin.grid, origin.spec
    E = origin.E
    Eh = g.fft(E)
    dE = _grad_all(g, Eh)                       # dE[l][i] = d_l E_i
    G = np.empty((3, 3) + E.shape[1:])          # G[i, l] = d_i E_l - 2 d_l E_i
    for i in range(3):
        for l in range(3):
            G[i, l] = dE[i][l] - 2.0 * dE[l][i]
    nodes, weights = np.polynomial.legendre.leggauss(n_quad)
    sq = 0.5 * s * (nodes + 1.0)
    wq = 0.5 * s * weights
    Gh = g.fft(G)
    acc = np.zeros((3,) + E.shape[1:])
    for s_node, w_node in zip(sq, wq):
        decay = np.exp(-s_node * g.k2)
        Eheat = g.ifft(decay * Eh)
        Gheat = g.ifft(decay * Gh)
        integ = np.empty_like(acc)
        for i in range(3):
            t = 0.0
            for l in range(3):
                t = t + bracket(Eheat[l], Gheat[i, l], spec)
            integ[i] = t
        acc = acc + w_node * heat_propagate(g, integ, s - s_node)
    return _dealias(g, -2.0 * acc)
