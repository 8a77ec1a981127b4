"""Time-domain moment dynamics of the linearized mirror-field system.

State vector (dq, dp, dx, dy): mirror position/momentum quadratures and
cavity amplitude/phase quadratures, vacuum variance 1. The field phase
is chosen so the mean intracavity amplitude is real and positive, which
puts the radiation-pressure force entirely into the amplitude
quadrature dx and the mirror backaction into dy; observables are
invariant under this gauge choice. In units of the mechanical frequency
(kappa -> 1/b, Gamma -> 1/Q) the drift is

    dq' =  dp
    dp' = -dq - dp/Q + g dx          g = sqrt(2 phi_nl / b)
    dx' = -dx/b + (phi/b) dy
    dy' = -dy/b - (phi/b) dx + g dq

driven by white noise with diffusion diag(0, 2(2 n_t_i + 1)/Q, 2/b,
2/b): a flat Markovian mirror bath, matching the flat thermal weight of
the spectral route, plus vacuum input noise on the field. The coupling
g is *derived* from Delta_nl = G^2 |a_ss|^2 / Omega_m, not hard-coded, and
is pinned by the cross-method test against the spectrum integrals.

Exposed timestamps are in units of 1/Gamma; internal integration time
is in units of 1/Omega_m (tau = t * Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import (
    GridMismatch,
    InvalidParams,
    NonPhysical,
    SolverFailure,
    StepSizeUnderflow,
    Unstable,
    WindowTooShort,
)
from .model import NormalizedParams
from .spectra import Method, ThermalNoiseModel, VarianceResult

__all__ = [
    "SYMPLECTIC_FORM",
    "LinearSystem",
    "CovarianceState",
    "TwoTimeGrid",
    "HomodyneResult",
    "build_system",
    "thermal_covariance",
    "physicality_defect",
    "lyapunov_steady_state",
    "steady_variances",
    "evolve_covariance",
    "output_variance_track",
    "matched_filter_pairs",
    "two_time_correlations",
    "homodyne_variance",
]

#: symplectic form J for [z_j, z_k] = 2i J_jk in the (dq, dp, dx, dy) basis
SYMPLECTIC_FORM = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)
SYMPLECTIC_FORM.setflags(write=False)

_QUAD_INDEX = {"x_out": 2, "y_out": 3}

# upper-triangle (i, j) pairs packing a symmetric 4x4 into 10 entries
_VECH = [(i, j) for i in range(4) for j in range(i, 4)]


@dataclass(frozen=True)
class LinearSystem:
    """Drift/diffusion pair of the linearized dynamics, rates in Omega_m units."""

    drift: np.ndarray
    diffusion: np.ndarray
    params: NormalizedParams
    coupling: float
    basis: tuple[str, ...] = ("dq", "dp", "dx", "dy")

    @property
    def kappa(self) -> float:
        """Cavity decay rate in Omega_m units."""
        return 1.0 / self.params.b


@dataclass(frozen=True)
class CovarianceState:
    """Symmetrized 4x4 covariance at time t (t in 1/Gamma units)."""

    t: float
    v: np.ndarray


@dataclass(frozen=True)
class TwoTimeGrid:
    """Sampled smooth part of an output-quadrature correlation.

    ``times`` holds (t, t') pairs in 1/Gamma units; ``values`` the
    symmetrized correlation divided by kappa, with the shot-noise delta
    spike excluded by construction. ``demod_rate`` is the local
    oscillator rotation rate in Gamma units (0 means the lab-frame
    quadrature). ``weights``, when present, are the quadrature weights
    of the lower-triangle scheme that generated the pairs.
    """

    times: np.ndarray
    values: np.ndarray
    quadrature: str
    demod_rate: float
    params: NormalizedParams
    weights: np.ndarray | None = None


@dataclass(frozen=True)
class HomodyneResult:
    """Measured quadrature variance (shot noise = 1)."""

    dx_m2: float
    lo_rate: float  # units of Gamma
    window: float   # units of 1/lo_rate


def build_system(params: NormalizedParams) -> LinearSystem:
    """Assemble the drift and diffusion matrices at an operating point.

    Raises
    ------
    Unstable
        If a static stability margin is not positive, or if the drift
        has an eigenvalue with nonnegative real part (dynamical
        instability, which supersedes the static check).
    """
    phi, phi_nl, b, q = params.phi, params.phi_nl, params.b, params.q_factor
    phip = 1.0 + phi * phi + 2.0 * phi * phi_nl
    spring = 1.0 + phi * phi - 2.0 * phi * phi_nl
    if phip <= 0 or spring <= 0:
        raise Unstable(f"static stability violated (margins {phip:.3g}, {spring:.3g})")

    g = math.sqrt(2.0 * phi_nl / b)
    drift = np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [-1.0, -1.0 / q, g, 0.0],
            [0.0, 0.0, -1.0 / b, phi / b],
            [g, 0.0, -phi / b, -1.0 / b],
        ]
    )
    diffusion = np.diag([0.0, 2.0 * (2.0 * params.n_t_i + 1.0) / q, 2.0 / b, 2.0 / b])

    max_re = float(np.max(np.linalg.eigvals(drift).real))
    if max_re >= 0.0:
        raise Unstable(f"drift eigenvalue with Re = {max_re:.3g} >= 0")

    drift.setflags(write=False)
    diffusion.setflags(write=False)
    return LinearSystem(drift=drift, diffusion=diffusion, params=params, coupling=g)


def thermal_covariance(params: NormalizedParams) -> CovarianceState:
    """Mirror thermalized at n_t_i, cavity in vacuum, at t = 0."""
    s = 2.0 * params.n_t_i + 1.0
    return CovarianceState(t=0.0, v=np.diag([s, s, 1.0, 1.0]))


def physicality_defect(v: np.ndarray) -> float:
    """Smallest eigenvalue of V + iJ; >= 0 for a physical state."""
    return float(np.linalg.eigvalsh(v + 1j * SYMPLECTIC_FORM).min().real)


def _vech(m: np.ndarray) -> np.ndarray:
    return np.array([m[i, j] for i, j in _VECH])


def _unvech(x) -> np.ndarray:
    v = np.empty((4, 4))
    for val, (i, j) in zip(x, _VECH):
        v[i, j] = val
        v[j, i] = val
    return v


def _require_stable(sys: LinearSystem) -> None:
    max_re = float(np.max(np.linalg.eigvals(sys.drift).real))
    if max_re >= 0.0:
        raise Unstable(f"drift eigenvalue with Re = {max_re:.3g} >= 0")


def lyapunov_steady_state(sys: LinearSystem) -> CovarianceState:
    """Steady covariance from A V + V A^T + D = 0 by direct linear solve.

    The ten independent entries of the symmetric V are solved for
    exactly; the residual is verified below 1e-12 (relative to ||V||).
    """
    _require_stable(sys)
    a, d = sys.drift, sys.diffusion
    cols = []
    for (k, l) in _VECH:
        e = np.zeros((4, 4))
        e[k, l] = 1.0
        e[l, k] = 1.0
        cols.append(_vech(a @ e + e @ a.T))
    m = np.column_stack(cols)
    x = np.linalg.solve(m, -_vech(d))
    v = _unvech(x)
    resid = np.linalg.norm(a @ v + v @ a.T + d)
    if resid > 1e-12 * max(1.0, np.linalg.norm(v)):
        raise SolverFailure(f"steady-state residual {resid:.3e} too large")
    return CovarianceState(t=math.inf, v=v)


def steady_variances(sys: LinearSystem) -> VarianceResult:
    """Mirror block of the Lyapunov steady state as a VarianceResult."""
    v = lyapunov_steady_state(sys).v
    return VarianceResult.from_variances(
        float(v[0, 0]), float(v[1, 1]),
        method=Method.LYAPUNOV,
        noise_model=ThermalNoiseModel.MARKOV_FLAT,
    )


def evolve_covariance(
    sys: LinearSystem,
    v0: CovarianceState | None = None,
    t_end: float = 1.0,
    *,
    rtol: float = 1e-9,
    n_samples: int = 201,
    t_eval=None,
) -> list[CovarianceState]:
    """Integrate dV/dt = A V + V A^T + D from v0 up to t_end (1/Gamma units).

    Explicit adaptive Runge-Kutta stepping on the ten independent
    entries, with the step capped at a tenth of the cavity lifetime so
    the fast field scale is always resolved. Default initial condition:
    thermal mirror, vacuum field (cooling switched on at t = 0).

    Raises
    ------
    StepSizeUnderflow
        If the integrator cannot advance.
    NonPhysical
        If a stored sample violates V + iJ >= 0 beyond tolerance,
        which signals integrator failure rather than physics.
    """
    if t_end <= 0:
        raise InvalidParams(f"t_end must be > 0, got {t_end}")
    if v0 is None:
        v0 = thermal_covariance(sys.params)
    q = sys.params.q_factor
    tau_end = t_end * q
    if t_eval is None:
        t_eval = np.linspace(0.0, t_end, n_samples)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
    a, d = sys.drift, sys.diffusion
    d_vech = _vech(d)

    def rhs(_tau, x):
        v = _unvech(x)
        return _vech(a @ v + v @ a.T) + d_vech

    scale = max(1.0, float(np.max(np.abs(v0.v))))
    sol = solve_ivp(
        rhs,
        (0.0, tau_end),
        _vech(v0.v),
        method="RK45",
        rtol=rtol,
        atol=rtol * 1e-3 * scale,
        max_step=0.1 * sys.params.b,
        t_eval=t_eval * q,
    )
    if not sol.success:
        raise StepSizeUnderflow(sol.message)

    out = []
    tol = -1e-9 * scale
    for tau, col in zip(sol.t, sol.y.T):
        v = _unvech(col)
        defect = physicality_defect(v)
        if defect < tol:
            raise NonPhysical(
                f"physicality defect {defect:.3e} at t={tau / q:.6g} (1/Gamma)"
            )
        out.append(CovarianceState(t=tau / q, v=v))
    return out


def output_variance_track(sys: LinearSystem, trajectory) -> np.ndarray:
    """Equal-time output-field correlations C_x(t,t), C_y(t,t) in kappa units.

    Smooth part only: C_a(t,t)/kappa = 2 (V_aa(t) - 1), the shot-noise
    spike being excluded. Returns an (n, 2) array aligned with the
    trajectory samples.
    """
    track = np.empty((len(trajectory), 2))
    for i, state in enumerate(trajectory):
        track[i, 0] = 2.0 * (state.v[2, 2] - 1.0)
        track[i, 1] = 2.0 * (state.v[3, 3] - 1.0)
    return track


def matched_filter_pairs(window: float, n_outer: int = 64, n_inner: int = 32):
    """Gauss-Legendre nodes/weights on the triangle 0 <= t' <= t <= window.

    The correlation kernel is smooth on each causal ordering but kinked
    across the diagonal, so the square is integrated as twice the lower
    triangle. Times are in the same units as the trajectory (1/Gamma).
    """
    if window <= 0:
        raise InvalidParams(f"window must be > 0, got {window}")
    xo, wo = leggauss(n_outer)
    xi, wi = leggauss(n_inner)
    t_out = 0.5 * window * (xo + 1.0)
    w_out = 0.5 * window * wo
    times = np.empty((n_outer * n_inner, 2))
    weights = np.empty(n_outer * n_inner)
    k = 0
    for t, wt in zip(t_out, w_out):
        inner_t = 0.5 * t * (xi + 1.0)
        inner_w = 0.5 * t * wi
        for tp, wtp in zip(inner_t, inner_w):
            times[k, 0] = t
            times[k, 1] = tp
            weights[k] = wt * wtp
            k += 1
    return times, weights


def _propagators(sys: LinearSystem, taus: np.ndarray) -> np.ndarray:
    """exp(A tau) for every tau, by eigendecomposition when well conditioned."""
    a = sys.drift
    lam, s = np.linalg.eig(a)
    if np.linalg.cond(s) < 1e8:
        s_inv = np.linalg.inv(s)
        phases = np.exp(np.multiply.outer(taus, lam))  # (n, 4)
        out = np.einsum("ik,nk,kj->nij", s, phases, s_inv).real
        return out
    return np.array([expm(a * tau) for tau in taus])


def two_time_correlations(
    sys: LinearSystem,
    trajectory,
    quadrature: str,
    pairs,
    *,
    demod_rate: float = 0.0,
    weights=None,
) -> TwoTimeGrid:
    """Smooth symmetrized correlation of an output quadrature on (t, t') pairs.

    For t' >= t the intracavity correlation follows the regression rule
    <z(t) z^T(t')>_sym = V(t) exp(A^T (t'-t)); composing it with the
    input-output relation a_out = sqrt(2 kappa) a - a_in cancels the
    input cross terms into

        C(t, t') = 2 kappa [(V(t) - 1) exp(A^T (t'-t))]  (field block),

    whose shot-noise delta has been dropped. V(t) between trajectory
    samples is reconstructed exactly from the nearest earlier sample via
    V(t) = V_ss + e^{A dt} (V_k - V_ss) e^{A^T dt}.

    With ``demod_rate`` = Delta/Gamma the stored scalar is the
    correlation of the co-rotating quadrature cos(theta) x_out -
    sin(theta) y_out, theta = demod_rate * t (+ pi/2 for ``y_out``):
    the frame in which a sideband-matched local oscillator measures.
    At the default 0 the plain lab-frame quadrature is returned.

    Values are reported in kappa units; times in 1/Gamma units.
    """
    if quadrature not in _QUAD_INDEX:
        raise GridMismatch(f"unknown quadrature {quadrature!r}")
    pairs = np.asarray(pairs, dtype=float)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise GridMismatch(f"pairs must be (n, 2), got shape {pairs.shape}")
    if np.any(pairs < 0):
        raise GridMismatch("two-time correlations need t, t' >= 0")

    traj_t = np.array([s.t for s in trajectory])
    if pairs.min() < traj_t[0] - 1e-12 or pairs.max() > traj_t[-1] + 1e-12:
        raise GridMismatch(
            f"trajectory [{traj_t[0]}, {traj_t[-1]}] does not cover pairs "
            f"[{pairs.min()}, {pairs.max()}]"
        )

    q = sys.params.q_factor
    v_ss = lyapunov_steady_state(sys).v
    eye = np.eye(4)

    t_early = pairs.min(axis=1)
    t_late = pairs.max(axis=1)
    anchor = np.clip(np.searchsorted(traj_t, t_early, side="right") - 1, 0, None)
    tau_anchor = (t_early - traj_t[anchor]) * q
    tau_lag = (t_late - t_early) * q

    e_anchor = _propagators(sys, tau_anchor)
    e_lag = _propagators(sys, tau_lag)

    theta0 = 0.0 if quadrature == "x_out" else 0.5 * math.pi
    values = np.empty(len(pairs))
    for n in range(len(pairs)):
        vk = trajectory[anchor[n]].v
        ea = e_anchor[n]
        v_t = v_ss + ea @ (vk - v_ss) @ ea.T
        block = ((v_t - eye) @ e_lag[n].T)[2:, 2:]
        if demod_rate == 0.0:
            idx = _QUAD_INDEX[quadrature] - 2
            values[n] = 2.0 * block[idx, idx]
        else:
            th_e = demod_rate * t_early[n] + theta0
            th_l = demod_rate * t_late[n] + theta0
            ce = np.array([math.cos(th_e), -math.sin(th_e)])
            cl = np.array([math.cos(th_l), -math.sin(th_l)])
            values[n] = 2.0 * (ce @ block @ cl)

    return TwoTimeGrid(
        times=pairs,
        values=values,
        quadrature=quadrature,
        demod_rate=demod_rate,
        params=sys.params,
        weights=None if weights is None else np.asarray(weights, dtype=float),
    )


def homodyne_variance(grid: TwoTimeGrid, lo_rate: float) -> HomodyneResult:
    """Variance measured with a temporally matched local oscillator.

    dx_m^2 = 1 + int int E(t) E(t') C(t, t') dt dt' with the unit-norm
    exponential filter E(t) = sqrt(2 lo_rate) exp(-lo_rate t); the
    leading 1 is the shot noise of the excluded delta term. ``lo_rate``
    is in Gamma units, matching the grid's time units.

    Raises
    ------
    GridMismatch
        If the grid carries no quadrature weights.
    WindowTooShort
        If the filter mass outside the window could shift the integral
        by more than 1%.
    """
    if grid.weights is None:
        raise GridMismatch("homodyne integration needs a grid built with weights")
    if lo_rate <= 0:
        raise InvalidParams(f"lo_rate must be > 0, got {lo_rate}")
    window = float(grid.times.max())
    if window < 5.0 / lo_rate:
        raise WindowTooShort(
            f"window {window:.3g} shorter than 5/lo_rate = {5.0 / lo_rate:.3g}"
        )

    kappa_over_gamma = grid.params.q_factor / grid.params.b
    c_vals = grid.values * kappa_over_gamma  # back to 1/Gamma-time rate units
    env = 2.0 * lo_rate * np.exp(-lo_rate * grid.times.sum(axis=1))
    integral = 2.0 * float(np.sum(grid.weights * env * c_vals))

    c_max = float(np.max(np.abs(c_vals))) if len(c_vals) else 0.0
    x = math.exp(-lo_rate * window)
    tail = c_max * (2.0 / lo_rate) * (2.0 * x - x * x)
    if tail > 0.01 * abs(integral):
        raise WindowTooShort(
            f"truncation bound {tail:.3e} exceeds 1% of integral {integral:.3e}"
        )
    return HomodyneResult(
        dx_m2=1.0 + integral, lo_rate=lo_rate, window=window * lo_rate
    )
