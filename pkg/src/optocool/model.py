"""Operating-point model of a driven cavity coupled to a movable mirror.

Physical parameters, their dimensionless normalization, the cubic
steady-state (bistability) relation, and static stability classification.

All downstream modules work in the normalized coordinates

    b      = Omega_m / kappa    mechanical frequency in cavity linewidths
    phi    = Delta / kappa      effective detuning (signed)
    phi_nl = Delta_nl / kappa   static radiation-pressure detuning shift
    Q      = Omega_m / Gamma    mechanical quality factor
    n_t_i                       initial thermal occupancy of the mirror

where kappa is the cavity amplitude decay rate, Omega_m and Gamma the
mechanical frequency and damping, Delta = Delta_c - Delta_nl the detuning
dressed by the static mirror displacement, and Delta_nl = G^2 |a_ss|^2 /
Omega_m the shift produced by the mean intracavity intensity |a_ss|^2.
Quadratures are normalized so the vacuum variance is 1 ([q, p] = 2i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import InvalidParams, NoStableBranch, SolverFailure

__all__ = [
    "PhysicalParams",
    "NormalizedParams",
    "Branch",
    "SteadyState",
    "StabilityReport",
    "thermal_occupancy",
    "solve_steady_state",
    "stability_check",
    "normalize",
    "denormalize",
]

#: residual tolerance on the normalized steady-state cubic
CUBIC_RESIDUAL_TOL = 1e-10


def thermal_occupancy(temperature: float, omega_m: float) -> float:
    """Mean thermal phonon number of an oscillator mode.

    Evaluates 1 / (exp(hbar*omega_m / (kB*T)) - 1), with the T = 0 limit
    returned as an exact zero.

    Parameters
    ----------
    temperature : float
        Bath temperature [K], >= 0.
    omega_m : float
        Mechanical angular frequency [rad/s], > 0.
    """
    if omega_m <= 0:
        raise InvalidParams(f"omega_m must be > 0, got {omega_m}")
    if temperature < 0:
        raise InvalidParams(f"temperature must be >= 0, got {temperature}")
    if temperature == 0:
        return 0.0
    x = constants.hbar * omega_m / (constants.k * temperature)
    if x > 700.0:  # expm1 would overflow; occupancy ~ exp(-x)
        return math.exp(-x)
    return 1.0 / math.expm1(x)


@dataclass(frozen=True)
class PhysicalParams:
    """SI operating point of the cavity-mirror system.

    Attributes
    ----------
    omega_m : float
        Mechanical angular frequency [rad/s].
    kappa : float
        Cavity amplitude decay rate [rad/s].
    gamma : float
        Mechanical damping rate [rad/s]; the oscillator must be
        underdamped (gamma < omega_m).
    mass : float
        Effective oscillator mass [kg].
    cavity_length : float
        Cavity length L [m].
    omega_c : float
        Cavity resonance angular frequency [rad/s].
    delta_c : float
        Bare laser-cavity detuning omega_c - omega_L [rad/s], signed.
    drive_intensity : float
        Incident photon flux |a_in|^2 [photons/s].
    temperature : float
        Bath temperature [K].
    """

    omega_m: float
    kappa: float
    gamma: float
    mass: float
    cavity_length: float
    omega_c: float
    delta_c: float
    drive_intensity: float
    temperature: float

    def __post_init__(self):
        bad = []
        for name in ("omega_m", "kappa", "gamma", "mass", "cavity_length", "omega_c"):
            if not getattr(self, name) > 0:
                bad.append(f"{name} must be > 0")
        if self.drive_intensity < 0:
            bad.append("drive_intensity must be >= 0")
        if self.temperature < 0:
            bad.append("temperature must be >= 0")
        if self.gamma > 0 and self.omega_m > 0 and not self.gamma < self.omega_m:
            bad.append("gamma must be < omega_m (underdamped oscillator)")
        if bad:
            raise InvalidParams("; ".join(bad))

    @property
    def coupling_constant(self) -> float:
        """Optomechanical coupling G = (omega_c / L) sqrt(hbar / (M Omega_m))."""
        return (self.omega_c / self.cavity_length) * math.sqrt(
            constants.hbar / (self.mass * self.omega_m)
        )

    @property
    def drive_strength(self) -> float:
        """Normalized drive P = 2 G^2 |a_in|^2 / (Omega_m kappa^2)."""
        g = self.coupling_constant
        return 2.0 * g * g * self.drive_intensity / (self.omega_m * self.kappa**2)


@dataclass(frozen=True)
class NormalizedParams:
    """Dimensionless operating point (b, phi, phi_nl, Q, n_t_i).

    Static stability (1 + phi^2 + 2*phi*phi_nl > 0) is *reported* by
    :func:`stability_check` rather than enforced at construction, so that
    unstable points can be represented, swept over and flagged.
    """

    b: float
    phi: float
    phi_nl: float
    q_factor: float
    n_t_i: float

    def __post_init__(self):
        bad = []
        if not self.b > 0:
            bad.append(f"b must be > 0, got {self.b}")
        if not self.phi_nl >= 0:
            bad.append(f"phi_nl must be >= 0, got {self.phi_nl}")
        if not self.q_factor > 1:
            bad.append(f"q_factor must be > 1, got {self.q_factor}")
        if not self.n_t_i >= 0:
            bad.append(f"n_t_i must be >= 0, got {self.n_t_i}")
        if bad:
            raise InvalidParams("; ".join(bad))

    def replace(self, **kwargs) -> "NormalizedParams":
        fields = dict(
            b=self.b, phi=self.phi, phi_nl=self.phi_nl,
            q_factor=self.q_factor, n_t_i=self.n_t_i,
        )
        fields.update(kwargs)
        return NormalizedParams(**fields)


@dataclass(frozen=True)
class Branch:
    """One steady-state intensity branch of the cubic."""

    u: float        # Delta_nl / kappa on this branch
    phi_eff: float  # phi_c - u
    stable: bool
    marginal: bool


@dataclass(frozen=True)
class SteadyState:
    """All real branches of the steady-state cubic, sorted by u."""

    phi_c: float
    drive: float
    branches: tuple[Branch, ...]

    def stable_branches(self) -> tuple[Branch, ...]:
        return tuple(br for br in self.branches if br.stable)


class StabilityReport(tuple):
    """(stable, margin) pair returned by :func:`stability_check`."""

    __slots__ = ()

    def __new__(cls, stable: bool, margin: float):
        return super().__new__(cls, (stable, margin))

    @property
    def stable(self) -> bool:
        return self[0]

    @property
    def margin(self) -> float:
        return self[1]


def stability_check(params: NormalizedParams) -> StabilityReport:
    """Static stability margin 1 + phi^2 + 2*phi*phi_nl.

    Positive margin is required for a stable steady state; on the
    blue-detuned side (phi < 0) this is the condition that the
    radiation-pressure spring does not overwhelm the bare restoring
    force. On branches of the cubic it must be combined with the
    slope test dP/du > 0 (see :func:`solve_steady_state`).
    """
    margin = 1.0 + params.phi**2 + 2.0 * params.phi * params.phi_nl
    return StabilityReport(margin > 0.0, margin)


def _cubic(u: float, phi_c: float, drive: float) -> float:
    return u * (1.0 + (phi_c - u) ** 2) - drive


def _cubic_slope(u: float, phi_c: float) -> float:
    # d/du of u*(1 + (phi_c - u)^2)
    return 3.0 * u * u - 4.0 * phi_c * u + 1.0 + phi_c * phi_c


def solve_steady_state(phi_c: float, drive: float) -> SteadyState:
    """Solve the steady-state cubic u*(1 + (phi_c - u)^2) = P.

    u = Delta_nl/kappa parametrizes the intracavity intensity, phi_c =
    Delta_c/kappa the bare detuning and P = 2 G^2 |a_in|^2 / (Omega_m
    kappa^2) the normalized drive. Real roots are found from the
    companion matrix, polished with one Newton step, and classified:

    * ``stable``   -- positive static margin *and* positive slope dP/du;
    * ``marginal`` -- fold points (double roots, dP/du ~ 0), excluded
      from stable selection.

    Roots are returned sorted ascending, with multiplicity, so a double
    root appears twice.
    """
    if drive < 0:
        raise InvalidParams(f"drive must be >= 0, got {drive}")

    coeffs = [1.0, -2.0 * phi_c, 1.0 + phi_c * phi_c, -drive]
    roots = np.roots(coeffs)

    # conjugate symmetry of the companion-matrix roots guarantees one or
    # three survive this filter (a double root splits into a tight pair)
    scale = max(1.0, abs(phi_c))
    real = [float(r.real) for r in roots if abs(r.imag) <= 1e-7 * max(1.0, abs(r))]

    slope_scale = 1.0 + phi_c * phi_c
    polished = []
    for u in real:
        du = _cubic_slope(u, phi_c)
        if abs(du) > 1e-6 * slope_scale:
            u = u - _cubic(u, phi_c, drive) / du
        u = max(u, 0.0)
        polished.append(u)
    polished.sort()

    tol = CUBIC_RESIDUAL_TOL * max(1.0, drive, scale**3)
    branches = []
    for u in polished:
        if abs(_cubic(u, phi_c, drive)) > tol:
            raise SolverFailure(
                f"cubic residual {abs(_cubic(u, phi_c, drive)):.3e} exceeds "
                f"tolerance at u={u!r} (phi_c={phi_c}, P={drive})"
            )
        phi = phi_c - u
        slope = _cubic_slope(u, phi_c)
        marginal = abs(slope) <= 1e-6 * slope_scale
        margin = 1.0 + phi * phi + 2.0 * phi * u
        stable = (not marginal) and slope > 0.0 and margin > 0.0
        branches.append(Branch(u=u, phi_eff=phi, stable=stable, marginal=marginal))

    return SteadyState(phi_c=phi_c, drive=drive, branches=tuple(branches))


def _select_branch(steady: SteadyState, branch) -> Branch:
    if isinstance(branch, Branch):
        return branch
    if branch == "stable":
        stable = steady.stable_branches()
        if not stable:
            raise NoStableBranch(
                f"no stable branch at phi_c={steady.phi_c}, P={steady.drive}"
            )
        return stable[0]
    return steady.branches[int(branch)]


def normalize(
    p: PhysicalParams,
    steady: SteadyState | None = None,
    branch="stable",
) -> NormalizedParams:
    """Reduce an SI operating point to normalized coordinates.

    The steady-state cubic is solved (unless a precomputed ``steady`` is
    supplied) and one branch selected: ``"stable"`` picks the lowest
    stable branch (the one reached by ramping the drive up from zero),
    an integer indexes the ascending-u branch list, and a
    :class:`Branch` instance is used as-is.

    Raises
    ------
    NoStableBranch
        If ``branch="stable"`` and every branch is unstable.
    """
    if steady is None:
        steady = solve_steady_state(p.delta_c / p.kappa, p.drive_strength)
    sel = _select_branch(steady, branch)
    return NormalizedParams(
        b=p.omega_m / p.kappa,
        phi=sel.phi_eff,
        phi_nl=max(sel.u, 0.0),
        q_factor=p.omega_m / p.gamma,
        n_t_i=thermal_occupancy(p.temperature, p.omega_m),
    )


def denormalize(
    n: NormalizedParams,
    omega_m: float = 2 * math.pi * 1.0e7,
    mass: float = 1.0e-12,
    cavity_length: float = 1.0e-3,
    omega_c: float = 2 * math.pi * constants.c / 1.064e-6,
) -> PhysicalParams:
    """Reconstruct one SI realization of a normalized operating point.

    The normalized coordinates fix only ratios, so the mechanical
    frequency, mass, cavity length and optical frequency act as free
    scale anchors. ``normalize(denormalize(n))`` recovers ``n`` (on the
    matching branch) to machine precision.
    """
    kappa = omega_m / n.b
    gamma = omega_m / n.q_factor
    delta_nl = n.phi_nl * kappa
    delta = n.phi * kappa
    g = (omega_c / cavity_length) * math.sqrt(constants.hbar / (mass * omega_m))
    a_sq = delta_nl * omega_m / (g * g)
    a_in_sq = a_sq * (kappa**2 + delta**2) / (2.0 * kappa)
    if n.n_t_i > 0:
        temperature = constants.hbar * omega_m / (
            constants.k * math.log1p(1.0 / n.n_t_i)
        )
    else:
        temperature = 0.0
    return PhysicalParams(
        omega_m=omega_m,
        kappa=kappa,
        gamma=gamma,
        mass=mass,
        cavity_length=cavity_length,
        omega_c=omega_c,
        delta_c=delta + delta_nl,
        drive_intensity=a_in_sq,
        temperature=temperature,
    )
