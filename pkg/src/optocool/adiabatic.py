"""Effective-oscillator approximation of the cooled mirror.

When the dressed mirror response stays sharply peaked at the mechanical
resonance (Gamma << Gamma_eff << kappa), the cavity acts on the mirror
as a second bath at vacuum temperature. The closed-form steady-state
variance then splits into a thermal and a radiation-pressure part,

    dq^2 = (1 - eta) (1 + 2 n_t_i) + eta (1 + b^2 + phi^2) / (2 phi b),

weighted by a transfer efficiency eta = f phi_nl Q / (1 + f phi_nl Q)
with coupling shape factor f = 4 phi b / ((1 - b^2 + phi^2)^2 + 4 b^2).
Maximizing f over the detuning gives the closed-form optimum phi*.

This module provides the effective rates, the closed-form variance and
its decomposition, the optimal detuning, regime-validity flags, and a
grid + golden-section optimizer whose objective is the *exact* spectrum
integral (the closed form only seeds the search).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ImaginaryFrequency,
    InvalidParams,
    InvalidRegime,
    OptimizationFailure,
    QuadratureFailure,
    Unstable,
)
from .model import NormalizedParams
from .spectra import (
    Method,
    ThermalNoiseModel,
    VarianceResult,
    _effective_peak,
    integrate_variances,
)

__all__ = [
    "EffectiveOscillator",
    "CoolingDecomposition",
    "RegimeReport",
    "OperatingPoint",
    "effective_rates",
    "approx_variance",
    "decompose",
    "optimal_detuning",
    "regime_validity",
    "optimize_operating_point",
]


@dataclass(frozen=True)
class EffectiveOscillator:
    """Cavity-dressed oscillator parameters, as ratios to the bare ones."""

    omega_eff_ratio: float  # Omega_eff / Omega_m
    gamma_eff_ratio: float  # Gamma_eff / Gamma; <= 0 signals heating
    q_eff: float            # Omega_eff / Gamma_eff


@dataclass(frozen=True)
class CoolingDecomposition:
    """Thermal/radiation split of the closed-form variance."""

    f: float
    eta: float
    dq2_thermal: float
    dq2_radiation: float
    dq2: float


class RegimeReport(NamedTuple):
    adiabatic_ok: bool
    gamma_eff_over_gamma: float
    gamma_eff_over_kappa: float
    phi_nl_omega_over_2kappa: float


class OperatingPoint(NamedTuple):
    b_opt: float
    phi_opt: float
    n_t_f_min: float


def effective_rates(params: NormalizedParams) -> EffectiveOscillator:
    """Effective resonance frequency and relaxation rate of the mirror.

    Omega_eff/Omega_m = sqrt(1 - 2 phi phi_nl Re[1/D(1)]) and
    Gamma_eff/Gamma = 1 + 2 phi phi_nl Q Im[1/D(1)], with D evaluated at
    the mechanical resonance. A negative damping ratio is returned
    as-is (blue-detuned heating); a non-real frequency raises.
    """
    w2, gamma_ratio = _effective_peak(
        params.b, params.phi, params.phi_nl, params.q_factor
    )
    if w2 <= 0:
        raise ImaginaryFrequency(
            f"effective spring softened away (1 - 2 phi phi_nl Re[1/D] = {w2:.3g})"
        )
    omega_ratio = math.sqrt(w2)
    q_eff = params.q_factor * omega_ratio / gamma_ratio if gamma_ratio != 0 else math.inf
    return EffectiveOscillator(
        omega_eff_ratio=omega_ratio,
        gamma_eff_ratio=gamma_ratio,
        q_eff=q_eff,
    )


def approx_variance(params: NormalizedParams) -> VarianceResult:
    """Closed-form steady-state variance in the adiabatic limit.

    dq^2 = (Gamma/Gamma_eff) [2 n_t_i + 1
           + 2 phi_nl Q (1 + b^2 + phi^2) / ((1 - b^2 + phi^2)^2 + 4 b^2)]

    The momentum variance is set equal to dq^2: the more general
    two-variance forms reduce to this one when the mechanical frequency
    dominates the effective damping, and the exact spectrum remains the
    authority whenever they differ.
    """
    rates = effective_rates(params)
    if rates.gamma_eff_ratio <= 0:
        raise Unstable(
            f"effective damping ratio {rates.gamma_eff_ratio:.3g} <= 0"
        )
    b, phi = params.b, params.phi
    dm_abs2 = (1.0 - b * b + phi * phi) ** 2 + 4.0 * b * b
    dq2 = (
        2.0 * params.n_t_i + 1.0
        + 2.0 * params.phi_nl * params.q_factor * (1.0 + b * b + phi * phi) / dm_abs2
    ) / rates.gamma_eff_ratio
    return VarianceResult.from_variances(
        dq2, dq2,
        method=Method.ADIABATIC,
        noise_model=ThermalNoiseModel.MARKOV_FLAT,  # resonance weight, same for both
    )


def decompose(params: NormalizedParams) -> CoolingDecomposition:
    """Split the closed-form variance into thermal and radiation parts.

    Defined on the cooling side (phi > 0) only, where the radiation
    term (1 + b^2 + phi^2)/(2 phi b) is a positive variance bounded
    below by 1.
    """
    if params.phi <= 0:
        raise InvalidRegime(f"decomposition requires phi > 0, got {params.phi}")
    b, phi = params.b, params.phi
    dm_abs2 = (1.0 - b * b + phi * phi) ** 2 + 4.0 * b * b
    f = 4.0 * phi * b / dm_abs2
    strength = f * params.phi_nl * params.q_factor
    eta = strength / (1.0 + strength)
    dq2_thermal = 1.0 + 2.0 * params.n_t_i
    dq2_radiation = (1.0 + b * b + phi * phi) / (2.0 * phi * b)
    return CoolingDecomposition(
        f=f,
        eta=eta,
        dq2_thermal=dq2_thermal,
        dq2_radiation=dq2_radiation,
        dq2=(1.0 - eta) * dq2_thermal + eta * dq2_radiation,
    )


def optimal_detuning(b: float) -> float:
    """Detuning phi* maximizing the coupling shape factor f at fixed b.

    phi* = sqrt((b^2 - 1 + 2 sqrt(1 + b^2 + b^4)) / 3); phi* -> b from
    above as b -> infinity.
    """
    if not b > 0:
        raise InvalidParams(f"b must be > 0, got {b}")
    return math.sqrt((b * b - 1.0 + 2.0 * math.sqrt(1.0 + b * b + b**4)) / 3.0)


def regime_validity(params: NormalizedParams) -> RegimeReport:
    """Flags for the validity of the effective-oscillator treatment.

    Requires a strongly enhanced damping that still fits inside the
    cavity bandwidth (Gamma << Gamma_eff << kappa) and a coupling weak
    enough that the cavity follows the mirror (phi_nl Omega_m < 2
    kappa). Thresholds: Gamma_eff/Gamma > 10, Gamma_eff/kappa < 0.5,
    phi_nl b / 2 < 1.
    """
    _, gamma_ratio = _effective_peak(
        params.b, params.phi, params.phi_nl, params.q_factor
    )
    gamma_over_kappa = gamma_ratio * params.b / params.q_factor
    breakdown = params.phi_nl * params.b / 2.0
    ok = gamma_ratio > 10.0 and gamma_over_kappa < 0.5 and breakdown < 1.0
    return RegimeReport(
        adiabatic_ok=ok,
        gamma_eff_over_gamma=gamma_ratio,
        gamma_eff_over_kappa=gamma_over_kappa,
        phi_nl_omega_over_2kappa=breakdown,
    )


def _golden_refine(objective, lo, mid, hi, xtol, max_iter=200):
    """Golden-section minimization on a bracketing triple."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    it = 0
    while abs(b - a) > xtol and it < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
        it += 1
    return (c, fc) if fc <= fd else (d, fd)


def optimize_operating_point(
    b_range,
    phi_nl: float,
    q_factor: float,
    n_t_i: float,
    noise_model: ThermalNoiseModel = ThermalNoiseModel.QUANTUM_COTH,
    omega_max: float = 100.0,
    b_points: int = 9,
    lock_phi_to_b: bool = False,
    phi_tol: float = 1e-3,
) -> OperatingPoint:
    """Minimize the exact final occupancy over bandwidth and detuning.

    For each b on the grid the detuning search is seeded at the
    closed-form optimum phi*(b) and refined by golden section; the
    objective is always ``integrate_variances`` (the exact spectrum),
    never the closed form. With ``lock_phi_to_b`` the detuning is pinned
    to phi = b and only b is scanned. Deterministic for fixed grids and
    tolerances; ties break toward smaller b, then smaller phi.

    ``b_range`` may be a (lo, hi) tuple, expanded to ``b_points``
    equally spaced values, or any other sequence used verbatim.

    Raises
    ------
    OptimizationFailure
        If every probed point is unstable or fails to integrate.
    """
    if isinstance(b_range, tuple) and len(b_range) == 2:
        lo, hi = b_range
        if not (0 < lo <= hi):
            raise InvalidParams(f"bad b_range {b_range}")
        b_grid = [lo] if lo == hi else list(np.linspace(lo, hi, b_points))
    else:
        b_grid = [float(b) for b in b_range]
    if not b_grid:
        raise InvalidParams("empty b_range")

    cache: dict[tuple[float, float], float] = {}

    def objective(b, phi):
        key = (b, phi)
        if key not in cache:
            try:
                res = integrate_variances(
                    NormalizedParams(
                        b=b, phi=phi, phi_nl=phi_nl,
                        q_factor=q_factor, n_t_i=n_t_i,
                    ),
                    noise_model=noise_model,
                    omega_max=omega_max,
                )
                cache[key] = res.n_t_f
            except (Unstable, QuadratureFailure, InvalidParams):
                cache[key] = math.inf
        return cache[key]

    best = (math.inf, math.inf, math.inf)  # (n_t_f, b, phi)
    for b in b_grid:
        if lock_phi_to_b:
            phi_best, val = b, objective(b, b)
        else:
            phi_star = optimal_detuning(b)
            coarse = phi_star * np.geomspace(0.5, 2.0, 9)
            vals = [objective(b, phi) for phi in coarse]
            i = int(np.argmin(vals))
            if math.isinf(vals[i]):
                continue
            lo_i, hi_i = max(i - 1, 0), min(i + 1, len(coarse) - 1)
            phi_best, val = _golden_refine(
                lambda phi: objective(b, phi),
                coarse[lo_i], coarse[i], coarse[hi_i],
                xtol=phi_tol * phi_star,
            )
            if vals[i] < val:
                phi_best, val = coarse[i], vals[i]
        if val < best[0]:
            best = (val, b, phi_best)

    if math.isinf(best[0]):
        raise OptimizationFailure("no stable operating point in the search range")
    return OperatingPoint(b_opt=best[1], phi_opt=best[2], n_t_f_min=best[0])
