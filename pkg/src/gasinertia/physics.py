"""Term kernels of the discretized isothermal momentum equation.

For one pipe between nodes l (from) and r (to) and two consecutive
timestamps t0, t1 with spacing tau, the discretized momentum balance is

    p_l(t1) - p_r(t1) = alpha + beta + gamma

with

    alpha = L rho_n / (A tau) * (Q0(t1) - Q0(t0))               inertia
    beta  = lam R_s T L rho_n^2 / (2 A^2 D) * |Q0|Q0 * z(p_m)/p_m   friction
    gamma = kinetic + gravity                                    remainder

where Q0 is volumetric flow at normal conditions, q = rho_n Q0 the mass
flow, p_m = (p_l + p_r)/2, z the Papay compressibility factor and lam the
Chen explicit friction factor.  The kinetic and gravity parts of gamma use
the same average-flow substitution q_l = q_r = rho_n Q0(t1).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

from .model import (
    BAR,
    GRAVITY_MS2,
    NORMAL_PRESSURE_PA,
    NORMAL_TEMPERATURE_K,
    Diagnostics,
    GasParams,
    PipeGeometry,
    TimePair,
    derived_area,
)

# Below this Reynolds number the laminar fallback 64/Re applies.
RE_LAMINAR_LIMIT = 2320.0

# Chen correlation validity ceiling for relative roughness.
RELATIVE_ROUGHNESS_LIMIT = 0.05

# Compressibility is clamped here to keep beta finite at extreme states.
Z_FLOOR = 0.1


def specific_gas_constant(rho_n_kgm3: float) -> float:
    """R_s in J/(kg K) from the normal density of the mixture."""
    if not rho_n_kgm3 > 0.0:
        raise ValueError(f"normal density must be positive, got {rho_n_kgm3}")
    return NORMAL_PRESSURE_PA / (rho_n_kgm3 * NORMAL_TEMPERATURE_K)


def compressibility(pressure_pa: float, gas: GasParams,
                    diag: Diagnostics | None = None) -> float:
    """Papay compressibility factor z(p, T).

    z = 1 - 3.52 p_r exp(-2.26 T_r) + 0.274 p_r^2 exp(-1.878 T_r) with the
    reduced coordinates p_r = p / p_pc and T_r = T / T_pc.  Values below
    Z_FLOOR are clamped and counted in the diagnostics tally.
    """
    if pressure_pa < 0.0:
        raise ValueError(f"pressure must be >= 0, got {pressure_pa}")
    p_r = pressure_pa / gas.pseudo_critical_pressure_pa
    t_r = gas.temperature_k / gas.pseudo_critical_temperature_k
    z = (1.0
         - 3.52 * p_r * math.exp(-2.26 * t_r)
         + 0.274 * p_r * p_r * math.exp(-1.878 * t_r))
    if z < Z_FLOOR:
        if diag is not None:
            diag.z_clamped += 1
        return Z_FLOOR
    return z


def reynolds_number(mass_flow_kgs: float, geometry: PipeGeometry, gas: GasParams) -> float:
    area = derived_area(geometry)
    return abs(mass_flow_kgs) * geometry.diameter_m / (area * gas.dynamic_viscosity_pas)


def friction_factor(mass_flow_kgs: float, geometry: PipeGeometry, gas: GasParams,
                    diag: Diagnostics | None = None) -> float:
    """Darcy friction factor lambda for a circular pipe.

    Uses the explicit Chen correlation

        1/sqrt(lam) = -2 log10( rr/3.7065
                                - (5.0452/Re) log10( rr^1.1098/2.8257
                                                     + 5.8506/Re^0.8981 ) )

    with rr = k/D.  Re < 2320 falls back to laminar 64/Re, zero flow
    returns 0 (beta vanishes with the flow anyway), and rr beyond the
    validity ceiling is still evaluated but counted as a diagnostic.
    """
    if mass_flow_kgs == 0.0:
        return 0.0
    re = reynolds_number(mass_flow_kgs, geometry, gas)
    if re < RE_LAMINAR_LIMIT:
        return 64.0 / re
    rr = geometry.roughness_m / geometry.diameter_m
    if rr >= RELATIVE_ROUGHNESS_LIMIT and diag is not None:
        diag.friction_out_of_validity += 1
    inner = rr ** 1.1098 / 2.8257 + 5.8506 / re ** 0.8981
    arg = rr / 3.7065 - (5.0452 / re) * math.log10(inner)
    return (-2.0 * math.log10(arg)) ** -2.0


def inertia_term_alpha(geometry: PipeGeometry, rho_n_kgm3: float, tau_s: float,
                       flow_t0_m3s: float, flow_t1_m3s: float) -> float:
    """alpha = L rho_n / (A tau) * (Q0(t1) - Q0(t0)) in Pa."""
    if not tau_s > 0.0:
        raise ValueError(f"tau must be positive, got {tau_s}")
    area = derived_area(geometry)
    return (geometry.length_m * rho_n_kgm3 / (area * tau_s)
            * (flow_t1_m3s - flow_t0_m3s))


def friction_term_beta(geometry: PipeGeometry, gas: GasParams, rho_n_kgm3: float,
                       flow_t1_m3s: float, p_left_pa: float, p_right_pa: float,
                       diag: Diagnostics | None = None) -> float:
    """Friction pressure drop beta in Pa, evaluated at the t1 state."""
    _require_positive_pressures(p_left_pa, p_right_pa)
    p_m = 0.5 * (p_left_pa + p_right_pa)
    lam = friction_factor(rho_n_kgm3 * flow_t1_m3s, geometry, gas, diag)
    r_s = specific_gas_constant(rho_n_kgm3)
    area = derived_area(geometry)
    coeff = (lam * r_s * gas.temperature_k * geometry.length_m * rho_n_kgm3 * rho_n_kgm3
             / (2.0 * area * area * geometry.diameter_m))
    return coeff * abs(flow_t1_m3s) * flow_t1_m3s * compressibility(p_m, gas, diag) / p_m


def remaining_terms_gamma(geometry: PipeGeometry, gas: GasParams, rho_n_kgm3: float,
                          flow_t1_m3s: float, p_left_pa: float, p_right_pa: float,
                          diag: Diagnostics | None = None) -> float:
    """Kinetic plus gravity remainder gamma in Pa, at the t1 state."""
    _require_positive_pressures(p_left_pa, p_right_pa)
    r_s = specific_gas_constant(rho_n_kgm3)
    area = derived_area(geometry)
    q = rho_n_kgm3 * flow_t1_m3s
    kinetic = (r_s * gas.temperature_k / (area * area)
               * (q * q * compressibility(p_right_pa, gas, diag) / p_right_pa
                  - q * q * compressibility(p_left_pa, gas, diag) / p_left_pa))
    p_m = 0.5 * (p_left_pa + p_right_pa)
    gravity = (GRAVITY_MS2 * geometry.slope * geometry.length_m
               / (r_s * gas.temperature_k) * p_m / compressibility(p_m, gas, diag))
    return kinetic + gravity


def discretized_pressure_drop(geometry: PipeGeometry, gas: GasParams, rho_n_kgm3: float,
                              tau_s: float, flow_t0_m3s: float, flow_t1_m3s: float,
                              p_left_pa: float, p_right_pa: float,
                              diag: Diagnostics | None = None) -> float:
    """Full discretized drop p_l(t1) - p_r(t1) = alpha + beta + gamma."""
    alpha = inertia_term_alpha(geometry, rho_n_kgm3, tau_s, flow_t0_m3s, flow_t1_m3s)
    beta = friction_term_beta(geometry, gas, rho_n_kgm3, flow_t1_m3s,
                              p_left_pa, p_right_pa, diag)
    gamma = remaining_terms_gamma(geometry, gas, rho_n_kgm3, flow_t1_m3s,
                                  p_left_pa, p_right_pa, diag)
    return alpha + beta + gamma


def _require_positive_pressures(p_left_pa: float, p_right_pa: float) -> None:
    if not (p_left_pa > 0.0 and p_right_pa > 0.0):
        raise ValueError(
            f"endpoint pressures must be positive, got {p_left_pa}, {p_right_pa}")


@dataclass(frozen=True)
class TermRecord:
    """Evaluated terms for one pipe over one time pair."""

    pipe_id: str
    pair: TimePair
    flow_t0_m3s: float
    flow_t1_m3s: float
    alpha_pa: float
    beta_pa: float
    alpha_per_length_pam: float
    ratio: float

    @property
    def dflow_m3s(self) -> float:
        return self.flow_t1_m3s - self.flow_t0_m3s

    @classmethod
    def evaluate(cls, pipe_id: str, geometry: PipeGeometry, gas: GasParams,
                 rho_n_kgm3: float, pair: TimePair,
                 flow_t0_m3s: float, flow_t1_m3s: float,
                 p_left_pa: float, p_right_pa: float,
                 diag: Diagnostics | None = None) -> "TermRecord":
        alpha = inertia_term_alpha(geometry, rho_n_kgm3, pair.tau_s,
                                   flow_t0_m3s, flow_t1_m3s)
        beta = friction_term_beta(geometry, gas, rho_n_kgm3, flow_t1_m3s,
                                  p_left_pa, p_right_pa, diag)
        return cls(
            pipe_id=pipe_id,
            pair=pair,
            flow_t0_m3s=flow_t0_m3s,
            flow_t1_m3s=flow_t1_m3s,
            alpha_pa=alpha,
            beta_pa=beta,
            alpha_per_length_pam=alpha / geometry.length_m,
            ratio=term_ratio(alpha, beta),
        )


def term_ratio(alpha_pa: float, beta_pa: float) -> float:
    """|alpha| / |beta| with an infinite sentinel when beta vanishes."""
    if beta_pa == 0.0:
        return math.inf if alpha_pa != 0.0 else 0.0
    return abs(alpha_pa) / abs(beta_pa)
