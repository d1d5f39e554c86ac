"""Closed-form and integral expressions for the two-tier decoupled network.

Every serving-distance law here is a signed mixture of Rayleigh-type terms
``w * 2*pi*x * exp(-pi*A*x**2)``; the mixtures are kept as (w, A) pairs so
that probabilities, cdfs and pdfs all come from the same coefficients.

``coupled=True`` switches the uplink association to the downlink rule (the
baseline without decoupling); transmit powers still follow the UL tier.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergentIntegral, InfeasibleCase
from .model import FEASIBLE_CASES, AssociationCase, SystemParams, TierId, ValidatedParams, validate
from .quadrature import integrate_semi_infinite

LN2 = math.log(2.0)


class DistancePdfVariant(enum.Enum):
    """CONSISTENT: law of the serving-tier distance. PAPER_PRINTED: the
    alternative Case-1/Case-2 laws built on the other tier's contact distance."""

    CONSISTENT = "consistent"
    PAPER_PRINTED = "paper"


@dataclass(frozen=True)
class CaseProbabilities:
    pr_case1: float
    pr_case2: float
    pr_case3: float
    pr_case4: float

    def __getitem__(self, case: AssociationCase) -> float:
        return (self.pr_case1, self.pr_case2, self.pr_case3, self.pr_case4)[int(case) - 1]

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.pr_case1, self.pr_case2, self.pr_case3, self.pr_case4)

    @property
    def total(self) -> float:
        return math.fsum(self.as_tuple())


@dataclass(frozen=True)
class CaseMetrics:
    """Per-case and case-weighted SE (bit/s/Hz) and EE (bit/J).

    Cases with zero probability carry NaN and are skipped in the averages.
    """

    probabilities: CaseProbabilities
    se: dict = field(default_factory=dict)
    ee: dict = field(default_factory=dict)
    se_avg: float = math.nan
    ee_avg: float = math.nan


def _ul_association_ratio(params: ValidatedParams, coupled: bool) -> float:
    # S-to-M power ratio that decides the uplink tier
    return params.dl_ratio if coupled else params.ul_ratio


def association_probabilities(params: SystemParams, coupled: bool = False) -> CaseProbabilities:
    params = validate(params)
    e = 2.0 / params.alpha
    lm, ls = params.lambda_m, params.lambda_s
    dl_macro = lm / (lm + params.dl_ratio**e * ls)
    pr1 = lm / (lm + _ul_association_ratio(params, coupled) ** e * ls)
    pr2 = dl_macro - pr1
    dl_scaled = params.dl_ratio**e * ls
    pr4 = dl_scaled / (lm + dl_scaled)
    return CaseProbabilities(pr1, pr2, 0.0, pr4)


def printed_case4_probability(params: SystemParams) -> float:
    """Case-4 value with lambda_M in the numerator instead of the scaled small-cell
    density. It does not normalise; kept only to quantify the gap."""
    params = validate(params)
    scaled = params.dl_ratio ** (2.0 / params.alpha) * params.lambda_s
    return params.lambda_m / (params.lambda_m + scaled)


def printed_normalisation_gap(params: SystemParams) -> float:
    """Predicted |sum - 1| when printed_case4_probability replaces the corrected value."""
    params = validate(params)
    scaled = params.dl_ratio ** (2.0 / params.alpha) * params.lambda_s
    return abs(params.lambda_m - scaled) / (params.lambda_m + scaled)


def path_loss_constant(alpha: float) -> float:
    """Closed form of the integral of 1/(1 + u**(alpha/2)) over [0, inf)."""
    if not alpha > 2:
        raise DivergentIntegral(f"integral diverges for alpha <= 2 (got {alpha})")
    d = 2.0 * math.pi / alpha
    return d / math.sin(d)


def path_loss_constant_quadrature(alpha: float, rel_tol: float = 1e-13) -> float:
    if not alpha > 2:
        raise DivergentIntegral(f"integral diverges for alpha <= 2 (got {alpha})")
    half = alpha / 2.0
    return integrate_semi_infinite(lambda u: 1.0 / (1.0 + u**half), rel_tol, 0.0).value


def equivalent_interferer_density(params: SystemParams, interferer_density: float | None = None) -> float:
    """Interferer density times E[Z**(2/alpha)], Z = Q_M w.p. lambda_M/(lambda_M+lambda_S), else Q_S."""
    params = validate(params)
    lam_i = params.total_density if interferer_density is None else interferer_density
    e = 2.0 / params.alpha
    tot = params.total_density
    moment = params.q_s**e * params.lambda_s / tot + params.q_m**e * params.lambda_m / tot
    return lam_i * moment


# serving-distance laws -----------------------------------------------------------


def _check_case(case: AssociationCase) -> AssociationCase:
    case = AssociationCase(case)
    if case not in FEASIBLE_CASES:
        raise InfeasibleCase(f"{case.name} never occurs when Q_S/Q_M >= P_S/P_M")
    return case


def distance_terms(
    case: AssociationCase,
    params: SystemParams,
    variant: DistancePdfVariant = DistancePdfVariant.CONSISTENT,
    coupled: bool = False,
) -> list[tuple[float, float]]:
    """(w, A) pairs of the *unnormalised* density sum_k w_k 2 pi x exp(-pi A_k x^2)."""
    params = validate(params)
    case = _check_case(case)
    e = 2.0 / params.alpha
    lm, ls = params.lambda_m, params.lambda_s
    ul = _ul_association_ratio(params, coupled)
    dl = params.dl_ratio
    variant = DistancePdfVariant(variant)

    if case is AssociationCase.CASE4:
        return [(ls, ls + lm * dl**-e)]
    if variant is DistancePdfVariant.CONSISTENT:
        if case is AssociationCase.CASE1:
            return [(lm, lm + ls * ul**e)]
        return [(ls, ls + lm * ul**-e), (-ls, ls + lm * dl**-e)]
    # alternative laws: Case 1 weights the small-tier contact law, Case 2 the macro one
    if case is AssociationCase.CASE1:
        return [(ls, ls), (-ls, ls + lm * ul**-e)]
    return [(lm, lm + ls * dl**e), (-lm, lm + ls * ul**e)]


def _normaliser(case, params, coupled):
    return association_probabilities(params, coupled)[case]


def serving_distance_pdf(
    case: AssociationCase,
    x,
    params: SystemParams,
    variant: DistancePdfVariant = DistancePdfVariant.CONSISTENT,
    coupled: bool = False,
):
    """Density (per km) of the serving distance given the association case."""
    case = _check_case(case)
    x = np.asarray(x, dtype=float)
    pr = _normaliser(case, params, coupled)
    out = np.zeros_like(x)
    for w, a in distance_terms(case, params, variant, coupled):
        out = out + w * 2.0 * np.pi * x * np.exp(-np.pi * a * x * x)
    out = out / pr
    return out if out.ndim else float(out)


def serving_distance_cdf(
    case: AssociationCase,
    x,
    params: SystemParams,
    variant: DistancePdfVariant = DistancePdfVariant.CONSISTENT,
    coupled: bool = False,
):
    case = _check_case(case)
    x = np.asarray(x, dtype=float)
    pr = _normaliser(case, params, coupled)
    tail = np.zeros_like(x)
    for w, a in distance_terms(case, params, variant, coupled):
        tail = tail + (w / a) * np.exp(-np.pi * a * x * x)
    out = np.clip(1.0 - tail / pr, 0.0, 1.0)
    return out if out.ndim else float(out)


def serving_distance_ccdf_all(x, params: SystemParams, coupled: bool = False):
    """Pr(serving distance > x) for the typical device, all cases pooled."""
    x = np.asarray(x, dtype=float)
    tail = np.zeros_like(x)
    for case in FEASIBLE_CASES:
        if association_probabilities(params, coupled)[case] <= 0:
            continue
        for w, a in distance_terms(case, params, coupled=coupled):
            tail = tail + (w / a) * np.exp(-np.pi * a * x * x)
    return tail if tail.ndim else float(tail)


def serving_distance_quantile(q: float, params: SystemParams, coupled: bool = False) -> float:
    """Smallest x with Pr(serving distance <= x) >= q, by bisection."""
    lo, hi = 0.0, 1.0
    while 1.0 - serving_distance_ccdf_all(hi, params, coupled) < q:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - serving_distance_ccdf_all(mid, params, coupled) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


# uplink SINR and efficiency --------------------------------------------------------


def serving_power(case: AssociationCase, params: SystemParams) -> float:
    return params.q_m if AssociationCase(case).ul_tier is TierId.MACRO else params.q_s


def ul_sinr_ccdf(
    case: AssociationCase,
    theta,
    params: SystemParams,
    coupled: bool = False,
    interferer_density: float | None = None,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-14,
):
    """Pr(SINR > theta | case) at the serving BS, for scalar or array theta.

    Integrates the Rayleigh-fading Laplace functional of the equivalent
    unit-power interferer field against the serving-distance density.
    """
    params = validate(params)
    case = _check_case(case)
    theta_arr = np.atleast_1d(np.asarray(theta, dtype=float))
    if np.any(theta_arr < 0):
        raise ValueError("SINR threshold must be >= 0")
    pr = _normaliser(case, params, coupled)
    if pr <= 0:
        raise InfeasibleCase(f"{case.name} has zero probability for these parameters")

    alpha = params.alpha
    q_v = serving_power(case, params)
    lam_eq = equivalent_interferer_density(params, interferer_density)
    interf = np.pi * lam_eq * path_loss_constant(alpha) * (theta_arr / q_v) ** (2.0 / alpha)
    noise = theta_arr * params.noise / q_v
    terms = distance_terms(case, params, coupled=coupled)
    w = np.array([t[0] for t in terms])
    a = np.array([t[1] for t in terms])

    def integrand(y):
        yy = y * y
        dens = (w[:, None] * np.exp(-np.pi * a[:, None] * yy[None, :])).sum(axis=0) * 2.0 * np.pi * y
        expo = interf[:, None] * yy[None, :]
        if params.noise > 0:
            with np.errstate(over="ignore"):
                expo = expo + noise[:, None] * y[None, :] ** alpha
        return np.exp(-expo) * dens[None, :]

    scale = 1.0 / math.sqrt(math.pi * a.max())
    res = integrate_semi_infinite(integrand, rel_tol, abs_tol, scale=scale)
    out = np.clip(np.asarray(res.value) / pr, 0.0, 1.0)
    return out if np.ndim(theta) else float(out[0])


def spectral_efficiency_case(
    case: AssociationCase,
    params: SystemParams,
    coupled: bool = False,
    interferer_density: float | None = None,
    rel_tol: float = 1e-8,
) -> float:
    """Mean log2(1 + SINR) for devices in ``case``, bit/s/Hz."""

    def outer(t):
        return ul_sinr_ccdf(case, np.expm1(t), params, coupled, interferer_density)

    return integrate_semi_infinite(outer, rel_tol, 1e-12).value / LN2


def total_power(case: AssociationCase, params: SystemParams) -> float:
    case = _check_case(case)
    return serving_power(case, params) / params.amp_efficiency_rho + params.circuit_power_pc


def energy_efficiency_from_se(case: AssociationCase, se: float, params: SystemParams) -> float:
    return params.bandwidth_w * se / total_power(case, params)


def energy_efficiency_case(case: AssociationCase, params: SystemParams, coupled: bool = False) -> float:
    """W * SE / P_tot, bit/J."""
    return energy_efficiency_from_se(case, spectral_efficiency_case(case, params, coupled), params)


def case_metrics(
    params: SystemParams, coupled: bool = False, interferer_density: float | None = None
) -> CaseMetrics:
    params = validate(params)
    probs = association_probabilities(params, coupled)
    se, ee = {}, {}
    se_terms, ee_terms = [], []
    for case in FEASIBLE_CASES:
        if probs[case] <= 0:
            se[case] = ee[case] = math.nan
            continue
        se[case] = spectral_efficiency_case(case, params, coupled, interferer_density)
        ee[case] = energy_efficiency_from_se(case, se[case], params)
        se_terms.append(se[case] * probs[case])
        ee_terms.append(ee[case] * probs[case])
    return CaseMetrics(probs, se, ee, math.fsum(se_terms), math.fsum(ee_terms))


def average_spectral_efficiency(params: SystemParams, coupled: bool = False) -> float:
    return case_metrics(params, coupled).se_avg


def average_energy_efficiency(params: SystemParams, coupled: bool = False) -> float:
    return case_metrics(params, coupled).ee_avg
