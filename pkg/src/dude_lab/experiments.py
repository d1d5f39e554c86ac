"""Parameter sweeps, analytic-vs-simulation validation and figure datasets."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import analytic as an
from . import montecarlo as mc
from .errors import DudeLabError, TooFewSamples, UnknownFigure
from .model import (
    FEASIBLE_CASES,
    AssociationCase,
    SimulationParams,
    SystemParams,
    dbm_to_watt,
    default_params,
    with_changes,
)
from .model import validate as validate_params
from .quadrature import integrate_semi_infinite

SWEEP_KEYS = ("q_ratio_db", "lambda_ratio", "q_m_dbm", "q_s_dbm")
SCENARIOS = ("coupled", "decoupled", "decoupled_pa")
SCENARIO_LABELS = {
    "coupled": "without DA, without PA",
    "decoupled": "with DA, without PA",
    "decoupled_pa": "with DA, with PA",
}
SWEEP_UNITS = {
    "q_ratio_db": "Q_M/Q_S [dB]",
    "lambda_ratio": "lambda_S/lambda_M",
    "q_m_dbm": "Q_M [dBm]",
    "q_s_dbm": "Q_S [dBm]",
}


def apply_sweep(params: SystemParams, key: str, value: float):
    """Parameters for one grid point; raises a ParameterError if they are invalid."""
    if key == "q_ratio_db":
        return with_changes(params, q_m=params.q_s * 10.0 ** (value / 10.0))
    if key == "lambda_ratio":
        return with_changes(params, lambda_s=value * params.lambda_m)
    if key == "q_m_dbm":
        return with_changes(params, q_m=dbm_to_watt(value))
    if key == "q_s_dbm":
        return with_changes(params, q_s=dbm_to_watt(value))
    raise ValueError(f"unknown sweep key {key!r}; expected one of {SWEEP_KEYS}")


def scenario_params(params: SystemParams, scenario: str):
    """(params, coupled) for a scenario.

    Without power adaptation every device transmits at the small-cell level Q_S.
    """
    if scenario == "decoupled_pa":
        return validate_params(params), False
    if scenario == "decoupled":
        return with_changes(params, q_m=params.q_s), False
    if scenario == "coupled":
        return with_changes(params, q_m=params.q_s), True
    raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")


@dataclass(frozen=True)
class SweepSpec:
    base: SystemParams
    key: str
    grid: tuple
    scenarios: tuple = SCENARIOS
    sim: SimulationParams | None = None

    def __post_init__(self):
        if self.key not in SWEEP_KEYS:
            raise ValueError(f"unknown sweep key {self.key!r}; expected one of {SWEEP_KEYS}")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        scen = tuple(self.scenarios)
        bad = [s for s in scen if s not in SCENARIOS]
        if bad or not scen:
            raise ValueError(f"scenarios must be a non-empty subset of {SCENARIOS}, got {scen}")
        object.__setattr__(self, "scenarios", scen)


@dataclass
class SweepRow:
    key: str
    value: float
    scenario: str
    metrics: an.CaseMetrics | None = None
    mc: mc.McEstimates | None = None
    flags: list = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.metrics is None


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list

    def select(self, scenario: str) -> list:
        return [r for r in self.rows if r.scenario == scenario]

    def series(self, scenario: str, getter) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.select(scenario) if not r.failed]
        return np.array([r.value for r in rows]), np.array([getter(r) for r in rows], dtype=float)


def _mc_flags(metrics: an.CaseMetrics, est: mc.McEstimates) -> list:
    flags = []
    for case in FEASIBLE_CASES:
        a = metrics.probabilities[case]
        m = est.probabilities[case]
        if abs(a - m) > 4.0 * est.prob_stderr(case):
            flags.append(f"mc_pr_case{int(case)}")
    for name, a, (m, se) in (("se_avg", metrics.se_avg, est.se_avg), ("ee_avg", metrics.ee_avg, est.ee_avg)):
        se = 0.0 if math.isnan(se) else se
        if abs(a - m) > max(0.05 * abs(a), 4.0 * se):
            flags.append(f"mc_{name}")
    return flags


def _evaluate(row: SweepRow, point, sim: SimulationParams | None) -> SweepRow:
    try:
        params, coupled = scenario_params(point(), row.scenario)
        lam_i = None if sim is None else sim.interferer_density
        row.metrics = an.case_metrics(params, coupled, lam_i)
        if sim is not None:
            result = mc.run_monte_carlo(params, sim)
            row.mc = result.coupled if coupled else result.decoupled
            row.flags.extend(_mc_flags(row.metrics, row.mc))
    except DudeLabError as exc:
        row.metrics = None
        row.flags.append(f"failed:{type(exc).__name__}")
    return row


def run_row(spec: SweepSpec, value: float, scenario: str) -> SweepRow:
    """One (grid value, scenario) row; validation or integration errors mark it failed."""
    row = SweepRow(spec.key, value, scenario)
    return _evaluate(row, lambda: apply_sweep(spec.base, spec.key, value), spec.sim)


def evaluate_point(params: SystemParams, scenarios=SCENARIOS, sim: SimulationParams | None = None) -> SweepResult:
    """Single-point result for ``params`` as given, labelled by its Q_M/Q_S ratio in dB."""
    ratio_db = 10.0 * math.log10(params.q_m / params.q_s)
    spec = SweepSpec(params, "q_ratio_db", (ratio_db,), tuple(scenarios), sim)
    rows = [_evaluate(SweepRow(spec.key, ratio_db, s), lambda: params, sim) for s in spec.scenarios]
    return SweepResult(spec, rows)


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Rows ordered by grid value, then by scenario; failed rows are kept."""
    rows = [run_row(spec, v, s) for v in spec.grid for s in spec.scenarios]
    return SweepResult(spec, rows)


# figures --------------------------------------------------------------------------


def _frange(start, stop, step):
    n = int(round((stop - start) / step))
    return tuple(start + i * step for i in range(n + 1))


def figure_spec(figure_id: int, sim: SimulationParams | None = None, base: SystemParams | None = None) -> SweepSpec:
    base = default_params() if base is None else base
    if figure_id == 2:
        return SweepSpec(base, "lambda_ratio", (1, 2, 4, 8, 16, 32, 64), ("decoupled_pa", "decoupled"), sim)
    if figure_id == 3:
        return SweepSpec(base, "q_ratio_db", _frange(-10, 20, 1), ("decoupled_pa", "decoupled"), sim)
    if figure_id == 4:
        return SweepSpec(base, "q_ratio_db", _frange(-10, 20, 2), SCENARIOS, sim)
    if figure_id == 5:
        base = with_changes(base, q_s=dbm_to_watt(10.0))
        return SweepSpec(base, "q_m_dbm", _frange(0, 30, 2), SCENARIOS, sim)
    if figure_id == 6:
        base = with_changes(base, q_m=dbm_to_watt(10.0))
        return SweepSpec(base, "q_s_dbm", _frange(-10, 15, 1), SCENARIOS, sim)
    raise UnknownFigure(f"figure id must be one of 2..6, got {figure_id!r}")


def reproduce_figures(figure_id: int, sim: SimulationParams | None = None, base: SystemParams | None = None) -> SweepResult:
    return run_sweep(figure_spec(figure_id, sim, base))


def crossings(x, y1, y2) -> list:
    """Abscissae where y1 - y2 changes sign or vanishes (linear interpolation)."""
    d = np.asarray(y1, float) - np.asarray(y2, float)
    x = np.asarray(x, float)
    out = []
    for i in range(d.size):
        if d[i] == 0.0 and (i == 0 or d[i - 1] != 0.0):
            out.append(float(x[i]))
        elif i > 0 and d[i - 1] * d[i] < 0:
            out.append(float(x[i - 1] - d[i - 1] * (x[i] - x[i - 1]) / (d[i] - d[i - 1])))
    return out


@dataclass(frozen=True)
class ImprovementPoint:
    q_m_dbm: float
    q_s_dbm: float
    se: float
    ee: float
    baseline_se: float
    baseline_ee: float
    se_gain: float
    ee_gain: float


def improvement_points(
    base: SystemParams,
    q_m_grid_dbm,
    q_s_grid_dbm,
    baseline: str = "decoupled",
    rel_margin: float = 1e-8,
) -> list:
    """Grid points with Q_M > Q_S whose power-adapted average SE *and* EE beat a
    Q_M = Q_S baseline at the same Q_M.

    ``rel_margin`` keeps quadrature noise from counting as an improvement.
    """
    found = []
    for qm in q_m_grid_dbm:
        ref_params, coupled = scenario_params(with_changes(base, q_m=dbm_to_watt(qm), q_s=dbm_to_watt(qm)), baseline)
        ref = an.case_metrics(ref_params, coupled)
        for qs in q_s_grid_dbm:
            if not qm > qs:
                continue
            try:
                p = with_changes(base, q_m=dbm_to_watt(qm), q_s=dbm_to_watt(qs))
            except DudeLabError:
                continue
            m = an.case_metrics(p)
            se_gain = m.se_avg / ref.se_avg - 1.0
            ee_gain = m.ee_avg / ref.ee_avg - 1.0
            if se_gain > rel_margin and ee_gain > rel_margin:
                found.append(ImprovementPoint(qm, qs, m.se_avg, m.ee_avg, ref.se_avg, ref.ee_avg, se_gain, ee_gain))
    return found


# validation -----------------------------------------------------------------------


def ks_statistic(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between samples and a model cdf."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n), 0.0))


@dataclass
class ValidationEntry:
    name: str
    status: str  # PASS, FAIL or INFO
    analytic: float | None = None
    mc: float | None = None
    stderr: float | None = None
    statistic: float | None = None
    threshold: float | None = None
    note: str = ""


@dataclass
class ValidationReport:
    entries: list = field(default_factory=list)
    resampled: int = 0
    drops: int = 0
    runtimes: dict = field(default_factory=dict)

    def add(self, name, ok, **kw) -> ValidationEntry:
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        entry = ValidationEntry(name, status, **kw)
        self.entries.append(entry)
        return entry

    @property
    def passed(self) -> bool:
        return all(e.status != "FAIL" for e in self.entries)

    def __getitem__(self, name) -> ValidationEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_text(self) -> str:
        def f(v):
            return "" if v is None else f"{v:.6g}"

        lines = [f"drops={self.drops} resampled={self.resampled}"]
        for e in self.entries:
            parts = [f"[{e.status}] {e.name}"]
            for label, v in (("analytic", e.analytic), ("mc", e.mc), ("se", e.stderr), ("stat", e.statistic), ("thr", e.threshold)):
                if v is not None:
                    parts.append(f"{label}={f(v)}")
            if e.note:
                parts.append(f"({e.note})")
            lines.append(" ".join(parts))
        lines.append("runtimes: " + ", ".join(f"{k}={v:.2f}s" for k, v in self.runtimes.items()))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "drops": self.drops,
            "resampled": self.resampled,
            "passed": self.passed,
            "runtimes_s": self.runtimes,
            "entries": [e.__dict__ for e in self.entries],
        }


KS_SAMPLES = 50_000
LAPLACE_SAMPLES = 100_000
LAPLACE_POINTS = (0.1, 1.0, 10.0)
CCDF_THRESHOLDS = (0.1, 1.0, 10.0)
ALPHAS = (2.5, 3.0, 3.5, 4.0, 5.0)


def validate(params: SystemParams, sim: SimulationParams) -> ValidationReport:
    """Compare every analytic quantity with its simulated counterpart."""
    params = validate_params(params)
    if sim.drops < 10_000:
        raise TooFewSamples(f"validation needs at least 10^4 drops, got {sim.drops}")
    report = ValidationReport(drops=sim.drops)
    lam_i = sim.interferers(params)
    clock = time.perf_counter

    t0 = clock()
    probs = an.association_probabilities(params)
    report.add("pr_sum", abs(probs.total - 1.0) <= 1e-12 and probs.pr_case3 == 0.0,
               analytic=probs.total, threshold=1e-12)

    # Case-4 normalisation evidence
    for case in FEASIBLE_CASES:
        terms = an.distance_terms(case, params)

        def numerator(x, terms=terms):
            return sum(w * 2.0 * np.pi * x * np.exp(-np.pi * a * x * x) for w, a in terms)

        integral = integrate_semi_infinite(numerator, 1e-12, 1e-15).value
        report.add(f"pdf_integral_case{int(case)}", abs(integral - probs[case]) <= 1e-8,
                   analytic=probs[case], statistic=integral, threshold=1e-8)
    printed = an.printed_case4_probability(params)
    gap = abs(probs.pr_case1 + probs.pr_case2 + printed - 1.0)
    predicted = an.printed_normalisation_gap(params)
    report.add("printed_case4_gap", abs(gap - predicted) <= 1e-12, analytic=predicted, statistic=gap,
               threshold=1e-12, note=f"printed Pr(Case4)={printed:.6g} vs corrected {probs.pr_case4:.6g}")
    for alpha in ALPHAS:
        closed = an.path_loss_constant(alpha)
        quad = an.path_loss_constant_quadrature(alpha)
        report.add(f"path_loss_constant_alpha{alpha:g}", abs(quad / closed - 1.0) <= 1e-10,
                   analytic=closed, statistic=quad, threshold=1e-10)
    report.runtimes["analytic"] = clock() - t0

    # simulation: association, SINR and efficiency
    t0 = clock()
    result = mc.run_monte_carlo(params, sim)
    report.resampled = result.resampled
    dec, cou = result.decoupled, result.coupled
    report.runtimes["monte_carlo"] = clock() - t0
    emp = dec.probabilities
    for case in AssociationCase:
        report.add(f"pr_case{int(case)}", abs(probs[case] - emp[case]) < 0.005, analytic=probs[case],
                   mc=emp[case], stderr=dec.prob_stderr(case), threshold=0.005)
    for case in FEASIBLE_CASES:
        if probs[case] <= 0:
            continue
        se_a = an.spectral_efficiency_case(case, params, False, lam_i)
        se_m, se_se = dec.se[case]
        report.add(f"se_case{int(case)}", abs(se_m / se_a - 1.0) < 0.05, analytic=se_a, mc=se_m,
                   stderr=se_se, statistic=abs(se_m / se_a - 1.0), threshold=0.05)
    if probs.pr_case1 > 0:
        for theta in CCDF_THRESHOLDS:
            a = an.ul_sinr_ccdf(AssociationCase.CASE1, theta, params, False, lam_i)
            m, se = dec.sinr_ccdf(AssociationCase.CASE1, theta)
            report.add(f"ccdf_case1_theta{theta:g}", abs(a - m) <= 0.005, analytic=a, mc=m, stderr=se,
                       threshold=0.005)
    metrics = an.case_metrics(params, False, lam_i)
    report.add("se_avg", abs(dec.se_avg[0] / metrics.se_avg - 1.0) < 0.05, analytic=metrics.se_avg,
               mc=dec.se_avg[0], stderr=dec.se_avg[1], threshold=0.05)
    common, _ = scenario_params(params, "decoupled")
    ee_dec = an.case_metrics(common, False, lam_i).ee_avg
    ee_cou = an.case_metrics(common, True, lam_i).ee_avg
    report.add("ee_decoupled_gt_coupled", ee_dec > ee_cou, analytic=ee_dec, statistic=ee_cou,
               note="analytic average EE at Q_M=Q_S, decoupled vs coupled (statistic)")
    report.add("mc_ee_decoupled_vs_coupled", None, mc=dec.ee_avg[0], statistic=cou.ee_avg[0],
               stderr=dec.ee_avg[1], note="simulated average EE, decoupled vs coupled (statistic)")

    # serving-distance laws
    t0 = clock()
    dist_sim = SimulationParams(drops=sim.drops, window_radius=sim.window_radius, seed=sim.seed,
                                interferer_density=sim.interferer_density)
    samples = mc.sample_serving_distances(params, dist_sim, KS_SAMPLES)
    for case in FEASIBLE_CASES:
        if probs[case] <= 0:
            continue
        d = ks_statistic(samples[case], lambda x, c=case: an.serving_distance_cdf(c, x, params))
        report.add(f"ks_consistent_case{int(case)}", d < 0.01, statistic=d, threshold=0.01)
        if case is not AssociationCase.CASE4:
            dp = ks_statistic(samples[case], lambda x, c=case: an.serving_distance_cdf(
                c, x, params, an.DistancePdfVariant.PAPER_PRINTED))
            report.add(f"ks_printed_case{int(case)}", None, statistic=dp, threshold=0.05,
                       note="printed variant; exceeds 0.05" if dp > 0.05 else "printed variant; below 0.05")
    report.runtimes["distances"] = clock() - t0

    # displacement equivalence of the interference field
    t0 = clock()
    two = mc.sample_interference(params, sim, LAPLACE_SAMPLES)
    one = mc.sample_interference(params, sim, LAPLACE_SAMPLES, equivalent=True)
    lam_eq = an.equivalent_interferer_density(params, lam_i)
    for s in LAPLACE_POINTS:
        e2, e1 = np.exp(-s * two), np.exp(-s * one)
        m2, m1 = float(e2.mean()), float(e1.mean())
        se = math.hypot(e2.std(ddof=1), e1.std(ddof=1)) / math.sqrt(LAPLACE_SAMPLES)
        closed = math.exp(-math.pi * lam_eq * an.path_loss_constant(params.alpha) * s ** (2.0 / params.alpha))
        report.add(f"laplace_s{s:g}", abs(m2 - m1) <= 2.0 * se, analytic=closed, mc=m2, stderr=se,
                   statistic=abs(m2 - m1), threshold=2.0 * se, note=f"unit-mark field gives {m1:.6g}")
    report.runtimes["displacement"] = clock() - t0
    return report

