"""Monte Carlo ground truth for association, serving distance and uplink SINR.

A drop is one network realisation seen from a typical device at the origin:
macro and small BS patterns around the origin, a serving-link fading mark,
and an interferer pattern. Only the nearest BS of each tier matters, so each
tier is sampled in a disk of radius min(R, 6/sqrt(pi*lambda)), where an empty
tier has probability e^-36 (empty drops are redrawn and counted).

Interferers form an independent PPP, so they are sampled directly in the disk
of radius R around the receiving BS and kept as distances to it; the same
pattern serves the decoupled and the coupled receiver of a drop, which makes
the two modes comparable drop by drop. Interference from beyond R is replaced
by its mean.

Drops are generated in fixed-size blocks; block ``b`` draws from the
substream ``SeedSequence(seed, spawn_key=(stream, b))``. Results depend only on
(seed, drops), never on the number of worker threads.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .analytic import CaseProbabilities, equivalent_interferer_density, serving_distance_quantile, total_power
from .model import FEASIBLE_CASES, AssociationCase, SimulationParams, SystemParams, TierId, ValidatedParams, validate

BLOCK_DROPS = 2048


def default_window_radius(params: SystemParams) -> float:
    """max(6/sqrt(pi*lambda) over tiers, 3x the 99.9th percentile serving distance)."""
    params = validate(params)
    r_tiers = 6.0 / math.sqrt(math.pi * min(params.lambda_m, params.lambda_s))
    q = max(serving_distance_quantile(0.999, params), serving_distance_quantile(0.999, params, coupled=True))
    return max(r_tiers, 3.0 * q)


def far_field_interference(mean_mark: float, density: float, radius: float, alpha: float) -> float:
    """Mean of sum Z h r^-alpha over a PPP outside radius ``radius`` (E[h] = 1)."""
    return density * mean_mark * 2.0 * math.pi * radius ** (2.0 - alpha) / (alpha - 2.0)


def worker_count() -> int:
    raw = os.environ.get("DUDE_LAB_THREADS", "").strip()
    n = int(raw) if raw else 0
    return n if n > 0 else (os.cpu_count() or 1)


# independent substream families derived from one seed
STREAM_DROPS, STREAM_DISTANCES, STREAM_INTERFERENCE, STREAM_EQUIVALENT = range(4)


def block_rng(seed: int, block: int, stream: int = STREAM_DROPS) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))


def sample_ppp(density: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Homogeneous PPP on the disk of given radius centred at the origin, shape (n, 2)."""
    if not density > 0 or not radius > 0:
        raise ValueError("density and radius must be positive")
    n = rng.poisson(density * math.pi * radius * radius)
    return _uniform_disk(n, radius, rng)


def _uniform_radii(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Distances to the centre of ``n`` uniform points in a disk."""
    return radius * np.sqrt(rng.random(n))


def tier_radius(density: float, radius: float) -> float:
    return min(radius, 6.0 / math.sqrt(math.pi * density))


def _uniform_disk(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = 2.0 * math.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


# single-drop view ------------------------------------------------------------------


@dataclass(frozen=True)
class DropRealization:
    macro: np.ndarray  # (n, 2) km
    small: np.ndarray
    interferer_distances: np.ndarray  # (k,) km, to the receiving BS
    interferer_marks: np.ndarray  # W
    interferer_fading: np.ndarray
    serving_fading: float
    far_field: float = 0.0  # mean interference from outside the window
    index: int = 0


@dataclass(frozen=True)
class AssociationOutcome:
    case: AssociationCase
    dl_serving_distance: float
    ul_serving_distance: float
    ul_serving_tier: TierId


def _classify(d_m, d_s, params: ValidatedParams):
    """Vectorised DL/UL tier decisions; ties go to the macro tier."""
    a = params.alpha
    dm_a, ds_a = d_m**a, d_s**a
    dl_macro = params.dl_ratio * dm_a <= ds_a
    ul_macro = params.ul_ratio * dm_a <= ds_a
    case = np.where(dl_macro, np.where(ul_macro, 1, 2), np.where(ul_macro, 3, 4)).astype(np.int8)
    return dl_macro, ul_macro, case


def _nearest(points: np.ndarray) -> float:
    return float(np.hypot(points[:, 0], points[:, 1]).min())


def associate(drop: DropRealization, params: SystemParams) -> AssociationOutcome:
    params = validate(params)
    d_m, d_s = _nearest(drop.macro), _nearest(drop.small)
    dl_macro, ul_macro, case = _classify(np.array(d_m), np.array(d_s), params)
    return AssociationOutcome(
        AssociationCase(int(case)),
        d_m if dl_macro else d_s,
        d_m if ul_macro else d_s,
        TierId.MACRO if ul_macro else TierId.SMALL,
    )


def coupled_baseline(drop: DropRealization, params: SystemParams) -> AssociationOutcome:
    """Both directions follow the downlink rule."""
    params = validate(params)
    d_m, d_s = _nearest(drop.macro), _nearest(drop.small)
    dl_macro, _, _ = _classify(np.array(d_m), np.array(d_s), params)
    d = d_m if dl_macro else d_s
    case = AssociationCase.CASE1 if dl_macro else AssociationCase.CASE4
    return AssociationOutcome(case, d, d, TierId.MACRO if dl_macro else TierId.SMALL)


def interference(drop: DropRealization, alpha: float) -> float:
    r = drop.interferer_distances
    return float(np.sum(drop.interferer_marks * drop.interferer_fading * r**-alpha)) + drop.far_field


def ul_sinr(drop: DropRealization, outcome: AssociationOutcome, params: SystemParams) -> float:
    params = validate(params)
    q = params.q_m if outcome.ul_serving_tier is TierId.MACRO else params.q_s
    signal = q * drop.serving_fading * outcome.ul_serving_distance**-params.alpha
    return signal / (interference(drop, params.alpha) + params.noise)


# block engine ----------------------------------------------------------------------


@dataclass
class DropBlock:
    """Flat arrays for a block of drops; ``*_off`` are segment offsets."""

    index: int
    macro: np.ndarray
    macro_off: np.ndarray
    small: np.ndarray
    small_off: np.ndarray
    serving_fading: np.ndarray
    interferers: np.ndarray  # distances to the receiver
    interferer_off: np.ndarray
    marks: np.ndarray
    fading: np.ndarray
    far_field: float
    resampled: int

    @property
    def size(self) -> int:
        return self.serving_fading.size

    def drop(self, i: int) -> DropRealization:
        ms = slice(self.macro_off[i], self.macro_off[i + 1])
        ss = slice(self.small_off[i], self.small_off[i + 1])
        js = slice(self.interferer_off[i], self.interferer_off[i + 1])
        return DropRealization(
            self.macro[ms],
            self.small[ss],
            self.interferers[js],
            self.marks[js],
            self.fading[js],
            float(self.serving_fading[i]),
            self.far_field,
            self.index * BLOCK_DROPS + i,
        )


def _offsets(counts):
    off = np.zeros(counts.size + 1, dtype=np.int64)
    np.cumsum(counts, out=off[1:])
    return off


def _bs_counts(density, area, n, rng):
    """Poisson counts with empty drops redrawn; also returns the initially-empty mask."""
    counts = rng.poisson(density * area, n)
    was_empty = counts == 0
    empty = np.flatnonzero(was_empty)
    while empty.size:
        counts[empty] = rng.poisson(density * area, empty.size)
        empty = empty[counts[empty] == 0]
    return counts, was_empty


def generate_block(
    params: SystemParams,
    sim: SimulationParams,
    block: int,
    n: int | None = None,
    radius: float | None = None,
    with_interferers: bool = True,
    stream: int = STREAM_DROPS,
) -> DropBlock:
    params = validate(params)
    n = BLOCK_DROPS if n is None else n
    radius = radius or sim.window_radius or default_window_radius(params)
    area = math.pi * radius * radius
    rng = block_rng(sim.seed, block, stream)

    r_m = tier_radius(params.lambda_m, radius)
    r_s = tier_radius(params.lambda_s, radius)
    cm, em = _bs_counts(params.lambda_m, math.pi * r_m * r_m, n, rng)
    cs, es = _bs_counts(params.lambda_s, math.pi * r_s * r_s, n, rng)
    resampled = int(np.count_nonzero(em | es))
    macro = _uniform_disk(int(cm.sum()), r_m, rng)
    small = _uniform_disk(int(cs.sum()), r_s, rng)
    h0 = rng.standard_exponential(n)

    lam_i = sim.interferers(params)
    if with_interferers:
        ci = rng.poisson(lam_i * area, n)
        inter = _uniform_radii(int(ci.sum()), radius, rng)
        p_macro = params.lambda_m / params.total_density
        marks = np.where(rng.random(inter.size) < p_macro, params.q_m, params.q_s)
        fading = rng.standard_exponential(inter.size)
    else:
        ci = np.zeros(n, dtype=np.int64)
        inter = np.empty(0)
        marks = np.empty(0)
        fading = np.empty(0)
    mean_mark = (params.lambda_m * params.q_m + params.lambda_s * params.q_s) / params.total_density
    far = far_field_interference(mean_mark, lam_i, radius, params.alpha) if with_interferers else 0.0
    return DropBlock(
        block, macro, _offsets(cm), small, _offsets(cs), h0, inter, _offsets(ci), marks, fading, far, resampled
    )


@dataclass
class BlockOutcome:
    """Per-drop results of one block for both association modes."""

    index: int
    case: np.ndarray  # int8, decoupled
    distance: np.ndarray
    sinr: np.ndarray
    coupled_case: np.ndarray
    coupled_distance: np.ndarray
    coupled_sinr: np.ndarray
    resampled: int


def evaluate_block(block: DropBlock, params: SystemParams, backend: str | None = None) -> BlockOutcome:
    params = validate(params)
    nearest, interf = _kernels.kernels(backend)
    a = params.alpha
    d_m = nearest(block.macro[:, 0].copy(), block.macro[:, 1].copy(), block.macro_off)
    d_s = nearest(block.small[:, 0].copy(), block.small[:, 1].copy(), block.small_off)
    dl_macro, ul_macro, case = _classify(d_m, d_s, params)

    total_i = (
        interf(block.interferers, block.marks, block.fading, block.interferer_off, a)
        + block.far_field
        + params.noise
    )
    dist = np.where(ul_macro, d_m, d_s)
    q = np.where(ul_macro, params.q_m, params.q_s)
    sinr = q * block.serving_fading * dist**-a / total_i

    c_dist = np.where(dl_macro, d_m, d_s)
    c_q = np.where(dl_macro, params.q_m, params.q_s)
    c_sinr = c_q * block.serving_fading * c_dist**-a / total_i
    c_case = np.where(dl_macro, 1, 4).astype(np.int8)
    return BlockOutcome(block.index, case, dist, sinr, c_case, c_dist, c_sinr, block.resampled)


# estimates --------------------------------------------------------------------------


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size == 0:
        return math.nan, math.nan
    if x.size == 1:
        return float(x[0]), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


@dataclass
class McEstimates:
    """Sample-based counterparts of the analytic quantities for one association mode."""

    case: np.ndarray
    distance: np.ndarray
    sinr: np.ndarray
    params: ValidatedParams
    resampled: int = 0
    counts: dict = field(init=False)
    se: dict = field(init=False)  # case -> (mean, stderr)
    ee: dict = field(init=False)
    se_avg: tuple = field(init=False)
    ee_avg: tuple = field(init=False)

    def __post_init__(self):
        n = self.drops
        self.counts = {c: int(np.count_nonzero(self.case == int(c))) for c in AssociationCase}
        rate = np.log2(1.0 + self.sinr)
        p_tot = np.full(n, np.nan)
        for c in FEASIBLE_CASES:
            p_tot[self.case == int(c)] = total_power(c, self.params)
        energy = self.params.bandwidth_w * rate / p_tot
        self.se, self.ee = {}, {}
        for c in FEASIBLE_CASES:
            sel = self.case == int(c)
            self.se[c] = _mean_se(rate[sel])
            self.ee[c] = _mean_se(energy[sel])
        self.se_avg = _mean_se(rate)
        self.ee_avg = _mean_se(energy)

    @property
    def drops(self) -> int:
        return int(self.case.size)

    @property
    def probabilities(self) -> CaseProbabilities:
        n = self.drops
        return CaseProbabilities(*(self.counts[c] / n for c in AssociationCase))

    def prob_stderr(self, case: AssociationCase) -> float:
        p = self.counts[AssociationCase(case)] / self.drops
        return math.sqrt(p * (1.0 - p) / self.drops)

    def distances(self, case: AssociationCase) -> np.ndarray:
        return self.distance[self.case == int(case)]

    def sinr_samples(self, case: AssociationCase) -> np.ndarray:
        return self.sinr[self.case == int(case)]

    def sinr_ccdf(self, case: AssociationCase, theta: float) -> tuple[float, float]:
        s = self.sinr_samples(case)
        p = float(np.mean(s > theta))
        return p, math.sqrt(p * (1.0 - p) / s.size)


@dataclass
class MonteCarloResult:
    decoupled: McEstimates
    coupled: McEstimates
    drops: int
    resampled: int
    window_radius: float
    backend: str


def _block_sizes(drops: int):
    full, rest = divmod(drops, BLOCK_DROPS)
    return [BLOCK_DROPS] * full + ([rest] if rest else [])


def run_monte_carlo(
    params: SystemParams,
    sim: SimulationParams,
    workers: int | None = None,
    backend: str | None = None,
) -> MonteCarloResult:
    """Simulate ``sim.drops`` drops; deterministic for a fixed seed."""
    params = validate(params)
    radius = sim.window_radius or default_window_radius(params)
    sizes = _block_sizes(sim.drops)
    workers = workers or worker_count()

    def work(b):
        block = generate_block(params, sim, b, sizes[b], radius)
        return evaluate_block(block, params, backend)

    if workers == 1 or len(sizes) == 1:
        outcomes = [work(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, range(len(sizes))))

    def cat(attr):
        return np.concatenate([getattr(o, attr) for o in outcomes])

    resampled = sum(o.resampled for o in outcomes)
    dec = McEstimates(cat("case"), cat("distance"), cat("sinr"), params, resampled)
    cou = McEstimates(cat("coupled_case"), cat("coupled_distance"), cat("coupled_sinr"), params, resampled)
    return MonteCarloResult(dec, cou, sim.drops, resampled, radius, backend or _kernels.BACKEND)


def sample_serving_distances(
    params: SystemParams, sim: SimulationParams, per_case: int, coupled: bool = False
) -> dict:
    """At least ``per_case`` serving-distance samples for each feasible case
    (association only, no interferers). Returns case -> first ``per_case`` samples."""
    params = validate(params)
    radius = sim.window_radius or default_window_radius(params)
    nearest, _ = _kernels.kernels()
    pools = {c: [] for c in FEASIBLE_CASES}
    have = {c: 0 for c in FEASIBLE_CASES}
    b = 0
    while min(have.values()) < per_case:
        block = generate_block(params, sim, b, BLOCK_DROPS, radius, False, STREAM_DISTANCES)
        d_m = nearest(block.macro[:, 0].copy(), block.macro[:, 1].copy(), block.macro_off)
        d_s = nearest(block.small[:, 0].copy(), block.small[:, 1].copy(), block.small_off)
        dl_macro, ul_macro, case = _classify(d_m, d_s, params)
        if coupled:
            case = np.where(dl_macro, 1, 4)
            ul_macro = dl_macro
        dist = np.where(ul_macro, d_m, d_s)
        for c in FEASIBLE_CASES:
            sel = dist[case == int(c)]
            pools[c].append(sel)
            have[c] += sel.size
        b += 1
        if b > 10_000:
            raise RuntimeError("case too rare to collect the requested serving-distance samples")
    return {c: np.concatenate(pools[c])[:per_case] for c in FEASIBLE_CASES}


def sample_interference(
    params: SystemParams,
    sim: SimulationParams,
    n: int,
    equivalent: bool = False,
    radius: float | None = None,
) -> np.ndarray:
    """``n`` interference samples at a fixed receiver.

    ``equivalent=False``: interferers at the simulation density with two-level
    power marks. ``equivalent=True``: unit-power interferers at the equivalent
    density lambda_I * E[Z^(2/alpha)].
    """
    params = validate(params)
    radius = radius or sim.window_radius or default_window_radius(params)
    area = math.pi * radius * radius
    lam_i = sim.interferers(params)
    _, interf = _kernels.kernels()
    out = []
    sizes = _block_sizes(n)
    for b, size in enumerate(sizes):
        rng = block_rng(sim.seed, b, STREAM_EQUIVALENT if equivalent else STREAM_INTERFERENCE)
        if equivalent:
            density = equivalent_interferer_density(params, lam_i)
            counts = rng.poisson(density * area, size)
            dist = _uniform_radii(int(counts.sum()), radius, rng)
            marks = np.ones(dist.size)
            mean_mark = 1.0
        else:
            density = lam_i
            counts = rng.poisson(density * area, size)
            dist = _uniform_radii(int(counts.sum()), radius, rng)
            p_macro = params.lambda_m / params.total_density
            marks = np.where(rng.random(dist.size) < p_macro, params.q_m, params.q_s)
            mean_mark = p_macro * params.q_m + (1 - p_macro) * params.q_s
        fading = rng.standard_exponential(dist.size)
        i = interf(dist, marks, fading, _offsets(counts), params.alpha)
        out.append(i + far_field_interference(mean_mark, density, radius, params.alpha))
    return np.concatenate(out)
