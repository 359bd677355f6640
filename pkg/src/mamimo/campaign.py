"""Monte-Carlo campaign driver and rate statistics.

One drop runs the whole pipeline: hexagonal geometry, user placement,
long-term fading, decentralized pilot assignment rounds, optional power
control, finite-antenna SINRs and per-link rates for the central cell.
Per-drop seeds are derived from the campaign master seed and the drop index
only, so every method and antenna count sees the identical channel
realization (paired comparison) and extending a campaign reproduces the
existing drops bit-exactly.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientSamples, SimulationError, TooManyPilots
from .geometry import build_hex_layout, compute_large_scale, drop_users
from .linkmodel import (
    ScenarioConfig,
    link_rate,
    network_sinrs,
    uniform_power_allocation,
    with_antennas,
)
from .pilots import EXHAUSTIVE_MAX_PILOTS, PaMethod, multicell_rounds
from .powerctl import PcConfig, resolve_targets, run_power_control

LINK_NAMES = ("dl", "ul", "total")


@dataclass(frozen=True)
class CampaignConfig:
    """Everything needed to reproduce a campaign."""

    scenario: ScenarioConfig
    antennas: tuple[int, ...] = (128,)
    methods: tuple[PaMethod, ...] = (PaMethod("random"),)
    drops: int = 100
    master_seed: int = 0
    rounds: int = 3
    pc: PcConfig | None = None
    workers: int = 1

    def __post_init__(self):
        if self.drops < 1:
            raise ConfigError("drops must be >= 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.antennas or any(n < 1 for n in self.antennas):
            raise ConfigError("antennas must be a non-empty list of positive counts")
        K = self.scenario.users_per_cell
        for method in self.methods:
            if method.needs_exhaustive and K > EXHAUSTIVE_MAX_PILOTS:
                raise TooManyPilots(
                    f"method {method.acronym} infeasible for K={K}"
                )


@dataclass
class DropResult:
    """Central-cell outcome of one (drop, method, antenna count) run.

    All per-user arrays are ordered by user index; ``pilot[u]`` is the
    pilot user ``u`` ended up holding.
    """

    drop_index: int
    method: str
    num_antennas: int
    pilot: np.ndarray
    ul_sinr: np.ndarray
    dl_sinr: np.ndarray
    ul_rate: np.ndarray
    dl_rate: np.ndarray
    total_rate: np.ndarray


@dataclass
class LinkStats:
    mean_rate: float
    likely95_rate: float
    ccdf_rates: np.ndarray
    ccdf_fractions: np.ndarray


@dataclass
class MethodStatistics:
    method: str
    num_antennas: int
    links: dict[str, LinkStats]


@dataclass
class RateStatistics:
    """Aggregated per-(method, antennas) statistics of a campaign."""

    entries: list[MethodStatistics] = field(default_factory=list)

    def get(self, method: str, num_antennas: int) -> MethodStatistics:
        for entry in self.entries:
            if entry.method == method and entry.num_antennas == num_antennas:
                return entry
        raise KeyError((method, num_antennas))


def drop_seed_sequence(master_seed: int, drop_index: int) -> np.random.SeedSequence:
    """Seed of one drop; a pure function of (master seed, drop index)."""
    return np.random.SeedSequence(master_seed, spawn_key=(drop_index,))


def _child_rng(seed: np.random.SeedSequence, stream: int) -> np.random.Generator:
    child = np.random.SeedSequence(
        entropy=seed.entropy, spawn_key=seed.spawn_key + (stream,)
    )
    return np.random.default_rng(child)


def _pc_link(pc: PcConfig, config: ScenarioConfig) -> str:
    target_dl, target_ul = resolve_targets(pc, config)
    if target_dl is not None and target_ul is not None:
        return "both"
    return "dl" if target_dl is not None else "ul"


def run_drop(
    config: ScenarioConfig,
    method: PaMethod,
    pc: PcConfig | None,
    seed,
    rounds: int = 3,
    drop_index: int = 0,
) -> DropResult:
    """Run one Monte-Carlo drop and report the central cell.

    ``seed`` is an integer or :class:`numpy.random.SeedSequence`.  Channel
    generation and pilot-assignment initialization use separate child
    streams, so the channel realization does not depend on the method.
    """
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    channel_rng = _child_rng(seed, 0)
    pa_rng = _child_rng(seed, 1)

    layout = build_hex_layout(config.num_cells, config.cell_radius_m)
    drop = drop_users(layout, config.users_per_cell, config.exclusion_radius_m, channel_rng)
    beta = compute_large_scale(
        layout, drop, config.pathloss_exponent, config.shadow_sigma_db, channel_rng
    )

    powers = uniform_power_allocation(config)
    assignment = multicell_rounds(beta, powers, config, method, rounds, pa_rng)
    if pc is not None:
        powers = run_power_control(beta, assignment, config, pc, link=_pc_link(pc, config))

    ul_by_pilot, dl_by_pilot = network_sinrs(beta, powers, assignment, config)
    K = config.users_per_cell
    pilot_of_user = np.empty(K, dtype=np.intp)
    pilot_of_user[assignment[0]] = np.arange(K)
    ul_sinr = ul_by_pilot[0, pilot_of_user]
    dl_sinr = dl_by_pilot[0, pilot_of_user]
    ul_rate = link_rate(ul_sinr, config.xi_ul, config)
    dl_rate = link_rate(dl_sinr, config.xi_dl, config)
    return DropResult(
        drop_index=drop_index,
        method=method.acronym,
        num_antennas=config.num_antennas,
        pilot=pilot_of_user,
        ul_sinr=ul_sinr,
        dl_sinr=dl_sinr,
        ul_rate=ul_rate,
        dl_rate=dl_rate,
        total_rate=ul_rate + dl_rate,
    )


def _drop_task(args):
    config, method, pc, master_seed, rounds, drop_index = args
    try:
        return run_drop(
            config, method, pc,
            seed=drop_seed_sequence(master_seed, drop_index),
            rounds=rounds, drop_index=drop_index,
        )
    except SimulationError as exc:
        raise SimulationError(
            f"drop {drop_index} (master seed {master_seed}) failed: {exc}"
        ) from exc


def run_campaign(campaign: CampaignConfig):
    """Run drops x methods x antenna counts; returns (stats, raw results).

    Raw results are ordered by (antennas, method, drop index) regardless of
    how many workers execute the drops, so output files are reproducible.
    """
    results: list[DropResult] = []
    for num_antennas in campaign.antennas:
        scenario = with_antennas(campaign.scenario, num_antennas)
        for method in campaign.methods:
            tasks = [
                (scenario, method, campaign.pc, campaign.master_seed,
                 campaign.rounds, drop)
                for drop in range(campaign.drops)
            ]
            if campaign.workers > 1:
                chunk = max(1, campaign.drops // (campaign.workers * 8))
                with ProcessPoolExecutor(max_workers=campaign.workers) as pool:
                    results.extend(pool.map(_drop_task, tasks, chunksize=chunk))
            else:
                results.extend(map(_drop_task, tasks))
    return aggregate_statistics(results), results


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def likely_rate(samples, probability: float = 0.95) -> float:
    """Rate assured with the given probability (nearest-rank percentile).

    For ``probability = 0.95`` this is the 5th-percentile rate of the
    pooled per-user samples; at least ``1 / (1 - probability)`` samples are
    required.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    tail = (1.0 - probability) * samples.size
    if tail < 1.0:
        raise InsufficientSamples(
            f"{samples.size} samples cannot resolve the "
            f"{100 * (1 - probability):g}th percentile"
        )
    rank = math.ceil(tail)
    return float(np.sort(samples)[rank - 1])


def empirical_cdf(samples, grid: int = 200):
    """Complementary CDF (fraction of samples strictly above each rate).

    Returns ``(rates, fractions)`` on an evenly spaced grid from 0 to the
    sample maximum.
    """
    samples = np.sort(np.asarray(samples, dtype=float).ravel())
    if samples.size == 0:
        raise InsufficientSamples("no samples")
    rates = np.linspace(0.0, samples[-1], grid)
    above = samples.size - np.searchsorted(samples, rates, side="right")
    return rates, above / samples.size


def aggregate_statistics(results, ccdf_grid: int = 200) -> RateStatistics:
    """Pool per-user samples of each (method, antennas) group."""
    groups: dict[tuple[str, int], list[DropResult]] = {}
    for res in results:
        groups.setdefault((res.method, res.num_antennas), []).append(res)

    stats = RateStatistics()
    for (method, num_antennas), group in groups.items():
        links = {}
        for link in LINK_NAMES:
            samples = np.concatenate([getattr(r, f"{link}_rate") for r in group])
            try:
                likely = likely_rate(samples)
            except InsufficientSamples:
                likely = float("nan")
            rates, fractions = empirical_cdf(samples, grid=ccdf_grid)
            links[link] = LinkStats(
                mean_rate=float(samples.mean()),
                likely95_rate=likely,
                ccdf_rates=rates,
                ccdf_fractions=fractions,
            )
        stats.entries.append(MethodStatistics(method, num_antennas, links))
    return stats
