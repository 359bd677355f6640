"""Per-cell pilot assignment optimization.

A cell's strategy is a permutation ``c`` with ``c[p]`` the user holding
pilot ``p``.  Optimization is decentralized: cells take turns re-optimizing
their own permutation while every other cell's choice is held fixed
(best-response rounds).

Cost matrices are built by default from the finite-antenna SINR
expressions at the configured antenna count.  The large-antenna
(``basis="asymptotic"``) variant is also available; it is cheaper and
structurally simpler, but its unbounded upper tail misranks permutations
for mean objectives at practical antenna counts, so the finite form is the
default.  When an asymptotic cross-interference denominator is exactly
zero the finite-antenna SINR is substituted for that entry.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TooManyPilots
from .linkmodel import (
    PowerAllocation,
    ScenarioConfig,
    _pilot_holder_gains,
    dl_sinr_finite,
    total_capacity,
    ul_sinr_finite,
)

METRICS = ("ul", "dl", "tc")

_ACRONYMS = {
    "random": ("random", None),
    "maxsinr-dl": ("exhaustive_mean", "dl"),
    "maxminsinr-dl": ("exhaustive_maxmin", "dl"),
    "h-maxminsinr-dl": ("heuristic_maxmin", "dl"),
    "maxsinr-ul": ("exhaustive_mean", "ul"),
    "maxminsinr-ul": ("exhaustive_maxmin", "ul"),
    "h-maxminsinr-ul": ("greedy_ul", None),
    "maxtc": ("exhaustive_mean", "tc"),
    "maxmintc": ("exhaustive_maxmin", "tc"),
    "h-maxmintc": ("heuristic_maxmin", "tc"),
}
_TO_ACRONYM = {v: k for k, v in _ACRONYMS.items()}


@dataclass(frozen=True)
class PaMethod:
    """One pilot-assignment scheme.

    ``kind`` is one of ``random``, ``exhaustive_maxmin``, ``exhaustive_mean``,
    ``heuristic_maxmin`` or ``greedy_ul``; ``metric`` (``ul``/``dl``/``tc``)
    selects the cost-matrix metric and must be absent for ``random`` and
    ``greedy_ul`` (the greedy scheme is intrinsically an uplink method).
    """

    kind: str
    metric: str | None = None

    def __post_init__(self):
        kinds = ("random", "exhaustive_maxmin", "exhaustive_mean",
                 "heuristic_maxmin", "greedy_ul")
        if self.kind not in kinds:
            raise ConfigError(f"unknown PA kind {self.kind!r}")
        if self.kind in ("random", "greedy_ul"):
            if self.metric is not None:
                raise ConfigError(f"{self.kind} takes no metric")
        elif self.metric not in METRICS:
            raise ConfigError(
                f"{self.kind} needs a metric from {METRICS}, got {self.metric!r}"
            )

    @classmethod
    def from_acronym(cls, name: str) -> "PaMethod":
        token = name.strip().lower().replace("_", "-").replace(" ", "-")
        if token not in _ACRONYMS:
            raise ConfigError(
                f"unknown PA method {name!r}; valid: {', '.join(sorted(_ACRONYMS))}"
            )
        kind, metric = _ACRONYMS[token]
        return cls(kind, metric)

    @property
    def acronym(self) -> str:
        key = (self.kind, self.metric)
        if key in _TO_ACRONYM:
            return _TO_ACRONYM[key]
        return f"{self.kind}-{self.metric}"

    @property
    def needs_exhaustive(self) -> bool:
        return self.kind in ("exhaustive_maxmin", "exhaustive_mean")


RANDOM = PaMethod("random")
GREEDY_UL = PaMethod("greedy_ul")

# 8! = 40320 permutations per cell update is the largest search we allow.
EXHAUSTIVE_MAX_PILOTS = 8


def random_pa(num_pilots: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random pilot permutation."""
    if num_pilots < 1:
        raise ConfigError(f"num_pilots must be >= 1, got {num_pilots}")
    return rng.permutation(num_pilots)


# ---------------------------------------------------------------------------
# Cost matrices
# ---------------------------------------------------------------------------

def _ul_cost_matrix(cell, beta, powers, assignment, config, basis):
    """entry[u, p]: UL SINR if user u of `cell` took pilot p."""
    gains = _pilot_holder_gains(beta, assignment)[cell]  # (L, K): (cell l, pilot p)
    ul_pilot = np.take_along_axis(powers.ul.T, assignment, axis=1)
    interference = (ul_pilot * gains**2).sum(axis=0) - ul_pilot[cell] * gains[cell] ** 2
    own_gain = beta[cell, :, cell]
    num = powers.ul[:, cell] * own_gain**2
    if basis == "asymptotic":
        with np.errstate(divide="ignore", invalid="ignore"):
            cost = num[:, None] / interference[None, :]
        return _patch_zero_denominators(
            cost, interference[None, :] == 0.0, "ul", cell, beta, powers,
            assignment, config,
        )
    # Finite antennas: estimate normalization of the holder hypothesis plus
    # the total received power at this BS scale the noise-like term.
    theta = gains.sum(axis=0) - gains[cell] + config.pilot_noise_ratio  # (K pilots,)
    a_sq = own_gain[:, None] + theta[None, :]
    total_rx = float(np.einsum("kl,kl->", powers.ul, beta[cell]))
    den = interference[None, :] + a_sq / config.num_antennas * (
        total_rx + config.noise_power
    )
    return num[:, None] / den


def _dl_cost_matrix(cell, beta, powers, assignment, config, basis):
    """entry[u, p]: DL SINR if user u of `cell` took pilot p."""
    gains = _pilot_holder_gains(beta, assignment)  # (L, L, K)
    ratio = config.pilot_noise_ratio
    # Contamination at each BS excluding whatever `cell` contributes: the
    # only part of every normalization that depends on the holder hypothesis.
    theta = gains.sum(axis=1) - gains[:, cell, :] + ratio  # (L, K pilots)
    to_cell = beta[:, :, cell]  # (L, K users)
    dl_pilot = np.take_along_axis(powers.dl, assignment, axis=1)
    terms = (
        dl_pilot[:, None, :]
        * to_cell[:, :, None] ** 2
        / (to_cell[:, :, None] + theta[:, None, :])
    )  # (L, users, pilots)
    own = to_cell[cell]
    num = powers.dl[cell][:, None] * own[:, None] ** 2 / (own[:, None] + theta[cell][None, :])
    interference = terms.sum(axis=0) - terms[cell]
    if basis == "asymptotic":
        with np.errstate(divide="ignore", invalid="ignore"):
            cost = num / interference
        return _patch_zero_denominators(
            cost, interference == 0.0, "dl", cell, beta, powers, assignment, config
        )
    noncoherent = np.einsum("lu,l->u", to_cell, powers.dl.sum(axis=1))
    den = interference + (noncoherent[:, None] + config.noise_power) / config.num_antennas
    return num / den


def _patch_zero_denominators(cost, zero_mask, link, cell, beta, powers, assignment, config):
    """Replace undefined asymptotic entries by the finite-antenna SINR."""
    zero_mask = np.broadcast_to(zero_mask, cost.shape)
    if not zero_mask.any():
        return cost
    finite = ul_sinr_finite if link == "ul" else dl_sinr_finite
    cost = cost.copy()
    trial = assignment.copy()
    for user, pilot in zip(*np.nonzero(zero_mask)):
        trial[cell] = assignment[cell]
        trial[cell, pilot] = user
        cost[user, pilot] = finite(beta, powers, trial, config, cell, pilot)
    return cost


def build_cost_matrix(
    metric: str,
    cell: int,
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    config: ScenarioConfig,
) -> np.ndarray:
    """K x K metric matrix for one cell: rows are users, columns pilots.

    Entry ``(u, p)`` is the metric user ``u`` would attain if ``cell``
    assigned pilot ``p`` to him, with every other cell's assignment and all
    powers held fixed.
    """
    if metric == "ul":
        return _ul_cost_matrix(cell, beta, powers, assignment, config)
    if metric == "dl":
        return _dl_cost_matrix(cell, beta, powers, assignment, config)
    if metric == "tc":
        ul = _ul_cost_matrix(cell, beta, powers, assignment, config)
        dl = _dl_cost_matrix(cell, beta, powers, assignment, config)
        return np.asarray(total_capacity(ul, dl, config))
    raise ConfigError(f"unknown metric {metric!r}")


# ---------------------------------------------------------------------------
# Per-cell solvers
# ---------------------------------------------------------------------------

def exhaustive_pa(cost: np.ndarray, objective: str = "maxmin"):
    """Enumerate all K! permutations and return ``(best, objective value)``.

    ``objective`` is ``maxmin`` (worst assigned entry) or ``maxmean``
    (average assigned entry).  Ties go to the lexicographically smallest
    permutation.  Guarded by :data:`EXHAUSTIVE_MAX_PILOTS`.
    """
    K = cost.shape[0]
    if K > EXHAUSTIVE_MAX_PILOTS:
        raise TooManyPilots(
            f"exhaustive search over {K}! permutations refused (max K = "
            f"{EXHAUSTIVE_MAX_PILOTS})"
        )
    if objective not in ("maxmin", "maxmean"):
        raise ConfigError(f"unknown objective {objective!r}")
    perms = np.array(list(itertools.permutations(range(K))), dtype=np.intp)
    values = cost[perms, np.arange(K)]
    scores = values.min(axis=1) if objective == "maxmin" else values.mean(axis=1)
    best = int(np.argmax(scores))
    return perms[best].copy(), float(scores[best])


def assignment_value(cost: np.ndarray, perm: np.ndarray, objective: str = "maxmin") -> float:
    """Objective a given permutation achieves on a cost matrix."""
    values = cost[np.asarray(perm), np.arange(cost.shape[0])]
    return float(values.min() if objective == "maxmin" else values.mean())


def heuristic_pa(cost: np.ndarray) -> np.ndarray:
    """Low-complexity max-min solver.

    Repeatedly find each remaining user's best remaining pilot, give the
    user with the lowest such best value that pilot, then retire both.  Ties
    are broken toward the smallest index, making the result deterministic.
    """
    K = cost.shape[0]
    perm = np.full(K, -1, dtype=np.intp)
    row_active = np.ones(K, dtype=bool)
    col_active = np.ones(K, dtype=bool)
    for _ in range(K):
        masked = np.where(col_active[None, :], cost, -np.inf)
        best_value = masked.max(axis=1)
        best_pilot = masked.argmax(axis=1)
        user = int(np.argmin(np.where(row_active, best_value, np.inf)))
        pilot = int(best_pilot[user])
        perm[pilot] = user
        row_active[user] = False
        col_active[pilot] = False
    return perm


def greedy_ul_pa(
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    cell: int,
) -> np.ndarray:
    """Uplink baseline: worst pilots to the best-located users.

    Pilots are ranked by the power-weighted contamination they suffer from
    the other cells, users by their own-cell gain; ranks are matched so the
    strongest user absorbs the dirtiest pilot.
    """
    gains = _pilot_holder_gains(beta, assignment)[cell]
    ul_pilot = np.take_along_axis(powers.ul.T, assignment, axis=1)
    interference = (ul_pilot * gains**2).sum(axis=0) - ul_pilot[cell] * gains[cell] ** 2
    own = beta[cell, :, cell]
    pilots_by_badness = np.argsort(-interference, kind="stable")
    users_by_gain = np.argsort(-own, kind="stable")
    perm = np.empty(len(own), dtype=np.intp)
    perm[pilots_by_badness] = users_by_gain
    return perm


# ---------------------------------------------------------------------------
# Decentralized rounds
# ---------------------------------------------------------------------------

def _optimize_cell(method, cell, beta, powers, assignment, config):
    if method.kind == "greedy_ul":
        return greedy_ul_pa(beta, powers, assignment, cell)
    cost = build_cost_matrix(method.metric, cell, beta, powers, assignment, config)
    if method.kind == "heuristic_maxmin":
        return heuristic_pa(cost)
    objective = "maxmin" if method.kind == "exhaustive_maxmin" else "maxmean"
    perm, _ = exhaustive_pa(cost, objective)
    return perm


def multicell_rounds(
    beta: np.ndarray,
    powers: PowerAllocation,
    config: ScenarioConfig,
    method: PaMethod,
    rounds: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Run best-response pilot assignment rounds over all cells.

    Every cell starts from a random permutation drawn from ``rng``.  For
    the ``random`` method that initial state is the result; otherwise cells
    are re-optimized in index order for the given number of rounds, with an
    early exit once a whole round leaves the assignment unchanged.
    """
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    L, K = config.num_cells, config.users_per_cell
    if method.needs_exhaustive and K > EXHAUSTIVE_MAX_PILOTS:
        raise TooManyPilots(
            f"{method.acronym} infeasible for K={K} pilots (max "
            f"{EXHAUSTIVE_MAX_PILOTS})"
        )
    assignment = np.stack([random_pa(K, rng) for _ in range(L)])
    if method.kind == "random":
        return assignment
    for _ in range(rounds):
        changed = False
        for cell in range(L):
            perm = _optimize_cell(method, cell, beta, powers, assignment, config)
            if not np.array_equal(perm, assignment[cell]):
                assignment[cell] = perm
                changed = True
        if not changed:
            break
    return assignment
