"""Closed-form UL/DL SINR and capacity evaluation.

All quantities are kept in linear scale; dB conversions happen only at the
configuration boundary.  A pilot assignment is an integer array of shape
``(L, K)`` where ``assignment[j, p]`` is the index of the user of cell ``j``
holding pilot ``p`` (each row is a permutation of ``0..K-1``).

Finite-antenna SINRs
--------------------
With MRC detection the uplink SINR of the user of cell ``i`` on pilot ``p``
(user ``k' = assignment[i, p]``) is

    ul = rho_u[k', i] * beta[i, k', i]**2 /
         ( sum_{l != i} rho_u[holder(l), l] * beta[i, holder(l), l]**2
           + alpha_sq[i, p] / N * (sum_{l, k} rho_u[k, l] * beta[i, k, l]
                                   + sigma_n_sq) )

and with MRT precoding the downlink SINR of the same user is

    dl = (rho_d[i, k'] * beta[i, k', i]**2 / alpha_sq[i, p]) /
         ( sum_{l != i} rho_d[l, holder(l)] * beta[l, k', i]**2 / alpha_sq[l, p]
           + 1 / N * (sum_l beta[l, k', i] * sum_k rho_d[l, k] + sigma_n_sq) )

where ``alpha_sq[i, p] = sum_l beta[i, holder(l), l] + sigma_n_sq / rho_p``
is the MRT normalization (the mean square norm of the contaminated channel
estimate).  Letting ``N -> inf`` removes the noise-scaled terms and leaves
only the coherent pilot-contamination interference.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NoInterference


@dataclass(frozen=True)
class ScenarioConfig:
    """Scalar parameters of one simulated scenario.

    Powers and noise are linear; the bundled defaults realize a 10 dB
    received SNR at the cell edge (where ``beta == 1`` without shadowing)
    for pilot, UL data and DL data transmission.
    """

    num_cells: int = 7
    users_per_cell: int = 4
    num_antennas: int = 128
    coherence_symbols: int = 100
    xi_ul: float = 0.5
    xi_dl: float = 0.5
    bandwidth_hz: float = 20e6
    noise_power: float = 1.0
    pilot_power: float = 10.0
    ul_power: float = 10.0
    dl_power: float = 10.0
    pathloss_exponent: float = 3.8
    shadow_sigma_db: float = 8.0
    cell_radius_m: float = 1000.0
    exclusion_radius_m: float = 100.0

    def __post_init__(self):
        if self.users_per_cell < 1:
            raise ConfigError("users_per_cell must be >= 1")
        if self.num_antennas < 1:
            raise ConfigError("num_antennas must be >= 1")
        if not 0 < self.xi_ul < 1 or not 0 < self.xi_dl < 1:
            raise ConfigError("xi_ul and xi_dl must lie in (0, 1)")
        if abs(self.xi_ul + self.xi_dl - 1.0) > 1e-12:
            raise ConfigError(
                f"xi_ul + xi_dl must equal 1, got {self.xi_ul + self.xi_dl}"
            )
        if self.coherence_symbols <= self.users_per_cell:
            raise ConfigError(
                "coherence_symbols must exceed users_per_cell "
                f"({self.coherence_symbols} <= {self.users_per_cell})"
            )
        data_symbols = self.coherence_symbols - self.users_per_cell
        for name, xi in (("xi_ul", self.xi_ul), ("xi_dl", self.xi_dl)):
            slots = xi * data_symbols
            if abs(slots - round(slots)) > 1e-9:
                raise ConfigError(
                    f"{name} * (S - K) = {slots} is not an integer symbol count"
                )
        for name in ("pilot_power", "ul_power", "dl_power", "bandwidth_hz"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        # noise_power == 0 is allowed: it is the exact noise-free limit used
        # by closed-form checks.
        if self.noise_power < 0:
            raise ConfigError("noise_power must be >= 0")
        if not self.exclusion_radius_m < self.cell_radius_m:
            raise ConfigError("exclusion_radius_m must be below cell_radius_m")

    @property
    def pilot_noise_ratio(self) -> float:
        """sigma_n^2 / rho_p, the noise inflation of the channel estimate."""
        return self.noise_power / self.pilot_power


def scenario_from_snr_db(
    pilot_snr_db: float = 10.0,
    ul_snr_db: float = 10.0,
    dl_snr_db: float = 10.0,
    **kwargs,
) -> ScenarioConfig:
    """Build a config from cell-edge SNRs in dB (noise power fixed at 1)."""
    return ScenarioConfig(
        noise_power=1.0,
        pilot_power=10.0 ** (pilot_snr_db / 10.0),
        ul_power=10.0 ** (ul_snr_db / 10.0),
        dl_power=10.0 ** (dl_snr_db / 10.0),
        **kwargs,
    )


@dataclass
class PowerAllocation:
    """Per-user transmit powers and their ceilings (linear scale).

    ``ul[k, j]`` is the UL data power of user ``k`` of cell ``j``;
    ``dl[i, k]`` the DL power BS ``i`` spends on its user ``k``.
    ``ul_rel_change`` / ``dl_rel_change`` hold the per-iteration maximum
    relative power change when the allocation came out of power control.
    """

    ul: np.ndarray
    dl: np.ndarray
    ul_max: np.ndarray
    dl_max: np.ndarray
    ul_rel_change: np.ndarray | None = field(default=None, compare=False)
    dl_rel_change: np.ndarray | None = field(default=None, compare=False)


def uniform_power_allocation(config: ScenarioConfig) -> PowerAllocation:
    """Every user at the default UL/DL power; ceilings equal to that power."""
    L, K = config.num_cells, config.users_per_cell
    ul = np.full((K, L), config.ul_power)
    dl = np.full((L, K), config.dl_power)
    return PowerAllocation(ul=ul, dl=dl, ul_max=ul.copy(), dl_max=dl.copy())


def identity_assignment(num_cells: int, users_per_cell: int) -> np.ndarray:
    """Pilot p -> user p in every cell."""
    return np.tile(np.arange(users_per_cell), (num_cells, 1))


def is_valid_assignment(assignment: np.ndarray) -> bool:
    assignment = np.asarray(assignment)
    if assignment.ndim != 2:
        return False
    ref = np.arange(assignment.shape[1])
    return bool(np.all(np.sort(assignment, axis=1) == ref))


# ---------------------------------------------------------------------------
# Normalization factors
# ---------------------------------------------------------------------------

def alpha_sq(
    beta: np.ndarray,
    bs: int,
    pilot: int,
    assignment: np.ndarray,
    sigma_n_sq: float,
    pilot_power: float,
) -> float:
    """Estimate normalization at ``bs`` for ``pilot``: sum of the gains of
    every cell's holder of that pilot plus the estimation noise floor."""
    L = beta.shape[0]
    total = sigma_n_sq / pilot_power
    for cell in range(L):
        total += beta[bs, assignment[cell, pilot], cell]
    return float(total)


def vartheta(
    beta: np.ndarray,
    bs: int,
    pilot: int,
    home_cell: int,
    assignment: np.ndarray,
    sigma_n_sq: float,
    pilot_power: float,
) -> float:
    """Pilot-contamination part of ``alpha_sq`` that excludes ``home_cell``.

    This is the part of the normalization that does not depend on which
    user of ``home_cell`` ends up holding the pilot.
    """
    L = beta.shape[0]
    total = sigma_n_sq / pilot_power
    for cell in range(L):
        if cell != home_cell:
            total += beta[bs, assignment[cell, pilot], cell]
    return float(total)


def _alpha_sq_all(beta, assignment, sigma_n_sq, pilot_power):
    """alpha_sq for every (BS, pilot) pair at once; shape (L, K)."""
    holders = _pilot_holder_gains(beta, assignment)
    return holders.sum(axis=1) + sigma_n_sq / pilot_power


def _pilot_holder_gains(beta, assignment):
    """Gains of pilot holders: out[i, j, p] = beta[i, assignment[j, p], j]."""
    L, K = assignment.shape
    bt = beta.transpose(0, 2, 1)  # bt[i, j, k]
    idx = np.broadcast_to(assignment[None, :, :], (L, L, K))
    return np.take_along_axis(bt, idx, axis=2)


# ---------------------------------------------------------------------------
# Finite-antenna SINRs
# ---------------------------------------------------------------------------

def network_sinrs(
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    config: ScenarioConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Finite-antenna UL and DL SINRs for every (cell, pilot) pair.

    Returns ``(ul, dl)``, each of shape ``(L, K)`` indexed by (cell, pilot).
    This is the vectorized form of :func:`ul_sinr_finite` /
    :func:`dl_sinr_finite` used in the simulation hot loops.
    """
    N = config.num_antennas
    sigma = config.noise_power

    gains = _pilot_holder_gains(beta, assignment)  # (L, L, K): (bs, cell, pilot)
    a_sq = gains.sum(axis=1) + config.pilot_noise_ratio  # (L, K): (bs, pilot)
    own = np.diagonal(gains, axis1=0, axis2=1).T  # (L, K): beta[i, holder(i,p), i]

    # UL -------------------------------------------------------------------
    ul_pilot = np.take_along_axis(powers.ul.T, assignment, axis=1)  # (L, K)
    coherent = np.einsum("lp,ilp->ip", ul_pilot, gains**2)
    coherent -= ul_pilot * own**2
    total_rx = np.einsum("kl,ikl->i", powers.ul, beta)
    ul_num = ul_pilot * own**2
    ul_den = coherent + a_sq / N * (total_rx[:, None] + sigma)
    ul = ul_num / ul_den

    # DL -------------------------------------------------------------------
    dl_pilot = np.take_along_axis(powers.dl, assignment, axis=1)  # (L, K)
    dl_num = dl_pilot * own**2 / a_sq
    cross = np.einsum("lp,ljp->jp", dl_pilot / a_sq, gains**2)
    cross -= dl_num
    bs_totals = powers.dl.sum(axis=1)
    noncoherent = (np.einsum("l,ljp->jp", bs_totals, gains) + sigma) / N
    dl = dl_num / (cross + noncoherent)

    return ul, dl


def ul_sinr_finite(
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    config: ScenarioConfig,
    cell: int,
    pilot: int,
) -> float:
    """Finite-antenna MRC uplink SINR of the ``pilot`` holder of ``cell``."""
    L = beta.shape[0]
    N = config.num_antennas
    user = assignment[cell, pilot]
    num = powers.ul[user, cell] * beta[cell, user, cell] ** 2
    coherent = 0.0
    for other in range(L):
        if other == cell:
            continue
        holder = assignment[other, pilot]
        coherent += powers.ul[holder, other] * beta[cell, holder, other] ** 2
    a_sq = alpha_sq(beta, cell, pilot, assignment, config.noise_power, config.pilot_power)
    total_rx = float(np.einsum("kl,kl->", powers.ul, beta[cell]))
    den = coherent + a_sq / N * (total_rx + config.noise_power)
    return num / den


def dl_sinr_finite(
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    config: ScenarioConfig,
    cell: int,
    pilot: int,
) -> float:
    """Finite-antenna MRT downlink SINR of the ``pilot`` holder of ``cell``."""
    L = beta.shape[0]
    N = config.num_antennas
    user = assignment[cell, pilot]
    a_own = alpha_sq(beta, cell, pilot, assignment, config.noise_power, config.pilot_power)
    num = powers.dl[cell, user] * beta[cell, user, cell] ** 2 / a_own
    cross = 0.0
    noncoherent = 0.0
    for other in range(L):
        gain_to_user = beta[other, user, cell]
        noncoherent += gain_to_user * powers.dl[other].sum()
        if other == cell:
            continue
        a_other = alpha_sq(
            beta, other, pilot, assignment, config.noise_power, config.pilot_power
        )
        holder = assignment[other, pilot]
        cross += powers.dl[other, holder] * gain_to_user**2 / a_other
    den = cross + (noncoherent + config.noise_power) / N
    return num / den


# ---------------------------------------------------------------------------
# Asymptotic (N -> inf) SINRs
# ---------------------------------------------------------------------------

def ul_sinr_asym(
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    cell: int,
    pilot: int,
) -> float:
    """Large-antenna uplink SINR: coherent contamination only.

    Raises :class:`NoInterference` when no cross cell contributes power on
    this pilot; callers must then fall back to the finite-antenna form.
    """
    L = beta.shape[0]
    user = assignment[cell, pilot]
    num = powers.ul[user, cell] * beta[cell, user, cell] ** 2
    den = 0.0
    for other in range(L):
        if other == cell:
            continue
        holder = assignment[other, pilot]
        den += powers.ul[holder, other] * beta[cell, holder, other] ** 2
    if den == 0.0:
        raise NoInterference(
            f"no uplink pilot contamination for cell {cell}, pilot {pilot}"
        )
    return num / den


def dl_sinr_asym(
    beta: np.ndarray,
    powers: PowerAllocation,
    assignment: np.ndarray,
    cell: int,
    pilot: int,
    sigma_n_sq: float = 0.0,
    pilot_power: float = 1.0,
) -> float:
    """Large-antenna downlink SINR of the ``pilot`` holder of ``cell``.

    Uses the decomposition ``alpha_sq = beta_own + vartheta`` so the
    normalization of every BS reflects the holder hypothesis of ``cell``.
    """
    L = beta.shape[0]
    user = assignment[cell, pilot]
    th_own = vartheta(beta, cell, pilot, cell, assignment, sigma_n_sq, pilot_power)
    num = (
        powers.dl[cell, user]
        * beta[cell, user, cell] ** 2
        / (beta[cell, user, cell] + th_own)
    )
    den = 0.0
    for other in range(L):
        if other == cell:
            continue
        th = vartheta(beta, other, pilot, cell, assignment, sigma_n_sq, pilot_power)
        gain = beta[other, user, cell]
        holder = assignment[other, pilot]
        den += powers.dl[other, holder] * gain**2 / (gain + th)
    if den == 0.0:
        raise NoInterference(
            f"no downlink pilot contamination for cell {cell}, pilot {pilot}"
        )
    return num / den


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

def pilot_overhead(config: ScenarioConfig) -> float:
    S, K = config.coherence_symbols, config.users_per_cell
    return (S - K) / S


def link_rate(sinr, xi: float, config: ScenarioConfig):
    """Shannon rate of one link in bit/s: BW * (S-K)/S * xi * log2(1+sinr)."""
    return config.bandwidth_hz * pilot_overhead(config) * xi * np.log2(1.0 + np.asarray(sinr))


def total_capacity(ul_sinr, dl_sinr, config: ScenarioConfig):
    """Sum of UL and DL rates in bit/s; accepts scalars or arrays."""
    return link_rate(ul_sinr, config.xi_ul, config) + link_rate(
        dl_sinr, config.xi_dl, config
    )


def with_antennas(config: ScenarioConfig, num_antennas: int) -> ScenarioConfig:
    """Copy of ``config`` with a different antenna count."""
    return replace(config, num_antennas=num_antennas)
