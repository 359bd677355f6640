"""Distributed target-SINR power control.

Both supported update rules measure the effective interference of a user as
``previous power / previous SINR`` and then either track the target exactly
(capped at the maximum power) or, in the gradual-removal variant, back off
inversely once the target becomes infeasible, which quiets users that would
otherwise saturate at full power without ever reaching their target.

Powers start at half their ceilings and the rules are applied for a fixed
number of Jacobi sweeps: all SINRs of one sweep are evaluated from the
powers of the previous sweep, so the result is independent of user order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ZeroSinr
from .linkmodel import (
    PowerAllocation,
    ScenarioConfig,
    dl_sinr_finite,
    network_sinrs,
    pilot_overhead,
    ul_sinr_finite,
    uniform_power_allocation,
)

LINKS = ("dl", "ul", "both")


@dataclass(frozen=True)
class PcConfig:
    """Power-control targets and iteration settings.

    Targets are given either as linear SINRs or as per-user rates in bit/s
    (converted through the per-link capacity expression); mixing the two
    families is rejected.  ``mode`` selects the gradual-removal rule
    (``gradual``) or plain target tracking (``tracking``).
    """

    target_sinr_dl: float | None = None
    target_sinr_ul: float | None = None
    target_rate_dl: float | None = None
    target_rate_ul: float | None = None
    max_iterations: int = 10
    mode: str = "gradual"

    def __post_init__(self):
        if self.mode not in ("gradual", "tracking"):
            raise ConfigError(f"unknown power-control mode {self.mode!r}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        has_sinr = self.target_sinr_dl is not None or self.target_sinr_ul is not None
        has_rate = self.target_rate_dl is not None or self.target_rate_ul is not None
        if has_sinr and has_rate:
            raise ConfigError("supply either target SINRs or target rates, not both")
        if not has_sinr and not has_rate:
            raise ConfigError("power control needs a target SINR or target rate")
        for name in ("target_sinr_dl", "target_sinr_ul",
                     "target_rate_dl", "target_rate_ul"):
            value = getattr(self, name)
            if value is not None and value <= 0:
                raise ConfigError(f"{name} must be positive, got {value}")


def pc_config_from_db(target_sinr_dl_db=None, target_sinr_ul_db=None, **kwargs):
    """Build a :class:`PcConfig` from target SINRs in dB."""
    to_lin = lambda db: None if db is None else 10.0 ** (db / 10.0)
    return PcConfig(
        target_sinr_dl=to_lin(target_sinr_dl_db),
        target_sinr_ul=to_lin(target_sinr_ul_db),
        **kwargs,
    )


def target_sinr_from_rate(rate: float, xi: float, config: ScenarioConfig) -> float:
    """Invert the per-link rate expression: the SINR that yields ``rate``."""
    if rate < 0:
        raise ConfigError(f"target rate must be >= 0, got {rate}")
    per_link_hz = config.bandwidth_hz * pilot_overhead(config) * xi
    return float(2.0 ** (rate / per_link_hz) - 1.0)


def resolve_targets(pc: PcConfig, config: ScenarioConfig):
    """Linear (DL, UL) target SINRs; ``None`` for a link without a target."""
    target_dl, target_ul = pc.target_sinr_dl, pc.target_sinr_ul
    if pc.target_rate_dl is not None:
        target_dl = target_sinr_from_rate(pc.target_rate_dl, config.xi_dl, config)
    if pc.target_rate_ul is not None:
        target_ul = target_sinr_from_rate(pc.target_rate_ul, config.xi_ul, config)
    return target_dl, target_ul


# ---------------------------------------------------------------------------
# Update rules (scalar or elementwise on arrays)
# ---------------------------------------------------------------------------

def gradual_removal_update(target, interference, p_max):
    """Gradual-removal power update.

    Tracks ``target * interference`` while feasible; once the required
    power would exceed ``p_max`` the user backs off inversely instead of
    saturating.  Both branches meet continuously at the boundary and never
    exceed ``p_max``.
    """
    target = np.asarray(target, dtype=float)
    interference = np.asarray(interference, dtype=float)
    p_max = np.asarray(p_max, dtype=float)
    feasible = interference <= p_max / target
    out = np.where(
        feasible,
        target * interference,
        p_max**2 / (target * interference),
    )
    return float(out) if out.ndim == 0 else out


def target_tracking_update(target, interference, p_max):
    """Plain target tracking: ``min(target * interference, p_max)``."""
    out = np.minimum(np.asarray(target, float) * np.asarray(interference, float), p_max)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Interference measures (previous power / previous finite-antenna SINR)
# ---------------------------------------------------------------------------

def _pilot_of_user(assignment, cell, user):
    pilots = np.nonzero(assignment[cell] == user)[0]
    if pilots.size != 1:
        raise ConfigError(f"user {user} holds {pilots.size} pilots in cell {cell}")
    return int(pilots[0])


def dl_interference_measure(beta, powers, assignment, config, cell, user) -> float:
    """Effective DL interference seen by one user at the previous powers."""
    pilot = _pilot_of_user(assignment, cell, user)
    sinr = dl_sinr_finite(beta, powers, assignment, config, cell, pilot)
    if sinr == 0.0:
        raise ZeroSinr(f"zero DL SINR for cell {cell}, user {user}")
    return powers.dl[cell, user] / sinr


def ul_interference_measure(beta, powers, assignment, config, cell, user) -> float:
    """Effective UL interference seen by one user at the previous powers."""
    pilot = _pilot_of_user(assignment, cell, user)
    sinr = ul_sinr_finite(beta, powers, assignment, config, cell, pilot)
    if sinr == 0.0:
        raise ZeroSinr(f"zero UL SINR for cell {cell}, user {user}")
    return powers.ul[user, cell] / sinr


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def run_power_control(
    beta: np.ndarray,
    assignment: np.ndarray,
    config: ScenarioConfig,
    pc: PcConfig,
    link: str = "both",
) -> PowerAllocation:
    """Run the configured power control and return the final allocation.

    Ceilings are the uniform default powers, so control can only
    redistribute downward from the no-control baseline.  The returned
    allocation carries the per-sweep maximum relative power change in
    ``ul_rel_change`` / ``dl_rel_change`` as a convergence diagnostic.
    """
    if link not in LINKS:
        raise ConfigError(f"link must be one of {LINKS}, got {link!r}")
    target_dl, target_ul = resolve_targets(pc, config)
    do_dl = link in ("dl", "both")
    do_ul = link in ("ul", "both")
    if do_dl and target_dl is None:
        raise ConfigError("downlink power control requested without a DL target")
    if do_ul and target_ul is None:
        raise ConfigError("uplink power control requested without an UL target")

    update = gradual_removal_update if pc.mode == "gradual" else target_tracking_update
    powers = uniform_power_allocation(config)
    if do_dl:
        powers.dl = 0.5 * powers.dl_max
    if do_ul:
        powers.ul = 0.5 * powers.ul_max

    dl_max_pilot = np.take_along_axis(powers.dl_max, assignment, axis=1)
    ul_max_pilot = np.take_along_axis(powers.ul_max.T, assignment, axis=1)
    dl_trace, ul_trace = [], []

    for _ in range(pc.max_iterations):
        ul_sinr, dl_sinr = network_sinrs(beta, powers, assignment, config)
        if do_dl:
            if np.any(dl_sinr <= 0.0):
                raise ZeroSinr("downlink SINR vanished during power control")
            dl_pilot = np.take_along_axis(powers.dl, assignment, axis=1)
            new_pilot = update(target_dl, dl_pilot / dl_sinr, dl_max_pilot)
            dl_trace.append(float(np.max(np.abs(new_pilot - dl_pilot) / dl_pilot)))
            new_dl = powers.dl.copy()
            np.put_along_axis(new_dl, assignment, new_pilot, axis=1)
        if do_ul:
            if np.any(ul_sinr <= 0.0):
                raise ZeroSinr("uplink SINR vanished during power control")
            ul_pilot = np.take_along_axis(powers.ul.T, assignment, axis=1)
            new_pilot = update(target_ul, ul_pilot / ul_sinr, ul_max_pilot)
            ul_trace.append(float(np.max(np.abs(new_pilot - ul_pilot) / ul_pilot)))
            new_ul = powers.ul.T.copy()
            np.put_along_axis(new_ul, assignment, new_pilot, axis=1)
        if do_dl:
            powers.dl = new_dl
        if do_ul:
            powers.ul = new_ul.T

    powers.dl_rel_change = np.array(dl_trace) if dl_trace else None
    powers.ul_rel_change = np.array(ul_trace) if ul_trace else None
    return powers
