"""Hexagonal network layout, user drops and long-term fading generation.

Conventions used throughout the package:

* The layout is the 1-ring topology: a central cell at the origin plus its
  6 nearest neighbours at angles 0, 60, ..., 300 degrees and distance
  ``sqrt(3) * radius``.  ``radius`` is the hexagon circumradius (centre to
  vertex), so the cells tile the plane exactly.
* Long-term fading is returned as a dense tensor ``beta`` of shape
  ``(L, K, L)`` with ``beta[i, k, j]`` the linear gain between base
  station ``i`` and user ``k`` of cell ``j``.  The gain is normalized so
  that ``beta == 1`` at distance ``radius`` without shadowing.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDistance, UnsupportedTopology

# Inradius of a hexagon with unit circumradius.
_INRADIUS = np.sqrt(3.0) / 2.0

# Unit normals of the three edge-direction axes of the hexagon (edges face
# the neighbours at 0, 60 and 120 degrees; the other three follow by symmetry).
_EDGE_NORMALS = np.array(
    [
        [1.0, 0.0],
        [0.5, np.sqrt(3.0) / 2.0],
        [-0.5, np.sqrt(3.0) / 2.0],
    ]
)


@dataclass(frozen=True)
class NetworkLayout:
    """Cell centres of the 1-ring hexagonal layout.

    Attributes
    ----------
    cell_centers : ndarray, shape (L, 2)
        BS positions in meters; row 0 is the central cell at the origin.
    cell_radius : float
        Hexagon circumradius in meters.
    """

    cell_centers: np.ndarray
    cell_radius: float

    @property
    def num_cells(self) -> int:
        return self.cell_centers.shape[0]


@dataclass(frozen=True)
class UserDrop:
    """User positions of one Monte-Carlo drop.

    Attributes
    ----------
    positions : ndarray, shape (L, K, 2)
        ``positions[j, k]`` is the location of user ``k`` of cell ``j``.
    """

    positions: np.ndarray

    @property
    def users_per_cell(self) -> int:
        return self.positions.shape[1]


def build_hex_layout(num_cells: int, radius: float) -> NetworkLayout:
    """Build the central cell plus its 6 hexagonal neighbours.

    Only ``num_cells == 7`` (the 1-ring) is supported; anything else raises
    :class:`UnsupportedTopology`.  Neighbour ``n`` (1-based) sits at angle
    ``60 * (n - 1)`` degrees and distance ``sqrt(3) * radius``.
    """
    if num_cells != 7:
        raise UnsupportedTopology(
            f"only the 7-cell 1-ring layout is supported, got {num_cells}"
        )
    if radius <= 0:
        raise ConfigError(f"cell radius must be positive, got {radius}")
    angles = np.deg2rad(60.0 * np.arange(6))
    ring = np.sqrt(3.0) * radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    centers = np.vstack([np.zeros((1, 2)), ring])
    return NetworkLayout(cell_centers=centers, cell_radius=float(radius))


def hexagon_contains(points: np.ndarray, radius: float) -> np.ndarray:
    """Membership test for the origin-centred hexagon (circumradius ``radius``).

    ``points`` has shape (..., 2); returns a boolean array of shape (...).
    """
    proj = np.abs(points @ _EDGE_NORMALS.T)
    return proj.max(axis=-1) <= _INRADIUS * radius


def drop_users(
    layout: NetworkLayout,
    users_per_cell: int,
    exclusion_radius: float,
    rng: np.random.Generator,
) -> UserDrop:
    """Drop users uniformly over each hexagon minus the BS exclusion disc.

    Positions are drawn by rejection sampling from the hexagon bounding box.
    The acceptance probability for the default geometry is about 0.74, so
    the loop terminates quickly.
    """
    if users_per_cell < 1:
        raise ConfigError(f"users_per_cell must be >= 1, got {users_per_cell}")
    if not exclusion_radius < layout.cell_radius:
        raise ConfigError(
            "exclusion radius must be smaller than the cell radius "
            f"({exclusion_radius} >= {layout.cell_radius})"
        )
    radius = layout.cell_radius
    num_cells = layout.num_cells
    total = num_cells * users_per_cell

    accepted = np.empty((total, 2))
    filled = 0
    while filled < total:
        # Draw in batches; the bounding box is [-inradius, inradius] x [-R, R].
        n_draw = max(2 * (total - filled), 64)
        cand = rng.uniform(-1.0, 1.0, size=(n_draw, 2))
        cand[:, 0] *= _INRADIUS * radius
        cand[:, 1] *= radius
        ok = hexagon_contains(cand, radius)
        ok &= np.hypot(cand[:, 0], cand[:, 1]) >= exclusion_radius
        good = cand[ok]
        take = min(good.shape[0], total - filled)
        accepted[filled : filled + take] = good[:take]
        filled += take

    local = accepted.reshape(num_cells, users_per_cell, 2)
    positions = local + layout.cell_centers[:, None, :]
    return UserDrop(positions=positions)


def compute_large_scale(
    layout: NetworkLayout,
    drop: UserDrop,
    exponent: float,
    shadow_sigma_db: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Long-term fading tensor: path loss plus i.i.d. log-normal shadowing.

    ``beta[i, k, j] = z * (d / R) ** -exponent`` where ``d`` is the distance
    from BS ``i`` to user ``k`` of cell ``j``, ``R`` the cell radius, and
    ``z = 10 ** (x / 10)`` with ``x ~ Normal(0, shadow_sigma_db**2)`` drawn
    independently for every (BS, user) link.

    Returns the ``(L, K, L)`` tensor.
    """
    if exponent <= 2:
        raise ConfigError(f"path loss exponent must exceed 2, got {exponent}")
    if shadow_sigma_db < 0:
        raise ConfigError(f"shadowing sigma must be >= 0, got {shadow_sigma_db}")

    # distances[i, k, j]: BS i to user k of cell j
    delta = drop.positions[None, :, :, :] - layout.cell_centers[:, None, None, :]
    distances = np.hypot(delta[..., 0], delta[..., 1]).transpose(0, 2, 1)
    if np.any(distances == 0.0):
        raise DegenerateDistance("a user coincides with a base station")

    shadow_db = rng.normal(0.0, shadow_sigma_db, size=distances.shape)
    beta = 10.0 ** (shadow_db / 10.0) * (distances / layout.cell_radius) ** (-exponent)
    return beta
