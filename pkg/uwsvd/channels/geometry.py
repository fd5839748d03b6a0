from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from scipy.constants import speed_of_light
from scipy.spatial.distance import cdist

from uwsvd.errors import GeometryError

FloatArray = npt.NDArray[np.float64]


class ArrayKind(str, Enum):
    ULA = "ula"
    UPA = "upa"


@dataclass(frozen=True)
class Geometry:
    """Service array and user antenna coordinates in metres.

    The service array is centred on the origin in the x/z plane; users sit on a
    line parallel to the x axis at y = perpendicular distance.
    """

    service_positions: FloatArray
    user_positions: Tuple[FloatArray, ...]
    carrier_frequency: float

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.carrier_frequency

    @property
    def m(self) -> int:
        return self.service_positions.shape[0]

    @property
    def partition(self) -> List[int]:
        return [p.shape[0] for p in self.user_positions]

    @property
    def all_user_positions(self) -> FloatArray:
        return np.vstack(self.user_positions)

    def link_distances(self) -> FloatArray:
        """d[m, n]: service antenna m to user antenna n."""
        return pairwise_distances(self.service_positions, self.all_user_positions)


def pairwise_distances(p: FloatArray, q: Optional[FloatArray] = None) -> FloatArray:
    return cdist(p, p if q is None else q)


def _line(count: int, spacing: float) -> FloatArray:
    return (np.arange(count) - (count - 1) / 2.0) * spacing


def build_geometry(
    array_kind: ArrayKind,
    m: int,
    k_users: int,
    n_ue: int,
    frequency: float,
    user_line_length: float = 30.0,
    perpendicular_distance: float = 15.0,
    upa_shape: Optional[Tuple[int, int]] = None,
) -> Geometry:
    if m < 1 or k_users < 1 or n_ue < 1:
        raise GeometryError("m, k_users and n_ue must be positive")
    if m < k_users * n_ue:
        raise GeometryError(f"m={m} is smaller than the {k_users * n_ue} user antennas")
    if frequency <= 0:
        raise GeometryError("carrier frequency must be positive")
    if perpendicular_distance <= 0 or user_line_length < 0:
        raise GeometryError("user line must sit at a positive distance with non-negative length")

    half_wave = speed_of_light / frequency / 2.0
    kind = ArrayKind(array_kind)
    if kind is ArrayKind.ULA:
        service = np.column_stack([_line(m, half_wave), np.zeros(m), np.zeros(m)])
    else:
        if upa_shape is None:
            raise GeometryError("UPA geometry needs (rows, cols)")
        rows, cols = upa_shape
        if rows * cols != m:
            raise GeometryError(f"UPA {rows}x{cols} does not hold m={m} antennas")
        xs, zs = np.meshgrid(_line(cols, half_wave), _line(rows, half_wave))
        service = np.column_stack([xs.ravel(), np.zeros(m), zs.ravel()])

    if k_users == 1:
        centres = np.zeros(1)
    else:
        centres = np.linspace(-user_line_length / 2.0, user_line_length / 2.0, k_users)
    offsets = _line(n_ue, half_wave)
    users = tuple(
        np.column_stack([c + offsets, np.full(n_ue, perpendicular_distance), np.zeros(n_ue)]) for c in centres
    )
    return Geometry(service_positions=service, user_positions=users, carrier_frequency=frequency)
