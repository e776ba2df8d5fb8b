"""Impulse-response probe for spatial asymmetry of image families."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core import NetworkFamily, ParamSet
from ..diffusion.schedule import default_sigma_range, mid_sigma
from ..errors import PreconditionError


@dataclass(frozen=True)
class ImpulseResponse:
    response: np.ndarray
    asymmetry_score: float
    location: Tuple[int, int]
    sigma: float


def symmetrize_params(family: NetworkFamily, params: ParamSet) -> ParamSet:
    """Flip-symmetrize spatial kernels; families without kernels are returned unchanged."""
    symmetrize = getattr(family, "symmetrize", None)
    return symmetrize(params) if symmetrize is not None else params


def asymmetry(image: np.ndarray) -> float:
    """||r - flip_h r|| + ||r - flip_v r|| over the two trailing (spatial) axes."""
    return float(np.linalg.norm(image - image[..., :, ::-1]) + np.linalg.norm(image - image[..., ::-1, :]))


def impulse_response(
    family: NetworkFamily,
    params: ParamSet,
    impulse_location: Optional[Tuple[int, int]] = None,
    sigma: Optional[float] = None,
    symmetrize: bool = True,
) -> ImpulseResponse:
    """
    Forward a unit impulse through an image family.

    Args:
        family: Family with an image layout
        params: Parameter draw
        impulse_location: (row, col); defaults to the grid centre
        sigma: Noise level; defaults to the geometric midpoint of the schedule range
        symmetrize: Flip-symmetrize kernels before probing

    Returns:
        ImpulseResponse with a (channels, height, width) response image

    Raises:
        PreconditionError: If the family has no image layout
    """
    if family.image_shape is None:
        raise PreconditionError(f"Family {family.get_key()} has no image layout")
    channels, height, width = family.image_shape
    row, col = impulse_location if impulse_location is not None else (height // 2, width // 2)
    if not (0 <= row < height and 0 <= col < width):
        raise PreconditionError(f"Impulse location {(row, col)} outside {height}x{width} grid")
    if sigma is None:
        sigma = mid_sigma(*default_sigma_range())

    impulse = np.zeros((channels, height, width))
    impulse[:, row, col] = 1.0
    probe_params = symmetrize_params(family, params) if symmetrize else params
    response = family.forward(probe_params, impulse.ravel(), sigma).reshape(channels, height, width)
    return ImpulseResponse(response, asymmetry(response), (row, col), float(sigma))
