"""Score-network families. Importing this package registers the built-in kinds."""

from .conv import ConvUnetMiniFamily
from .impulse import ImpulseResponse, asymmetry, impulse_response, symmetrize_params
from .linear import LinearFamily
from .mlp import MlpFamily
from .token import TokenLinearFamily, patch_permutation

__all__ = [
    "ConvUnetMiniFamily",
    "ImpulseResponse",
    "LinearFamily",
    "MlpFamily",
    "TokenLinearFamily",
    "asymmetry",
    "impulse_response",
    "patch_permutation",
    "symmetrize_params",
]
