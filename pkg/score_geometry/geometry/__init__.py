"""Average geometry estimation, SAD extraction and analytic geometry formulas."""

from .analytic import ANALYTIC_KINDS, analytic_geometry
from .estimate import GeometryEstimate, chunk_size, estimate_geometry
from .export import encode_pgm, read_geometry_matrix, sad_strip, to_gray, write_geometry, write_sad_strip
from .probe import PROBE_KINDS, ProbeDistribution, schedule_sigma_levels
from .sads import SadBasis, clamp_psd, cluster_labels, distinct_eigenvalue_count, extract_sads, markov_bound

__all__ = [
    "ANALYTIC_KINDS",
    "PROBE_KINDS",
    "GeometryEstimate",
    "ProbeDistribution",
    "SadBasis",
    "analytic_geometry",
    "chunk_size",
    "clamp_psd",
    "cluster_labels",
    "distinct_eigenvalue_count",
    "encode_pgm",
    "estimate_geometry",
    "extract_sads",
    "markov_bound",
    "read_geometry_matrix",
    "sad_strip",
    "schedule_sigma_levels",
    "to_gray",
    "write_geometry",
    "write_sad_strip",
]
