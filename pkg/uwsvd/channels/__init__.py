from uwsvd.channels.dump import read_channel_dump, write_channel_dump
from uwsvd.channels.geometry import ArrayKind, Geometry, build_geometry, pairwise_distances
from uwsvd.channels.models import (
    ChannelGenerator,
    ChannelModelId,
    ChannelRealization,
    LosFieldParams,
    PropagationParams,
    add_estimation_error,
    apply_kronecker,
    exp_corr_matrix,
    gen_iid_rayleigh,
    gen_model1,
    gen_model2,
    gen_model3,
    gen_model4,
    mu_from_rho,
    normalize_per_user,
)

__all__ = [
    "ArrayKind",
    "ChannelGenerator",
    "ChannelModelId",
    "ChannelRealization",
    "Geometry",
    "LosFieldParams",
    "PropagationParams",
    "add_estimation_error",
    "apply_kronecker",
    "build_geometry",
    "exp_corr_matrix",
    "gen_iid_rayleigh",
    "gen_model1",
    "gen_model2",
    "gen_model3",
    "gen_model4",
    "mu_from_rho",
    "normalize_per_user",
    "pairwise_distances",
    "read_channel_dump",
    "write_channel_dump",
]
