"""Heat kernels, diffusion means and smeariness diagnostics on spheres."""

from ._diffmean import (
    CutLocusError,
    DomainError,
    Error,
    NumericalError,
    TruncationError,
    brownian_sample,
    circle_heat,
    classify_smeariness,
    cli,
    delta_bound,
    diffusion_mean,
    draw,
    estimate_joint,
    estimate_t,
    euclidean_diffusion_mean,
    euclidean_heat,
    frechet_mean,
    gegenbauer,
    graph_likelihood,
    graph_means,
    hemisphere_profile,
    hyperbolic3_heat,
    lambda_bound,
    log_likelihood,
    sigma_bound,
    small_t_gap,
    sphere_heat,
    sphere_heat_dt,
    two_pole_profile,
)

__all__ = [
    "CutLocusError",
    "DomainError",
    "Error",
    "NumericalError",
    "TruncationError",
    "brownian_sample",
    "circle_heat",
    "classify_smeariness",
    "cli",
    "delta_bound",
    "diffusion_mean",
    "draw",
    "estimate_joint",
    "estimate_t",
    "euclidean_diffusion_mean",
    "euclidean_heat",
    "frechet_mean",
    "gegenbauer",
    "graph_likelihood",
    "graph_means",
    "hemisphere_profile",
    "hyperbolic3_heat",
    "lambda_bound",
    "log_likelihood",
    "sigma_bound",
    "small_t_gap",
    "sphere_heat",
    "sphere_heat_dt",
    "two_pole_profile",
]

__version__ = "0.1.0"
