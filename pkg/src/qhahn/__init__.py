"""Integrable (q, mu, nu) chipping model: exact tools and simulation."""

__version__ = "0.1.0"

from .hopping import ModelParams, ParameterError, derive_params, phi  # noqa: E402

__all__ = ["ModelParams", "ParameterError", "derive_params", "phi", "__version__"]
