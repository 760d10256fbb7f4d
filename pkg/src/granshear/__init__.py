"""Sheared inelastic Maxwell gas toolbox.

Three mutually validating views of the same dynamics: exact second-moment
theory (moments), stochastic particles (dsmc), and characteristic-function
evolution with self-similar profiles (fourier), all driven by one angular
kernel model (kernel).
"""

from .kernel import KernelConstants, KernelModel, derive_constants, lambda_p, lambda_root, sphere_moment

__version__ = "0.1.0"

__all__ = [
    "KernelConstants",
    "KernelModel",
    "derive_constants",
    "lambda_p",
    "lambda_root",
    "sphere_moment",
    "__version__",
]
