"""Exponential Radon transform toolkit: forward models, analytical inversions,
partial-data reconstruction, fan-beam support, and projection-noise analysis."""

from .core import (
    Attenuation,
    AngularSubset,
    Ellipse,
    Image,
    ImageGrid,
    Phantom,
    Sinogram,
    SinogramGrid,
    backproject_weighted,
    ellipse_chord,
    ert_line_integrals,
    image_err,
    make_shepp_logan,
    project_analytic,
    project_discrete,
    set_threads,
)
from .errors import CoverageError, DivergenceError, NearRadialError
from .fbp import FbpConfig, central_difference, fbp_derivative_hilbert, fbp_reconstruct

__version__ = "0.1.0"
