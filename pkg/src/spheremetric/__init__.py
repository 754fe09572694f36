"""Geometry-aware fidelity metrics for spherical (360 degree) images.

FID and OmniFID compare two collections of equirectangular images through
deep features of the whole image or of its cubemap faces; the
Discontinuity Score measures how visible the wrap-around seam is.
"""
__version__ = "0.1.0"

from .corruption import (  # noqa: E402
    FovReductionConfig,
    apply_corruption,
    crop_seam,
    gaussian_blur,
    gaussian_noise,
    reduce_vertical_fov,
    salt_pepper,
)
from .discontinuity import DsConfig, ds_dataset, ds_image  # noqa: E402
from .features import MockExtractor, OnnxExtractor, make_extractor  # noqa: E402
from .frechet import (  # noqa: E402
    GaussianStats,
    ViewGroup,
    estimate_gaussian,
    fid,
    frechet_distance,
    omnifid,
    trace_sqrt_product,
)
from .projection import (  # noqa: E402
    CubemapSet,
    Direction,
    FaceLabel,
    cubemap_to_equirect,
    equirect_to_cubemap,
    resize,
    spherical_to_face,
)
