"""Support-function toolkit for convex bodies in R^3.

Bodies are represented by real spherical-harmonic coefficients of their
support function h(u) = max_{y in K} <y, u>. The package computes widths,
central symmetrals, Minkowski sums, convexity certificates, boundary meshes
via the inverse Gauss map, brightness (projected shadow area) profiles via
the cosine transform of the curvature determinant, and runs a rigidity
probe: a brightness-variance minimizer over constant-width families.
"""

from .sphere import (
    SphericalGrid, HarmonicBasis, Jet2,
    make_grid, make_basis, basis_index, integrate, jet, evaluate,
)
from .body import (
    SupportFunction, ConvexityCertificate, NotConvexError,
    width, central_symmetral, odd_part, minkowski_sum, certify_convex,
    volume, homothety_fit, body_to_spec, body_from_spec, save_body, load_body,
)
from .boundary import (
    BoundaryField, BodyMesh,
    inverse_gauss, even_phi_check, export_mesh, mesh_volume, export_obj,
)
from .brightness import (
    BrightnessProfile,
    cosine_transform, cosine_multipliers, brightness_profile, mesh_shadow,
    proportional_brightness_residual, profile_to_csv,
)
from .generators import (
    BodyRecipe,
    ball, ellipsoid, constant_width_body, random_convex, random_odd,
    resolve_recipe,
)
from .lab import (
    ParityReport, OptimizerTrace,
    sigma_form, parity_decomposition_check, det_p_identity_residual,
    odd_sign_obstruction, minimize_brightness_variance, trace_to_csv,
    trace_body,
)

__version__ = "0.1.0"
