"""Numerical engine: iteration, membership, and ray continuation.

The two families handled are the quadratic polynomials z^2 + c and the
rational maps a/(z^2 + 2z) with superattracting 2-cycle {0, infinity}.
"""

from .maps import (  # noqa: F401
    INF,
    EscapeResult,
    basilica_map,
    boettcher_value,
    from_basilica,
    in_m2,
    in_mandelbrot,
    misiurewicz_solve,
    quadratic_map,
    rational_map,
    to_basilica,
)
from .rays import (  # noqa: F401
    RayTrace,
    equipotential_arc,
    trace_dynamic_ray,
    trace_dynamic_rays_batch,
    trace_dynamical_leaf,
    trace_parameter_ray,
)
from .bubbles import (  # noqa: F401
    BubbleRay,
    alpha_fixed_point,
    bubble_boettcher,
    trace_bubble_ray,
    trace_internal_ray,
)
