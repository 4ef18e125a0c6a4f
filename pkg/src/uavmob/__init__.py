"""Stochastic hover-position models for UAVs.

Steady-state distance laws under symmetric and per-axis control, an
Euler-Maruyama ensemble engine, and link connectivity under Rayleigh fading.
"""

__version__ = "0.1.0"

from .models import (  # noqa: E402
    AsymmetricModel,
    AxisParams,
    Custom,
    GeneralAsymmetricModel,
    Lambdas,
    OnOff,
    OU,
    PiecewiseLinear,
    SymmetricModel,
    lambda_from_axis,
    lambdas_from_model,
    lyapunov_solve,
)
from .sde import Ensemble, SimConfig, empirical_cdf, sample_steady_state  # noqa: E402
from .steady_state import (  # noqa: E402
    PartialSymmetry,
    QuadraticFormSeries,
    cdf_oc,
    cdf_ou,
    distribution_for,
    partial_symmetry_cdf,
    quadratic_form_cdf,
    radial_cdf_general,
)
from .connectivity import ConnectivitySpec, pconn_numeric  # noqa: E402
