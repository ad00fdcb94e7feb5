"""Geodesic and forced motion of one-dimensional continua on the space of embeddings."""

__version__ = "0.1.0"

from .connection import (
    KnotField,
    PathOnQ,
    Segment,
    acceleration,
    christoffel,
    covariant_derivative_along,
    geodesic_residual,
    one_sided_velocities,
    parallel_transport,
    velocity,
)
from .dynamics import ForceModel, State, Trajectory, rhs, simulate, step
from .errors import EmbeddingError, GridMismatchError, SingularStateError, ValidationError
from .grid import (
    BodyGrid,
    Configuration,
    ScalarField,
    Section,
    diff_x,
    integrate,
    is_embedding,
    make_grid,
)
from .metric import (
    CovectorDensity,
    flat,
    force_pairing,
    kinetic,
    metric,
    path_energy,
    sharp,
    volume_density,
)
from .variation import (
    Variation,
    dE_ds_fd,
    first_variation_rhs,
    make_variation,
    motion_residual,
    variational_field,
)
