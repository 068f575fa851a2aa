"""Finite-dimensional workbench for rank-one perturbations, Clark measures and cyclicity."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DecompositionError,
    DegenerateElementError,
    InvariantError,
    PoleError,
    PreconditionError,
    RankOneLabError,
    RepresentationError,
    RootFindingError,
    VerificationError,
)
from .operators import (  # noqa: E402
    DEFAULT_TOLS,
    HermitianOperator,
    SpectralDecomposition,
    Tolerances,
    UnitaryOperator,
    decompose,
)
from .measures import (  # noqa: E402
    AtomicMeasure,
    cauchy_transform,
    disk_cauchy_transform,
    herglotz_transform,
    privalov_jump,
)
from .spectral import (  # noqa: E402
    CyclicityReport,
    RankOneFamily,
    aronszajn_krein_residual,
    cyclicity_sweep,
    is_cyclic,
    perturb_sa,
    perturb_unitary,
    spectral_measure,
)
from .clark import FiniteBlaschke, clark_measure, model_perturbation_matrix, spectral_average  # noqa: E402
from .hermitian import (  # noqa: E402
    ComplexPolynomial,
    hermitian_from_roots,
    is_self_reciprocal,
    level_set_theorem_check,
    pw_euler_decompose,
    tilde_transform,
)
from .anderson import AndersonConfig, LatticeBox, PotentialDistribution, cyclicity_mc, discrete_laplacian  # noqa: E402
