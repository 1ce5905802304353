"""Qubit collision models with thermal ancillas and the discrete BLP non-Markovianity measure."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DensityMatrix,
    UnitaryMatrix,
    conjugate,
    embed_two_qubit,
    hermitian_eigenvalues,
    partial_trace,
    tensor,
)
from .errors import CapacityError, ConfigError, DomainError, IntegrityError  # noqa: E402
from .gates import ThermalSpec, optimal_pair, partial_swap, thermal_state  # noqa: E402
from .measures import (  # noqa: E402
    NmResult,
    ThresholdResult,
    blp_measure,
    coherence,
    detect_revivals,
    find_threshold,
    trace_distance,
)
from .models import (  # noqa: E402
    DirectConfig,
    IndirectConfig,
    StepRecord,
    StopPolicy,
    Trajectory,
    full_chain_oracle,
    run_model,
    step_direct,
    step_indirect,
)
