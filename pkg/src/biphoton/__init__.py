"""Temporal interference, entanglement and heralded shaping of photon pairs at a beam splitter."""

__version__ = "0.1.0"

from .beamsplitter import (
    BeamSplitter,
    Outcome,
    OutcomeProbabilities,
    TwoPhotonAmplitude,
    joint_amplitude,
    outcome_probabilities,
    probabilities_from_overlap,
)
from .entanglement import (
    EntanglementReport,
    SchmidtDecomposition,
    entropy_surface,
    mode_overlaps,
    schmidt_analytic,
    schmidt_numeric,
    von_neumann_entropy,
)
from .errors import (
    BiphotonError,
    ComputationError,
    CoverageError,
    CoverageWarning,
    DegenerateOutcomeError,
    ImpossibleHeraldError,
    NoFeasibleStartError,
    NormalizationError,
)
from .shaping import (
    HeraldResult,
    HeraldSpec,
    ShapingProblem,
    ShapingResult,
    ed_to_edsine_closed_form,
    herald_shape,
    herald_windowed,
    optimize_shaping,
    shaping_fidelity,
)
from .waveforms import (
    ExpDecay,
    ExpDecaySine,
    Gaussian,
    Sampled,
    TemporalShape,
    TimeGrid,
    captured_norm,
    evaluate,
    overlap,
    sample,
    shape_from_dict,
)
