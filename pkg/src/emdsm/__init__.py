"""Time-harmonic electromagnetic scattering from penetrable media and direct
sampling reconstruction of scatterer supports from near-field data."""

from .em_core import (
    ContrastField,
    IncidentPlaneWave,
    Shape,
    WaveContext,
    contrast_eval,
    green_scalar,
    green_tensor,
    im_green_tensor,
    im_trace_green_tensor,
    incident_field,
)
from .forward import (
    ForwardSolver,
    ForwardSystem,
    InducedCurrentField,
    SolverSpec,
    VolumeGrid,
    assemble_p_operator,
    build_forward_system,
    build_grid,
    diagonal_self_term,
    solve_current,
)
from .measurement import (
    FieldSamples,
    MeasurementSurface,
    add_noise,
    circle_surface,
    cube_surface,
    l2_inner_product,
    l2_norm,
    read_field_samples_csv,
    synthesize_scattered_field,
    write_field_samples_csv,
)
from .dsm import (
    IndexGrid,
    SamplingGrid,
    component,
    compute_index_grid,
    cross_product_map,
    diagonal_sum,
    find_local_maxima,
    index_combined,
    index_psi,
    polarization,
    polarization_sum,
    probe_field,
    sampling_grid,
    verify_boundary_lemma,
    verify_correlation_approx,
    write_index_csv,
    write_index_pgm,
)
from .harness import (
    ExperimentConfig,
    LocalizationReport,
    load_config,
    preset,
    run_experiment,
    verify,
)

__version__ = "0.1.0"
