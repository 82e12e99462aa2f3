"""Simulator for element-reconfigurable (pattern-selectable) antenna arrays:
channel models, joint phase/state beamforming, and Monte Carlo sweeps."""

from .patterns import (
    Angle,
    CosinePowerPattern,
    IsotropicPattern,
    PatternDictionary,
    TabulatedPattern,
    default_dictionary,
    dictionary_vector,
    eval_gain,
    isotropic_dictionary,
    load_tabulated_csv,
    normalize_pattern,
)
from .geometry import ArrayGeometry, arv, fraunhofer_distance, steering_phase
from .channel import (
    ChannelScene,
    EmChannel,
    NearLosTable,
    PathFar,
    ScattererNear,
    assemble_er,
    build_conventional_far,
    build_em_far,
    build_em_near,
    load_scene,
    per_pair_los_params,
    save_scene,
)
from .beamform import (
    AlternatingBeamformer,
    BeamformerSolution,
    StateSelection,
    exhaustive_flops,
    exhaustive_select,
    greedy_flops,
    greedy_select,
    spectral_efficiency,
    unit_modulus,
    update_phase,
)
from .scenario import (
    ExperimentConfig,
    SweepResult,
    beampattern_grid,
    emit_csv,
    greedy_vs_exhaustive,
    near_field_sweep,
    run_sweep,
    sample_scene,
)

__version__ = "0.1.0"
