"""Simulation of spectrally engineered type-II down-conversion sources in KTP waveguides."""
from .analysis import (
    GridPolicy,
    PurityMap,
    SchmidtSpectrum,
    g2_prediction_table,
    k_from_jsi,
    purity_map,
    schmidt_decompose,
)
from .dispersion import (
    IDLER,
    PUMP,
    SIGNAL,
    CalibrationAnchors,
    DispersionCorrection,
    DispersionModel,
    Polarization,
    SellmeierModel,
    calibrate,
    calibrated_model,
    group_velocity,
    phase_mismatch,
    refractive_index,
    solve_pm_curve,
)
from .errors import (
    CalibrationError,
    CalibrationWarning,
    ConfigError,
    DegenerateStateError,
    DomainError,
    NumericalError,
    PdcSimError,
    SpecError,
)
from .jsa import (
    JointSpectralAmplitude,
    LinearProfile,
    PhasematchingSpec,
    RandomWalkProfile,
    SinusoidalProfile,
    apply_filters,
    assemble_jsa,
    marginals,
    phasematching_matrix,
    source_jsa,
)
from .measurement import (
    DetectionChain,
    TofSpectrometer,
    efficiency_budget,
    klyshko,
    mc_g2,
    mean_photon,
    simulate_jsi_measurement,
    tof_resolution,
    waveguide_transmission,
)
from .spectra import (
    FrequencyBinsPump,
    FrequencyGrid,
    GaussianPump,
    HermiteGaussPump,
    RectFilter,
    SuperGaussianFilter,
    discretize_to_shaper,
    filter_transmission,
    pump_amplitude,
)
