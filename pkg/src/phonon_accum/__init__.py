"""Unconditional accumulation of phonon nonclassicality by repeated sideband pulses."""
from .asymptotics import asymptotic_distribution, asymptotic_report, fixed_point_set, pulse_area_for_target
from .dynamics import (
    IterationTrace,
    StepParams,
    exact_thermalization_oracle,
    full_step,
    ideal_step,
    iterate,
    thermalization_map,
)
from .entanglement import entanglement_potential, log_negativity
from .errors import (
    ConfigError,
    DomainError,
    FitError,
    TruncationError,
    UndefinedMetricError,
    ValidityError,
)
from .fock import (
    PhononDistribution,
    TruncationPolicy,
    fock_state,
    mean_phonon,
    poisson_distribution,
    thermal_cutoff,
    thermal_distribution,
)
from .metrics import fano_factor, klyshko, wigner_origin, wigner_radial
from .qng import QNGConfig, qng_hierarchy, qng_witness
from .report import WitnessReport, full_report
from .tomography import DecayModel, RabiTrace, fit_distribution, monte_carlo_uncertainty, synthesize_rabi

__version__ = "0.1.0"
