"""Cavity-charged qubit batteries: exact collective dynamics, ergotropy, scaling."""

from .hilbert import (
    CompositeBasis,
    StateVector,
    annihilation_op,
    collective_spin_ops,
    full_qubit_op,
    symmetric_embedding,
    tensor,
)
from .states import (
    ChargerStateSpec,
    TruncationReport,
    battery_ground,
    choose_cutoff,
    prepare_charger,
)
from .dynamics import (
    EnergyRecord,
    ModelSpec,
    Propagator,
    build_hamiltonian,
    evolve,
    joint_initial_state,
    local_energies,
    make_block_propagator,
    make_propagator,
    occupation_energies,
)
from .ergotropy import (
    DensityMatrix,
    ergotropy,
    flat_bound_check,
    majorizes,
    passive_state,
    reduce_to_battery,
    reduce_to_charger,
    reduce_to_subset,
)
from .analysis import (
    ChargingSystem,
    GridSpec,
    SweepResult,
    TimeTrace,
    build_system,
    dicke_sweep,
    hp_closed_form,
    optimal_time,
    subset_curve,
    sweep_over_N,
    trace_protocol,
)

__version__ = "0.1.0"
