"""Exchangeable partitions generated by Lambda-coalescents with freeze."""
from __future__ import annotations

from coalfreeze.partitions import (
    Composition,
    EppfTable,
    IntegerPartition,
    PartiallyFrozenPartition,
    SetPartition,
    check_addition_rule,
    enumerate_set_partitions,
    restrict,
    shape,
)
from coalfreeze.measures import FreezeMeasure, lambda_rate, mu_moment, phi, phi_total
from coalfreeze.decrement import (
    DecrementMatrix,
    PhiLadder,
    check_consistency,
    extend_backward,
    from_measure,
    phi_from_sequence,
    recover_phi_ladder,
    regenerative_from_measure,
)
from coalfreeze.eppf import (
    ewens_eppf,
    mohle_eppf,
    recover_decrement,
    regenerative_eppf,
    regenerative_eppf_explicit,
    symbolic_mohle,
    symbolic_regenerative,
)
from coalfreeze.chains import (
    EmpiricalEppf,
    RngStream,
    check_jump_consistency,
    fm_estimate_eppf,
    fm_final_law,
    fm_one_step_law,
    fm_run,
    fm_step,
    sa_stationary,
    sa_step,
    sa_transition_matrix,
)
from coalfreeze.coalescent import (
    Event,
    OrderedPartition,
    Trajectory,
    age_order,
    coalescent_estimate_eppf,
    freezing_times,
    paintbox_estimate,
    simulate,
    simulate_coupled,
    singleton_report,
)

__version__ = "0.1.0"
