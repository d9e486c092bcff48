"""Streaming unitary (mixed) Schur sampling with brute-force oracles."""
from .combinatorics import (Staircase, add_box, allowed_staircases, dim_p, dim_q, dual_partition,
                            enumerate_gt_patterns, enumerate_paths, enumerate_staircases,
                            interlaces, remove_box, shift_staircase, validate_staircase)
from .wigner import ReducedWignerMatrix, reduced_wigner_matrix, t_cg, t_dcg
from .cg import CGOutput, SchurRegister, cg_apply, cg_matrix, irrep_action
from .sampler import (Ensemble, QuditSource, SamplingOutcome, exact_distribution,
                      marginal_staircase_distribution, sample_run, sample_shots)
from .oracle import (FullTransform, ProjectorEstimate, build_full_transform,
                     compare_sampler_oracle, haar_projector_estimate, sn_isotypic_projector,
                     verify_intertwiner, walled_brauer_generator_action)
from .cost import CostRecord, RunCounters, cg_cost, measured_counts, pipeline_cost

__version__ = "0.1.0"
