"""Constrained refinement of concept-embedding dictionaries.

Projected gradient refinement of unit-norm concept dictionaries under
per-column ball constraints, with the sparse generative model used to
verify its contraction guarantees, greedy/top-k selection rules, and an
interpretable classifier pipeline over precomputed embeddings.
"""

from ._kernels import BACKEND
from .classifier import (ConceptBank, EmbeddingDataset, LinearHead, Metrics,
                         TrainConfig, concept_dispersion, cross_entropy,
                         evaluate, explain_sample, forward,
                         normalize_and_project, train)
from .estimator import (LossReport, loss_aggregate, loss_closed_form,
                        loss_monte_carlo, loss_with_selected_support,
                        mle_predict)
from .generative import (GenerativeParams, QueryRealization, Sample,
                         SparseCode, build_adversarial_dictionary,
                         draw_samples, perturb_dictionary, sample_query_realization,
                         sample_sparse_code, synthesize_sample)
from .linalg import (Dictionary, column_norm_max, project_to_ball,
                     random_orthonormal)
from .optimizer import (RefinementConfig, StepRecord, SupportRecoveryError,
                        Trajectory, activation_spectra, auxiliary_target,
                        auxiliary_targets, check_residual_alignment,
                        grad_active_columns, refine_step, run_multi_sample,
                        run_single_sample)
from .selection import (batch_top_k_supports, hard_threshold, ip_omp_select,
                        top_k_support)

__version__ = "0.1.0"
