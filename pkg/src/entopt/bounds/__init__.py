"""Upper bounds for MESP and D-Opt."""

from .dopt import hadamard_dopt, natural_dopt, spectral_dopt
from .gamma import gamma, gamma_supergradient, phi, phi_weights, split_index
from .mesp import (
    best_p,
    ddfact,
    ddfact_plus,
    diagonal_mesp,
    linx_bound,
    linx_default_gamma,
    linx_opt_gamma,
    nlp_bound,
    nlp_di,
    nlp_id,
    spectral_mesp,
)
from .solver import BoundResult, lmo, maximize
from .transfer import (
    DOPT_KINDS,
    MESP_KINDS,
    all_kinds,
    compute_bound,
    d_induced,
    m_induced,
    mesp_bound,
    reduce_columns,
)
