from .core import VectorWeight, Weight, power_cell_integrals, product_weight
from .constants import ScalarClass, cube_averages, ml_constant, ml_cube_values, power_mean, scalar_constant
from .lemmas import (
    Decomposition,
    hat_weight,
    lemma2_check,
    lemma_decompose,
    lemma_reconstruct,
    norm_identity_check,
    reconstruct_last,
    rooted_ap,
)
from .bmo import BmoFunction, ReverseHolderResult, bmo_norms, exp_weight_check, reverse_holder_eta
from .generators import (
    FAMILIES,
    CoifmanRochberg,
    ExpBmo,
    LemmaConstructive,
    LogBoundedOscillation,
    dyadic_martingale,
    gen_weight,
    log_distance,
    random_spikes,
    random_vector_weight,
    random_weight,
)
from .commutator import CommutatorReport, commutator_perturb, common_reverse_holder, max_gamma
