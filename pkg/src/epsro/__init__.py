"""Solvers for two-player zero-sum games built on unrestricted-restricted
subgames with no-regret meta-strategy learning, plus PSRO-family baselines
and an experiment CLI."""

from .games import (
    ACTIVE,
    COL,
    FIXED,
    ROW,
    MatrixGame,
    MixedStrategy,
    PayoffTable,
    RestrictedPolicySet,
    best_response,
    fill_payoff_table,
    in_gamescape,
    load_matrix_csv,
    nash_conv,
    save_matrix_csv,
    solve_zero_sum,
    utility,
)
from .generators import (
    MixtureGame,
    density_vector,
    mixture_payoff,
    mixture_payoff_gradient,
    random_symmetric,
)
from .kuhn import (
    BehaviorPolicy,
    GameTree,
    build_kuhn,
    exact_best_response,
    expected_value,
    nash_conv_efg,
)
from .meta import (
    BoltzmannMeta,
    LossBuffer,
    RegretReport,
    exact_loss_vector,
    measure_regret,
    mwu_step,
    sigma_from_beta,
    windowed_update,
)
from .metrics import center_coverage, expected_cardinality, score_eval
from .runners import (
    RunLedger,
    StopCondition,
    meta_solver_lp,
    run_epsro,
    run_p_psro,
    run_psro,
    run_psro_rn,
    run_self_play,
)
from .urr import URRConfig, URRGame, URRSolver, responder_step, solve_urr, \
    urr_exploitability
from .warmstart import (
    WarmStartProblem,
    estimate_new_entry,
    warm_start_beta,
    warm_start_objective,
)

__version__ = "0.1.0"
