"""Dueling bandits robust to corruption, delay, and latent post-serving contexts."""

from .adversary import (CorruptionPolicy, DelayPolicy, FeedbackQueue,
                        starvation_horizon)
from .approximator import (FourierRidgeApproximator, MlpApproximator,
                           ReplayBuffer, RidgeApproximator, make_approximator,
                           sup_error)
from .environment import (EnvConfig, Environment, ThetaStar, implied_dy,
                          kappa_floor, logistic, logistic_slope,
                          make_theta_star, sample_preference, utility)
from .estimator import (FeedbackRecord, NewtonDivergenceError,
                        PreferenceEstimator, confidence_radius)
from .hard_instances import (HardInstance, blind_phase_length,
                             blind_phase_regret, build_instance,
                             uniform_random_policy)
from .harness import (ExperimentConfig, InvariantViolation, check_dir,
                      config_from_dict, expand_sweep, load_config,
                      run_experiment, run_single, summarize, write_trace)
from .linalg import (DimensionMismatchError, SingularUpdateError, SpdMatrix,
                     direct_inverse)
from .policies import (POLICY_CLASSES, BasePolicy, Colstim, DuelChoice,
                       MaxInP, MaxPairUcb, Rcdb, RcdpUcb,
                       instantaneous_regret, make_policy)
from .rng import stream

__version__ = "0.1.0"
