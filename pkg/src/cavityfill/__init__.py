"""Feature-space resampling for imbalanced classification.

Trains a small feed-forward classifier on imbalanced data, extracts
penultimate-layer features, rebalances them with one of several strategies
(including Gaussian cavity filling), retrains only the classifier head, and
evaluates the reassembled network. See the CLI (`cavityfill --help`) for the
file-pipeline form of the same steps.
"""

from ._kernels import BACKEND
from .dataset import (Dataset, ImbalanceSpec, SyntheticSpec, class_counts,
                      load_csv, make_synthetic, save_csv, split,
                      synthesize_imbalanced)
from .errors import DataError, NumericError, TrainingDiverged
from .experiment import (CampaignResult, EpisodeConfig, EpisodeResult,
                         default_config, emit_report, load_config, run_campaign,
                         run_cell, run_episode)
from .gaussian import (DiagonalModel, GaussianModel, fit_diagonal, fit_full,
                       sample_diagonal, sample_full)
from .metrics import ScoreReport, confusion, score
from .net import (FeatureSet, NetworkParams, NetworkSpec, SplitNetwork,
                  TrainConfig, extract_features, forward, init, predict,
                  reassemble, retrain_head, split_at_penultimate, train)
from .resample import (BalancePlan, Strategy, apply, cavity, generate,
                       oversample, parse_strategy, perturb, plan_balance,
                       smote, undersample)
from .rng import Stream, derive_seed

__version__ = "0.1.0"
