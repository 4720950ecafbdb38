"""
Arbiter PUF modeling with constructed challenges.

Simulates arbiter PUFs as linear threshold functions, generates Hadamard and model-driven
challenges, learns the PUF with a from-scratch SVM or logistic regression, and reproduces the
published learning curves.
"""
__version__ = "0.1.0"

from ._core import BACKEND
from .active import (AveragedTrace, LearningTrace, evaluate_recognition, generate_adversarial_set, k_sweep,
                     run_active, run_passive)
from .challenges import (UnreachableTargetError, construct_challenge, hadamard_challenge_set, random_challenge,
                         random_challenges, sylvester_hadamard)
from .learner import LinearModel, TrainConfig, accuracy, normalized_distance, predict, train, train_lr, train_svm
from .puf import (ArbiterPuf, CrpSet, DelayNoise, FlipNoise, Noiseless, evaluate, evaluate_noisy, gamma,
                  is_uncorrelated, sample_puf)

__all__ = [
    "BACKEND", "ArbiterPuf", "CrpSet", "Noiseless", "FlipNoise", "DelayNoise", "sample_puf", "evaluate",
    "evaluate_noisy", "gamma", "is_uncorrelated", "sylvester_hadamard", "hadamard_challenge_set",
    "random_challenge", "random_challenges", "construct_challenge", "UnreachableTargetError", "LinearModel",
    "TrainConfig", "train", "train_svm", "train_lr", "predict", "normalized_distance", "accuracy",
    "run_passive", "run_active", "generate_adversarial_set", "evaluate_recognition", "k_sweep",
    "LearningTrace", "AveragedTrace",
]
