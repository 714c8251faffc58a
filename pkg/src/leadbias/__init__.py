"""Toolkit for diagnosing and countering lead bias in extractive news
summarization: canonical ROUGE scoring, corpus position perturbations,
an exhaustive extraction oracle, a feature-based policy-gradient
summarizer with KL/entropy debiasing, and an evaluation harness."""

from .corpus import Corpus, Document, Perturbation, load_jsonl, perturb, perturb_corpus, save_jsonl
from .evaluation import (
    EvalReport,
    bootstrap_significance,
    evaluate,
    lead3_selector,
    oracle_selector,
    partition_by_position,
    perturbation_matrix,
    policy_selector,
)
from .oracle import best_triplet, load_cache, precompute_cache, sentence_scores, target_distribution
from .policy import ScorerParams, featurize, greedy_decode, model_distribution, sample_summary, score
from .rouge import avg_rouge, rouge_l, rouge_n, tokenize
from .trainer import TrainerConfig, TrainState, entropy_loss, kl_loss, policy_gradient_step, train

__version__ = "0.1.0"
