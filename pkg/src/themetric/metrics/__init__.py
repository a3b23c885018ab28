from .bias import (
    ExposureReport,
    ThemeExposure,
    avg_popularity_ratio,
    exposure_ratio,
    item_coverage,
    rec_theme_shares,
    theme_counts_of,
    train_theme_shares,
)
from .chisq import ChiSquareResult, chi2_sf, chi_square_2x2, chi_square_theme, gammaincc
from .gini import gini
from .ranking import AccuracyReport, evaluate_accuracy, ndcg_at_k, precision_recall_f1_at_k

__all__ = [
    "AccuracyReport",
    "ChiSquareResult",
    "ExposureReport",
    "ThemeExposure",
    "avg_popularity_ratio",
    "chi2_sf",
    "chi_square_2x2",
    "chi_square_theme",
    "evaluate_accuracy",
    "exposure_ratio",
    "gammaincc",
    "gini",
    "item_coverage",
    "ndcg_at_k",
    "precision_recall_f1_at_k",
    "rec_theme_shares",
    "theme_counts_of",
    "train_theme_shares",
]
