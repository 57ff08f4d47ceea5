"""Centralization and regionalization metrics for web infrastructure layers."""

from .metrics import (
    CentralizationScore,
    ConcentrationBand,
    CorrelationBand,
    Layer,
    ProviderDistribution,
    ProviderMetrics,
    UsageCurve,
    centralization_score,
    concentration_band,
    correlation_band,
    endemicity,
    endemicity_ratio,
    hhi,
    insularity,
    pearson,
    provider_metrics,
    tld_insularity,
    usage,
)

__all__ = [
    "CentralizationScore",
    "ConcentrationBand",
    "CorrelationBand",
    "Layer",
    "ProviderDistribution",
    "ProviderMetrics",
    "UsageCurve",
    "centralization_score",
    "concentration_band",
    "correlation_band",
    "endemicity",
    "endemicity_ratio",
    "hhi",
    "insularity",
    "pearson",
    "provider_metrics",
    "tld_insularity",
    "usage",
]

__version__ = "0.1.0"
