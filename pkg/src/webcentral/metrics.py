"""Scalar metrics over per-country provider distributions and usage curves.

Everything in this module is a pure function over immutable inputs: the
centralization score and its HHI twin, the DOJ-style concentration bands,
usage / endemicity / endemicity ratio for provider usage curves, insularity
fractions, and Pearson correlation with interpretation bands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .ingest import WebsiteRecord

__all__ = [
    "Layer",
    "ProviderDistribution",
    "CentralizationScore",
    "UsageCurve",
    "ProviderMetrics",
    "ConcentrationBand",
    "CorrelationBand",
    "centralization_score",
    "hhi",
    "concentration_band",
    "usage",
    "endemicity",
    "endemicity_ratio",
    "provider_metrics",
    "insularity",
    "tld_insularity",
    "pearson",
    "correlation_band",
]


class Layer(Enum):
    """The four analyzed web-infrastructure dimensions."""

    HOSTING = "hosting"
    DNS = "dns"
    TLD = "tld"
    CA = "ca"


class ConcentrationBand(Enum):
    """DOJ-style interpretation bands for the centralization score."""

    COMPETITIVE = "competitive"
    MODERATELY_CONCENTRATED = "moderately_concentrated"
    HIGHLY_CONCENTRATED = "highly_concentrated"


class CorrelationBand(Enum):
    POOR = "poor"
    FAIR = "fair"
    MODERATE = "moderate"
    STRONG = "strong"


@dataclass(frozen=True)
class ProviderDistribution:
    """Per-country, per-layer multiset of website counts keyed by provider.

    ``counts`` maps an opaque provider key to the number of websites it
    serves; ``total`` is the sum of all counts.
    """

    country: str
    layer: Layer
    counts: Mapping[str, int]
    total: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.counts:
            raise ValueError("empty distribution")
        for key, count in self.counts.items():
            if not isinstance(count, int) or count < 1:
                raise ValueError(f"count for {key!r} must be a positive integer, got {count!r}")
        object.__setattr__(self, "counts", dict(self.counts))
        object.__setattr__(self, "total", sum(self.counts.values()))


@dataclass(frozen=True)
class CentralizationScore:
    """A centralization score together with the site total it was computed from."""

    value: float
    total: int

    def __post_init__(self) -> None:
        upper = 1.0 - 1.0 / self.total
        if not (-1e-12 <= self.value <= upper + 1e-12):
            raise ValueError(f"score {self.value} outside [0, 1 - 1/{self.total}]")


@dataclass(frozen=True)
class UsageCurve:
    """A provider's per-country usage percentages, sorted non-increasing."""

    provider: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("empty usage curve")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        for v in self.values:
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"usage percentage {v} outside [0, 100]")
        if any(a < b for a, b in zip(self.values, self.values[1:])):
            raise ValueError("usage curve must be non-increasing")

    @classmethod
    def from_percentages(cls, provider: str, values: Iterable[float]) -> "UsageCurve":
        """Build a curve from unsorted per-country percentages."""
        return cls(provider, tuple(sorted((float(v) for v in values), reverse=True)))


@dataclass(frozen=True)
class ProviderMetrics:
    """Usage, endemicity, and endemicity ratio for one provider."""

    usage: float
    endemicity: float
    endemicity_ratio: float


def centralization_score(dist: ProviderDistribution) -> CentralizationScore:
    """Distance of ``dist`` from the fully decentralized reference.

    Equals the sum of squared provider market shares minus 1/C, where C is
    the total site count. Counts are integers, so the sum of squares is
    accumulated exactly in integer arithmetic; the only roundings are the
    two final divisions. Bounded by [0, 1 - 1/C]: 0 for a fully uniform
    distribution (every site its own provider), 1 - 1/C for a monopoly.
    """
    return CentralizationScore(value=hhi(dist) - 1.0 / dist.total, total=dist.total)


def hhi(dist: ProviderDistribution) -> float:
    """Herfindahl-Hirschman index: sum of squared market shares.

    Exceeds the centralization score by exactly 1/C.
    """
    c = dist.total
    sum_sq = sum(count * count for count in dist.counts.values())
    return sum_sq / (c * c)


def concentration_band(score: CentralizationScore) -> ConcentrationBand:
    """DOJ antitrust interpretation band for a score.

    Boundary values 0.10 and 0.18 fall in the moderately-concentrated band.
    """
    if score.value < 0.10:
        return ConcentrationBand.COMPETITIVE
    if score.value <= 0.18:
        return ConcentrationBand.MODERATELY_CONCENTRATED
    return ConcentrationBand.HIGHLY_CONCENTRATED


def usage(curve: UsageCurve) -> float:
    """Area under the usage curve: total popularity across countries."""
    return math.fsum(curve.values)


def endemicity(curve: UsageCurve) -> float:
    """Area between the usage curve and the flat line at its maximum.

    Zero for a flat curve; (n-1) * u_1 for a provider present in a single
    country.
    """
    u1 = curve.values[0]
    return math.fsum(u1 - v for v in curve.values)


def endemicity_ratio(curve: UsageCurve) -> float:
    """Size-normalized endemicity E / (U + E), in [0, 1).

    Near 0 for globally consistent providers, near 1 for single-country
    providers. Defined as 0 for an all-zero curve (no presence anywhere).
    """
    e = endemicity(curve)
    u = usage(curve)
    if u + e == 0.0:
        return 0.0
    return e / (u + e)


def provider_metrics(curve: UsageCurve) -> ProviderMetrics:
    return ProviderMetrics(
        usage=usage(curve),
        endemicity=endemicity(curve),
        endemicity_ratio=endemicity_ratio(curve),
    )


_HQ_FIELD = {
    Layer.HOSTING: "hosting_hq",
    Layer.DNS: "dns_hq",
    Layer.CA: "ca_hq",
}


def insularity(records: Sequence["WebsiteRecord"], country: str, layer: Layer) -> float:
    """Fraction of a country's websites served by providers headquartered there.

    Records with an unresolved provider HQ stay in the denominator: unknown
    is not insular. TLD-layer insularity has its own rule, see
    :func:`tld_insularity`.
    """
    if layer not in _HQ_FIELD:
        raise ValueError(f"insularity is not defined for layer {layer}")
    if not records:
        raise ValueError("no records")
    hq_field = _HQ_FIELD[layer]
    matches = 0
    for record in records:
        if record.country != country:
            raise ValueError(f"record for {record.country} in {country} insularity input")
        if getattr(record, hq_field) == country:
            matches += 1
    return matches / len(records)


def tld_insularity(
    records: Sequence["WebsiteRecord"], country: str, cc_map: Mapping[str, str]
) -> float:
    """Fraction of a country's websites whose TLD maps to that country.

    ``cc_map`` maps each ccTLD to its country and must map "com" to "US";
    other gTLDs are absent from the map and count as non-insular everywhere.
    """
    if not records:
        raise ValueError("no records")
    matches = 0
    for record in records:
        if record.country != country:
            raise ValueError(f"record for {record.country} in {country} insularity input")
        if cc_map.get(record.tld) == country:
            matches += 1
    return matches / len(records)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient of two equal-length series."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("need at least 2 points")
    n = len(x)
    mean_x = math.fsum(x) / n
    mean_y = math.fsum(y) / n
    dx = [xi - mean_x for xi in x]
    dy = [yi - mean_y for yi in y]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        raise ValueError("degenerate series")
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    rho = cov / math.sqrt(var_x * var_y)
    # Guard against rounding pushing a perfect correlation past +/-1.
    return max(-1.0, min(1.0, rho))


def correlation_band(rho: float) -> CorrelationBand:
    """Interpretation band for a correlation coefficient by magnitude."""
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"correlation {rho} outside [-1, 1]")
    mag = abs(rho)
    if mag < 0.30:
        return CorrelationBand.POOR
    if mag <= 0.60:
        return CorrelationBand.FAIR
    if mag <= 0.80:
        return CorrelationBand.MODERATE
    return CorrelationBand.STRONG
