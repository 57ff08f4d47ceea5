"""Independent brute-force oracles shared by the test modules.

Nothing here may call into the code paths it checks: transport plans are
minimized by exhaustive search over integral flows, prefix lookups by a
linear scan, clusters by single-linkage distance thresholding, and the 2x2
eigenproblem by the quadratic formula.
"""

from __future__ import annotations

import ipaddress
import math
from functools import lru_cache


def min_work_exhaustive(supplies: tuple[int, ...], demands: tuple[int, ...], cost) -> int:
    """Minimum scaled work over all integral flow plans with the given margins.

    Memoized column-by-column search; every feasible integral plan is
    explored implicitly. Only valid for balanced integer instances.
    """
    assert sum(supplies) == sum(demands)
    n, m = len(supplies), len(demands)

    @lru_cache(maxsize=None)
    def best(j: int, remaining: tuple[int, ...]) -> int:
        if j == m:
            return 0
        best_val = None
        for alloc in _allocations(demands[j], remaining):
            c = sum(alloc[i] * cost[i][j] for i in range(n))
            tail = best(j + 1, tuple(r - a for r, a in zip(remaining, alloc)))
            if tail is not None and (best_val is None or c + tail < best_val):
                best_val = c + tail
        return best_val

    result = best(0, tuple(supplies))
    best.cache_clear()
    assert result is not None, "balanced instance must be feasible"
    return result


def _allocations(total: int, caps: tuple[int, ...]):
    """All ways to split ``total`` into len(caps) parts with part i <= caps[i]."""
    if not caps:
        if total == 0:
            yield ()
        return
    if total > sum(caps):
        return
    for first in range(min(total, caps[0]) + 1):
        for rest in _allocations(total - first, caps[1:]):
            yield (first,) + rest


def enumerate_integral_plans(supplies: tuple[int, ...], demands: tuple[int, ...]):
    """Literally generate every integral flow matrix with the given margins."""
    n = len(supplies)

    def rows(i: int, col_remaining: tuple[int, ...]):
        if i == n:
            if all(v == 0 for v in col_remaining):
                yield ()
            return
        for alloc in _allocations(supplies[i], col_remaining):
            for rest in rows(i + 1, tuple(r - a for r, a in zip(col_remaining, alloc))):
                yield (alloc,) + rest

    yield from rows(0, tuple(demands))


def plan_scaled_work(flows, cost) -> int:
    """Scaled work of a plan with integral flows, in exact integer arithmetic."""
    total = 0
    for (i, j), f in flows.items():
        fi = round(f)
        assert abs(f - fi) <= 1e-9, f"non-integral flow {f} at {(i, j)}"
        total += fi * cost[i][j]
    return total


def brute_force_longest_prefix(entries, ip) -> int | None:
    """Longest-prefix match by scanning every (network, asn) entry."""
    addr = ipaddress.ip_address(ip)
    best = None
    best_len = -1
    for network, asn in entries:
        if addr.version == network.version and addr in network and network.prefixlen > best_len:
            best = asn
            best_len = network.prefixlen
    return best


def threshold_clusters(points, threshold: float) -> list[int]:
    """Single-linkage partition: edges between points closer than threshold."""
    n = len(points)
    labels = [-1] * n
    current = 0
    for start in range(n):
        if labels[start] != -1:
            continue
        stack = [start]
        labels[start] = current
        while stack:
            u = stack.pop()
            for v in range(n):
                if labels[v] == -1 and math.dist(points[u], points[v]) < threshold:
                    labels[v] = current
                    stack.append(v)
        current += 1
    return labels


def eig2x2_symmetric(a: float, b: float, c: float):
    """Eigenvalues (descending) and unit eigenvectors of [[a, b], [b, c]]."""
    half_trace = (a + c) / 2
    det = a * c - b * b
    gap = math.sqrt(max(half_trace * half_trace - det, 0.0))
    lam1, lam2 = half_trace + gap, half_trace - gap
    if abs(b) > 1e-300:
        v1 = (lam1 - c, b)
        v2 = (lam2 - c, b)
    else:
        v1, v2 = ((1.0, 0.0), (0.0, 1.0)) if a >= c else ((0.0, 1.0), (1.0, 0.0))
    norm1 = math.hypot(*v1)
    norm2 = math.hypot(*v2)
    return (lam1, lam2), (
        (v1[0] / norm1, v1[1] / norm1),
        (v2[0] / norm2, v2[1] / norm2),
    )
