"""Network measures of indirect corporate control.

Given the control network C, this module computes

* power-weighted direct path lengths 1 / C_ij**alpha,
* all-pairs shortest path lengths over those edge lengths (``spl``), with a
  per-pair flag telling whether the minimum is attained by the direct edge,
* communicability of the binarized undirected network (two independent
  algorithms: spectral decomposition and truncated exponential series),
* the net-gain measure ``diff = 1/spl - C`` (alpha = 1 only),
* and the combined per-dyad measure table including the reverse-direction
  (transpose) variants ``spl_inv`` / ``diff_inv``.

Unreachable pairs and self-pairs are missing values (NaN), never sentinels.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .errors import AlphaNotOne, ConfigInvalid, NoDefinedPairs
from .netcore import CountryRegistry, WeightedDigraph

MISSING = np.nan

SERIES_TERM_TOL = 1e-12
SERIES_MAX_ORDER = 64


@dataclass(frozen=True)
class PathLengthMatrix:
    """Direct or shortest path lengths; NaN where no path exists."""

    registry: CountryRegistry
    alpha: float
    values: np.ndarray
    kind: str  # 'direct' | 'shortest'
    origin_graph: str  # 'control' | 'control_transpose'
    # kind='shortest' only: True where the minimum is attained by the direct
    # edge (exact ties count as direct).
    direct_attained: np.ndarray | None = None


@dataclass(frozen=True)
class CommunicabilityMatrix:
    registry: CountryRegistry
    values: np.ndarray
    method: str  # 'spectral' | 'series'


@dataclass(frozen=True)
class MeasureTable:
    """Per-ordered-dyad derived measures, NaN where undefined."""

    registry: CountryRegistry
    alpha: float
    spl: np.ndarray
    spl_inv: np.ndarray
    cmb: np.ndarray
    diff: np.ndarray
    diff_inv: np.ndarray
    cmb_scale: float = 1.0


def _edge_lengths(C: WeightedDigraph, alpha: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lengths = np.where(C.weights > 0, 1.0 / C.weights ** alpha, np.inf)
    np.fill_diagonal(lengths, np.inf)
    return lengths


def direct_lengths(C: WeightedDigraph, alpha: float, *, origin_graph: str = "control") -> PathLengthMatrix:
    """Direct path lengths 1 / C_ij**alpha; NaN where there is no edge."""
    if alpha < 0:
        raise ConfigInvalid(f"alpha must be >= 0, got {alpha}")
    lengths = _edge_lengths(C, alpha)
    values = np.where(np.isinf(lengths), MISSING, lengths)
    return PathLengthMatrix(C.registry, alpha, values, "direct", origin_graph)


def _dijkstra(adjacency: list[list[tuple[int, float]]], source: int, n: int) -> np.ndarray:
    dist = np.full(n, np.inf)
    dist[source] = 0.0
    done = [False] * n
    frontier = [(0.0, source)]
    while frontier:
        d, u = heapq.heappop(frontier)
        if done[u]:
            continue
        done[u] = True
        for v, w in adjacency[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(frontier, (nd, v))
    return dist


def shortest_paths(C: WeightedDigraph, alpha: float, *, origin_graph: str = "control") -> PathLengthMatrix:
    """All-pairs shortest path lengths over edge lengths 1 / C_ij**alpha.

    One label-setting (binary-heap Dijkstra) pass per source; edge lengths
    are nonnegative so the result is exact.  Unreachable pairs are NaN.  A
    pair is flagged direct when the direct edge attains the minimum; an
    indirect path that exactly ties the direct edge still counts as direct.
    """
    if alpha < 0:
        raise ConfigInvalid(f"alpha must be >= 0, got {alpha}")
    n = C.n
    lengths = _edge_lengths(C, alpha)
    adjacency: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i in range(n):
        row = lengths[i]
        adjacency[i] = [(j, row[j]) for j in np.nonzero(np.isfinite(row))[0]]

    dist = np.vstack([_dijkstra(adjacency, s, n) for s in range(n)])
    np.fill_diagonal(dist, np.inf)

    # Relaxation never increases past the direct edge length, so equality
    # here is exact, not a tolerance check.
    direct_attained = np.isfinite(lengths) & (dist == lengths)
    values = np.where(np.isinf(dist), MISSING, dist)
    return PathLengthMatrix(C.registry, alpha, values, "shortest", origin_graph, direct_attained)


def indirect_share(shortest: PathLengthMatrix) -> float:
    """Fraction of defined ordered pairs whose shortest path is indirect."""
    if shortest.kind != "shortest":
        raise ConfigInvalid("indirect_share needs a shortest-path matrix")
    defined = np.isfinite(shortest.values)
    total = int(defined.sum())
    if total == 0:
        raise NoDefinedPairs("no reachable ordered pairs")
    indirect = defined & ~shortest.direct_attained
    return float(indirect.sum()) / total


def binarize_undirected(C: WeightedDigraph) -> np.ndarray:
    """0/1 symmetric adjacency: link iff an edge exists in either direction."""
    A = ((C.weights > 0) | (C.weights.T > 0)).astype(float)
    np.fill_diagonal(A, 0.0)
    return A


def communicability(C: WeightedDigraph, method: str = "spectral") -> CommunicabilityMatrix:
    """Communicability of the binarized undirected network.

    'spectral' sums phi_k phi_k' exp(lambda_k) over the eigenpairs of A;
    'series' sums A**s / s! truncated when the term's max-abs entry falls
    below 1e-12 or at order 64.  The two must agree to ~1e-9 on the graph
    sizes this package targets.
    """
    A = binarize_undirected(C)
    n = A.shape[0]
    if method == "spectral":
        lam, phi = np.linalg.eigh(A)
        values = (phi * np.exp(lam)) @ phi.T
    elif method == "series":
        values = np.eye(n)
        term = np.eye(n)
        for s in range(1, SERIES_MAX_ORDER + 1):
            term = term @ A / s
            values = values + term
            if np.max(np.abs(term)) < SERIES_TERM_TOL:
                break
    else:
        raise ConfigInvalid(f"unknown communicability method {method!r}")
    values = (values + values.T) / 2.0  # enforce exact symmetry
    return CommunicabilityMatrix(C.registry, values, method)


def diff_measure(shortest: PathLengthMatrix, C: WeightedDigraph) -> np.ndarray:
    """Net gain of the shortest control path: 1/spl - C, NaN where spl is.

    Only meaningful at alpha = 1 (1/spl is in link-count units there);
    rounding negatives within 1e-12 are clamped to zero.
    """
    if shortest.alpha != 1:
        raise AlphaNotOne(f"diff requires alpha = 1, got alpha = {shortest.alpha}")
    if shortest.kind != "shortest":
        raise ConfigInvalid("diff_measure needs a shortest-path matrix")
    with np.errstate(invalid="ignore"):
        diff = 1.0 / shortest.values - C.weights
    clamp = (diff < 0) & (diff >= -1e-12)
    diff = np.where(clamp, 0.0, diff)
    return diff


def measure_table(C: WeightedDigraph, alpha: float, *,
                  cmb_method: str = "spectral", cmb_scale: float = 1.0) -> MeasureTable:
    """All per-dyad measures from the control network.

    ``spl_inv`` is the shortest path length computed on the transpose of C
    and read at (i, j) (reverse-direction control); diff variants are filled
    only at alpha = 1, otherwise left missing.  ``cmb_scale`` multiplies the
    raw communicability values (default 1: no rescaling).
    """
    if cmb_scale <= 0:
        raise ConfigInvalid(f"cmb-scale must be positive, got {cmb_scale}")
    Ct = C.transpose()
    spl = shortest_paths(C, alpha)
    spl_inv = shortest_paths(Ct, alpha, origin_graph="control_transpose")
    cmb = communicability(C, cmb_method).values * cmb_scale
    if alpha == 1:
        diff = diff_measure(spl, C)
        diff_inv = diff_measure(spl_inv, Ct)
    else:
        diff = np.full_like(spl.values, MISSING)
        diff_inv = np.full_like(spl.values, MISSING)
    return MeasureTable(C.registry, alpha, spl.values, spl_inv.values,
                        cmb, diff, diff_inv, cmb_scale)


MEASURE_CSV_HEADER = "origin,dest,spl,spl_inv,cmb,diff,diff_inv"


def write_measure_csv(table: MeasureTable, fh) -> None:
    """Emit one row per ordered pair (i != j); missing values are empty."""
    codes = table.registry.codes
    cols = (table.spl, table.spl_inv, table.cmb, table.diff, table.diff_inv)
    fh.write(MEASURE_CSV_HEADER + "\n")
    for i, o in enumerate(codes):
        for j, d in enumerate(codes):
            if i == j:
                continue
            cells = ["" if np.isnan(m[i, j]) else repr(float(m[i, j])) for m in cols]
            fh.write(f"{o},{d}," + ",".join(cells) + "\n")
