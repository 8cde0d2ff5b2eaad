"""Country registry, dyad-panel CSV ingestion, and network construction.

The ingestion format is a long-format CSV with one row per ordered country
pair (optionally per sector).  Two dense adjacency matrices are built from a
panel: ``T`` holds bilateral trade values and ``C`` holds corporate-control
link counts.  ``classify_top_edges`` reproduces the top-quantile edge
classification used for map-style exports (trade_only / control_only / both).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import (
    AsymmetricSymmetricCovariate,
    ConfigInvalid,
    DuplicateDyad,
    EmptyGraph,
    MissingColumn,
    NegativeValue,
)

log = logging.getLogger(__name__)

# Canonical column order of dyads.csv.  `sector` is optional and, when
# present, appended last.
REQUIRED_COLUMNS = (
    "origin", "dest", "trade", "cc",
    "gdp_o", "gdp_d", "pop_o", "pop_d",
    "dist", "contig", "colony", "smctry", "comlang", "rta", "asean_china_o",
)
OPTIONAL_COLUMNS = ("sector",)

# Covariates that must agree between (i,j) and (j,i) whenever both sides
# carry a value.
SYMMETRIC_COLUMNS = ("dist", "contig", "colony", "smctry", "comlang", "rta")

DUMMY_COLUMNS = ("contig", "colony", "smctry", "comlang", "rta", "asean_china_o")

# Per-row mandatory numerics; covariates may be empty (missing).
_MANDATORY_NUMERIC = ("trade", "cc")
_FLOAT_COLUMNS = ("trade", "gdp_o", "gdp_d", "pop_o", "pop_d", "dist")


@dataclass(frozen=True)
class CountryRegistry:
    """Stable mapping between country codes and dense node indices."""

    codes: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.codes)) != len(self.codes):
            raise ConfigInvalid("country codes must be unique")
        for c in self.codes:
            if not c or c != c.upper():
                raise ConfigInvalid(f"country code {c!r} must be non-empty and uppercase")

    @classmethod
    def from_codes(cls, codes) -> "CountryRegistry":
        seen = []
        for c in codes:
            c = str(c).strip().upper()
            if c not in seen:
                seen.append(c)
        return cls(tuple(sorted(seen)))

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.codes)}

    def __contains__(self, code: str) -> bool:
        return code in self.index

    def __len__(self) -> int:
        return len(self.codes)


@dataclass(frozen=True)
class WeightedDigraph:
    """Dense nonnegative adjacency over a country registry.

    An edge i->j exists iff ``weights[i, j] > 0``; the diagonal is zero.
    """

    registry: CountryRegistry
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)  # private copy
        n = self.registry.n
        if w.shape != (n, n):
            raise ConfigInvalid(f"weight matrix shape {w.shape} does not match registry size {n}")
        if n < 2:
            raise ConfigInvalid("graph operations need at least 2 countries")
        if not np.all(np.isfinite(w)):
            raise ConfigInvalid("weights must be finite")
        if np.any(w < 0):
            raise NegativeValue("edge weights must be nonnegative")
        if np.any(np.diag(w) != 0):
            raise ConfigInvalid("self-loops are not allowed (diagonal must be zero)")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.registry.n

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))

    def transpose(self) -> "WeightedDigraph":
        return WeightedDigraph(self.registry, self.weights.T.copy())


@dataclass
class DyadPanel:
    """Per-ordered-pair records: trade, control links, gravity covariates.

    ``frame`` has the canonical columns (plus ``sector`` when sectoral);
    missing covariates are NaN.  ``rejected`` records (csv_line, reason) for
    rows dropped during ingestion.
    """

    frame: pd.DataFrame
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def has_sector(self) -> bool:
        return "sector" in self.frame.columns

    def __len__(self) -> int:
        return len(self.frame)

    def codes(self) -> list[str]:
        return sorted(set(self.frame["origin"]) | set(self.frame["dest"]))

    def dyad_cc(self) -> dict[tuple[str, str], float]:
        """Dyad-level control counts (max across sector rows of a dyad)."""
        grouped = self.frame.groupby(["origin", "dest"], sort=False)["cc"].max()
        return {key: float(v) for key, v in grouped.items()}


@dataclass(frozen=True)
class EdgeClass:
    origin: str
    dest: str
    edge_class: str  # trade_only | control_only | both
    trade_weight: float
    control_weight: float


def _parse_rows(raw: pd.DataFrame, has_sector: bool):
    """Validate/convert string cells; return (clean rows, rejected)."""
    rows = []
    rejected: list[tuple[int, str]] = []
    for pos in range(len(raw)):
        line_no = pos + 2  # header is line 1
        rec = raw.iloc[pos]
        origin = str(rec["origin"]).strip().upper()
        dest = str(rec["dest"]).strip().upper()
        if not origin or not dest:
            rejected.append((line_no, "empty country code"))
            continue
        if origin == dest:
            rejected.append((line_no, "self-pair"))
            continue

        out = {"origin": origin, "dest": dest}
        bad = None
        for col in REQUIRED_COLUMNS[2:]:
            cell = str(rec[col]).strip()
            if cell == "":
                if col in _MANDATORY_NUMERIC:
                    bad = f"missing value in mandatory column '{col}'"
                    break
                out[col] = math.nan
                continue
            try:
                value = float(cell)
            except ValueError:
                bad = f"unparseable numeric {cell!r} in column '{col}'"
                break
            if not math.isfinite(value):
                bad = f"non-finite value in column '{col}'"
                break
            if col == "cc" and value != int(value):
                bad = f"control-link count must be an integer, got {cell!r}"
                break
            if col in DUMMY_COLUMNS and value not in (0.0, 1.0):
                bad = f"dummy column '{col}' must be 0 or 1, got {cell!r}"
                break
            out[col] = value
        if bad is not None:
            rejected.append((line_no, bad))
            continue

        # Sign constraints are data corruption, not missingness: raise.
        for col in ("trade", "cc", "gdp_o", "gdp_d", "pop_o", "pop_d"):
            v = out[col]
            if not math.isnan(v) and v < 0:
                raise NegativeValue(f"line {line_no}: column '{col}' is negative ({v})")
        if not math.isnan(out["dist"]) and out["dist"] <= 0:
            raise NegativeValue(f"line {line_no}: 'dist' must be positive, got {out['dist']}")

        if has_sector:
            out["sector"] = str(rec["sector"]).strip()
        rows.append((line_no, out))
    return rows, rejected


def _check_symmetric_covariates(frame: pd.DataFrame):
    by_pair: dict[tuple[str, str], dict[str, float]] = {}
    for rec in frame.itertuples(index=False):
        key = tuple(sorted((rec.origin, rec.dest)))
        ref = by_pair.setdefault(key, {})
        for col in SYMMETRIC_COLUMNS:
            v = getattr(rec, col)
            if isinstance(v, float) and math.isnan(v):
                continue
            if col in ref and ref[col] != v:
                raise AsymmetricSymmetricCovariate(
                    f"column '{col}' disagrees across directions of pair "
                    f"{key[0]}-{key[1]}: {ref[col]} vs {v}"
                )
            ref.setdefault(col, v)


def load_panel(path, schema: dict[str, str] | None = None) -> DyadPanel:
    """Read a dyads CSV into a validated :class:`DyadPanel`.

    ``schema`` optionally maps canonical column names to the file's header
    names (identity by default).  Rows with unparseable numerics are dropped
    and recorded with their CSV line numbers in ``panel.rejected``; structural
    problems (missing columns, duplicate dyads, negative values, asymmetric
    symmetric covariates) raise.
    """
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    if schema:
        rename = {file_col: canon for canon, file_col in schema.items()}
        raw = raw.rename(columns=rename)

    missing = [c for c in REQUIRED_COLUMNS if c not in raw.columns]
    if missing:
        raise MissingColumn(f"{path}: missing required column(s) {', '.join(missing)}")
    has_sector = "sector" in raw.columns

    rows, rejected = _parse_rows(raw, has_sector)
    for line_no, reason in rejected:
        log.warning("%s: rejected line %d: %s", path, line_no, reason)

    seen: dict[tuple, int] = {}
    for line_no, out in rows:
        key = (out["origin"], out["dest"], out.get("sector", ""))
        if key in seen:
            raise DuplicateDyad(
                f"duplicate dyad {key[0]}->{key[1]}"
                + (f" sector {key[2]}" if key[2] else "")
                + f" on lines {seen[key]} and {line_no}"
            )
        seen[key] = line_no

    columns = list(REQUIRED_COLUMNS) + (["sector"] if has_sector else [])
    frame = pd.DataFrame([out for _, out in rows], columns=columns)
    for col in REQUIRED_COLUMNS[2:]:
        frame[col] = frame[col].astype(float)
    _check_symmetric_covariates(frame)
    return DyadPanel(frame=frame, rejected=rejected)


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return ""
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)  # shortest round-trip


def write_panel(panel: DyadPanel, path) -> None:
    """Write a panel back to the canonical CSV layout (deterministic bytes)."""
    columns = list(REQUIRED_COLUMNS) + (["sector"] if panel.has_sector else [])
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for rec in panel.frame.itertuples(index=False):
            fh.write(",".join(_format_cell(getattr(rec, c)) for c in columns) + "\n")


def build_networks(panel: DyadPanel) -> tuple[WeightedDigraph, WeightedDigraph]:
    """Build the trade matrix T and the control matrix C from a panel.

    The registry is the sorted union of all codes seen; absent dyads are 0.
    Sector rows of one dyad are aggregated: trade is summed, cc is taken as
    the per-dyad maximum (the count is dyad-level and merely repeated on
    sector rows).
    """
    if len(panel) == 0:
        raise EmptyGraph("cannot build networks from an empty panel")
    registry = CountryRegistry.from_codes(panel.codes())
    idx = registry.index
    n = registry.n
    T = np.zeros((n, n))
    C = np.zeros((n, n))
    grouped = panel.frame.groupby(["origin", "dest"], sort=False).agg(
        trade=("trade", "sum"), cc=("cc", "max")
    )
    for (o, d), rec in grouped.iterrows():
        i, j = idx[o], idx[d]
        T[i, j] = rec["trade"]
        C[i, j] = rec["cc"]
    return WeightedDigraph(registry, T), WeightedDigraph(registry, C)


def _top_edges(graph: WeightedDigraph, q: float) -> set[tuple[int, int]]:
    codes = graph.registry.codes
    ii, jj = np.nonzero(graph.weights)
    edges = sorted(
        ((graph.weights[i, j], codes[i], codes[j], i, j) for i, j in zip(ii, jj)),
        key=lambda e: (-e[0], e[1], e[2]),
    )
    k = math.ceil(q * len(edges))
    return {(e[3], e[4]) for e in edges[:k]}


def classify_top_edges(T: WeightedDigraph, C: WeightedDigraph, q: float) -> list[EdgeClass]:
    """Union of the top-``q``-quantile directed edge sets of T and C.

    The top ceil(q*m) edges per graph are selected by weight (m = that
    graph's positive-edge count); ties at the boundary break by weight desc,
    then origin code, then dest code.  Class is 'both' when the edge makes
    the cut in both graphs, else 'trade_only'/'control_only'.
    """
    if T.registry is not C.registry and T.registry != C.registry:
        raise ConfigInvalid("T and C must share one registry")
    if not 0 < q <= 1:
        raise ConfigInvalid(f"q must be in (0, 1], got {q}")
    if T.edge_count() == 0 and C.edge_count() == 0:
        raise EmptyGraph("both graphs are edgeless")

    top_t = _top_edges(T, q)
    top_c = _top_edges(C, q)
    codes = T.registry.codes
    out = []
    for i, j in sorted(top_t | top_c, key=lambda e: (codes[e[0]], codes[e[1]])):
        if (i, j) in top_t and (i, j) in top_c:
            cls = "both"
        elif (i, j) in top_t:
            cls = "trade_only"
        else:
            cls = "control_only"
        out.append(EdgeClass(codes[i], codes[j], cls,
                             float(T.weights[i, j]), float(C.weights[i, j])))
    return out
