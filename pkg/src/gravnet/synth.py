"""Seeded synthetic data generation and brute-force verification oracles.

The generator draws a gravity-style dyad panel with a selection margin
(zero trade where a latent index is negative) on top of a planted
corporate-control network.  A tunable share of country pairs is routed
through hub countries ("conduits"): those pairs get two strong control
links via a hub and a weak-or-absent direct link, which makes their
shortest control path indirect.

Randomness comes from a single counter-based Philox (4x64, 10 rounds)
bit generator, so a given config (including its seed) always produces a
byte-identical panel.  Test vectors for the stream are pinned in the test
suite and documented in the README.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd
from scipy.special import expit, gammaln, log_ndtr

from . import measures
from .errors import ConfigInvalid, Separation, TooLarge
from .netcore import CountryRegistry, DyadPanel, WeightedDigraph

EARTH_RADIUS_KM = 6371.0

GDP_LOG_MEAN, GDP_LOG_SD = 2.2, 1.0    # thousands of USD per capita
POP_LOG_MEAN, POP_LOG_SD = 16.4, 1.8   # persons
CC_LOG_MEAN = math.log(3.0)            # direct link counts
STRONG_LOG_MEAN, STRONG_LOG_SD = math.log(50.0), 0.3
DUMMY_RATES = {"contig": 0.04, "colony": 0.02, "smctry": 0.015, "comlang": 0.15, "rta": 0.08}
BLOC_SHARE = 0.055                     # exporter-bloc dummy (asean_china_o)
HUB_SHARE = 0.05
KEEP_DIRECT_PROB = 0.5

DEFAULT_BETA = {
    "const": -13.667,
    "ln_CC": 0.103,
    "ln_spl": -0.203,
    "ln_gdp_o": 0.924,
    "ln_gdp_d": 0.809,
    "ln_pop_o": 1.047,
    "ln_pop_d": 0.861,
    "ln_dist": -1.543,
    "contig": 0.399,
    "colony": 0.568,
    "smctry": 0.816,
    "comlang": 0.782,
}
DEFAULT_GAMMA = {"const": 3.479, "ln_dist": -0.384}


@dataclass
class DGPConfig:
    n_countries: int = 60
    beta: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_BETA))
    gamma: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_GAMMA))
    rho: float = 0.0
    sigma: float = 2.0
    cc_density: float = 0.9
    cc_dispersion: float = 0.2
    conduit_fraction: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.n_countries < 3:
            raise ConfigInvalid("n_countries must be >= 3")
        if not -1 < self.rho < 1:
            raise ConfigInvalid("rho must lie in (-1, 1)")
        if self.sigma <= 0:
            raise ConfigInvalid("sigma must be positive")
        if not 0 < self.cc_density <= 1:
            raise ConfigInvalid("cc_density must lie in (0, 1]")
        if self.cc_dispersion < 0:
            raise ConfigInvalid("cc_dispersion must be nonnegative")
        if not 0 <= self.conduit_fraction < 1:
            raise ConfigInvalid("conduit_fraction must lie in [0, 1)")
        vocab = {"const", "ln_CC", "ln_spl", "ln_gdp_o", "ln_gdp_d", "ln_pop_o",
                 "ln_pop_d", "ln_dist", "contig", "colony", "smctry", "comlang",
                 "rta", "asean_china_o"}
        for name in list(self.beta) + list(self.gamma):
            if name not in vocab:
                raise ConfigInvalid(f"unknown coefficient name {name!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "DGPConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigInvalid(f"unknown config key(s): {', '.join(sorted(unknown))}")
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass
class GroundTruth:
    """Planted parameters and latent draws, for recovery scoring."""

    beta: dict[str, float]
    gamma: dict[str, float]
    rho: float
    sigma: float
    seed: int
    hubs: list[str]
    pair_keys: list[tuple[str, str]]
    selection_error: np.ndarray   # u, sd 1
    outcome_error: np.ndarray     # eps, sd sigma, corr(u, eps) = rho


def _codes(n: int) -> list[str]:
    alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    out = []
    for i in range(n):
        a, rem = divmod(i, 26 * 26)
        b, c = divmod(rem, 26)
        out.append(alphabet[a] + alphabet[b] + alphabet[c])
    return out


def _sphere_distances(rng: np.random.Generator, n: int) -> np.ndarray:
    lon = 2 * np.pi * rng.random(n)
    lat = np.arcsin(2 * rng.random(n) - 1)
    cos_angle = (np.sin(lat)[:, None] * np.sin(lat)[None, :]
                 + np.cos(lat)[:, None] * np.cos(lat)[None, :]
                 * np.cos(lon[:, None] - lon[None, :]))
    dist = EARTH_RADIUS_KM * np.arccos(np.clip(cos_angle, -1.0, 1.0))
    np.fill_diagonal(dist, 0.0)
    return np.maximum(dist, 1.0)


def _plant_ccn(rng: np.random.Generator, cfg: DGPConfig) -> tuple[np.ndarray, list[int]]:
    n = cfg.n_countries
    exists = rng.random((n, n)) < cfg.cc_density
    counts = np.maximum(np.rint(np.exp(rng.normal(CC_LOG_MEAN, cfg.cc_dispersion, (n, n)))), 1.0)
    C = np.where(exists, counts, 0.0)
    np.fill_diagonal(C, 0.0)

    degree = (C > 0).sum(axis=0) + (C > 0).sum(axis=1)
    n_hubs = math.ceil(HUB_SHARE * n)
    hubs = list(np.argsort(-degree, kind="stable")[:n_hubs])

    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    n_conduit = round(cfg.conduit_fraction * len(pairs))
    if n_conduit:
        chosen = rng.choice(len(pairs), size=n_conduit, replace=False)
        hub_pick = rng.integers(0, len(hubs), size=n_conduit)
        strong = np.maximum(np.rint(np.exp(rng.normal(STRONG_LOG_MEAN, STRONG_LOG_SD, (n_conduit, 2)))), 2.0)
        keep_direct = rng.random(n_conduit) < KEEP_DIRECT_PROB
        for k, pair_idx in enumerate(chosen):
            i, j = pairs[pair_idx]
            usable = [h for h in hubs if h not in (i, j)]
            if not usable:
                continue
            h = usable[hub_pick[k] % len(usable)]
            C[i, h] = max(C[i, h], strong[k, 0])
            C[h, j] = max(C[h, j], strong[k, 1])
            C[i, j] = 1.0 if keep_direct[k] else 0.0
    return C, hubs


def generate(config: DGPConfig) -> tuple[DyadPanel, GroundTruth]:
    """Draw a dyad panel plus its ground truth, deterministically per seed."""
    config.validate()
    cfg = config
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    n = cfg.n_countries
    codes = _codes(n)

    dist = _sphere_distances(rng, n)
    gdp = np.exp(rng.normal(GDP_LOG_MEAN, GDP_LOG_SD, n))
    pop = np.exp(rng.normal(POP_LOG_MEAN, POP_LOG_SD, n))

    dummies = {}
    upper = np.triu_indices(n, k=1)
    for name, rate in DUMMY_RATES.items():
        half = (rng.random(len(upper[0])) < rate).astype(float)
        mat = np.zeros((n, n))
        mat[upper] = half
        dummies[name] = mat + mat.T

    bloc = np.zeros(n)
    bloc[rng.choice(n, size=math.ceil(BLOC_SHARE * n), replace=False)] = 1.0

    C, hub_idx = _plant_ccn(rng, cfg)
    registry = CountryRegistry(tuple(codes))  # codes are generated sorted
    graph = WeightedDigraph(registry, C)
    spl = measures.shortest_paths(graph, alpha=1.0).values

    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    m = len(pairs)
    ii = np.array([p[0] for p in pairs])
    jj = np.array([p[1] for p in pairs])

    cols = {
        "const": np.ones(m),
        "ln_CC": np.log1p(C[ii, jj]),
        # unreachable pairs contribute nothing; they are dropped listwise in
        # any estimation that uses ln_spl
        "ln_spl": np.where(np.isnan(spl[ii, jj]), 0.0, np.log(np.where(np.isnan(spl[ii, jj]), 1.0, spl[ii, jj]))),
        "ln_gdp_o": np.log(gdp[ii]),
        "ln_gdp_d": np.log(gdp[jj]),
        "ln_pop_o": np.log(pop[ii]),
        "ln_pop_d": np.log(pop[jj]),
        "ln_dist": np.log(dist[ii, jj]),
        "contig": dummies["contig"][ii, jj],
        "colony": dummies["colony"][ii, jj],
        "smctry": dummies["smctry"][ii, jj],
        "comlang": dummies["comlang"][ii, jj],
        "rta": dummies["rta"][ii, jj],
        "asean_china_o": bloc[ii],
    }

    z1 = rng.standard_normal(m)
    z2 = rng.standard_normal(m)
    u = z1
    eps = cfg.sigma * (cfg.rho * z1 + math.sqrt(1 - cfg.rho ** 2) * z2)

    sel_index = sum(g * cols[name] for name, g in cfg.gamma.items()) + u
    ln_trade = sum(b * cols[name] for name, b in cfg.beta.items()) + eps
    selected = sel_index > 0
    trade = np.where(selected, np.exp(ln_trade), 0.0)

    frame = pd.DataFrame({
        "origin": [codes[i] for i in ii],
        "dest": [codes[j] for j in jj],
        "trade": trade,
        "cc": C[ii, jj],
        "gdp_o": gdp[ii],
        "gdp_d": gdp[jj],
        "pop_o": pop[ii],
        "pop_d": pop[jj],
        "dist": dist[ii, jj],
        "contig": dummies["contig"][ii, jj],
        "colony": dummies["colony"][ii, jj],
        "smctry": dummies["smctry"][ii, jj],
        "comlang": dummies["comlang"][ii, jj],
        "rta": dummies["rta"][ii, jj],
        "asean_china_o": bloc[ii],
    })
    panel = DyadPanel(frame=frame)
    truth = GroundTruth(
        beta=dict(cfg.beta), gamma=dict(cfg.gamma), rho=cfg.rho, sigma=cfg.sigma,
        seed=cfg.seed, hubs=[codes[h] for h in sorted(hub_idx)],
        pair_keys=[(codes[i], codes[j]) for i, j in pairs],
        selection_error=u, outcome_error=eps,
    )
    return panel, truth


def write_truth(truth: GroundTruth, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("record,origin,dest,name,value\n")
        for name, v in sorted(truth.beta.items()):
            fh.write(f"param,,,beta.{name},{v!r}\n")
        for name, v in sorted(truth.gamma.items()):
            fh.write(f"param,,,gamma.{name},{v!r}\n")
        fh.write(f"param,,,rho,{truth.rho!r}\n")
        fh.write(f"param,,,sigma,{truth.sigma!r}\n")
        fh.write(f"param,,,seed,{truth.seed}\n")
        for h in truth.hubs:
            fh.write(f"hub,{h},,,\n")
        for (o, d), u, e in zip(truth.pair_keys, truth.selection_error, truth.outcome_error):
            fh.write(f"error,{o},{d},u,{float(u)!r}\n")
            fh.write(f"error,{o},{d},eps,{float(e)!r}\n")


def read_truth(path) -> GroundTruth:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    beta, gamma = {}, {}
    rho = sigma = 0.0
    seed = 0
    hubs: list[str] = []
    keys: list[tuple[str, str]] = []
    u_map: dict[tuple[str, str], float] = {}
    e_map: dict[tuple[str, str], float] = {}
    for rec in frame.itertuples(index=False):
        if rec.record == "param":
            if rec.name.startswith("beta."):
                beta[rec.name[5:]] = float(rec.value)
            elif rec.name.startswith("gamma."):
                gamma[rec.name[6:]] = float(rec.value)
            elif rec.name == "rho":
                rho = float(rec.value)
            elif rec.name == "sigma":
                sigma = float(rec.value)
            elif rec.name == "seed":
                seed = int(rec.value)
        elif rec.record == "hub":
            hubs.append(rec.origin)
        elif rec.record == "error":
            key = (rec.origin, rec.dest)
            if key not in u_map and key not in e_map:
                keys.append(key)
            (u_map if rec.name == "u" else e_map)[key] = float(rec.value)
    u = np.array([u_map[k] for k in keys])
    eps = np.array([e_map[k] for k in keys])
    return GroundTruth(beta, gamma, rho, sigma, seed, hubs, keys, u, eps)


# --- independent oracles ------------------------------------------------------

ORACLE_MAX_NODES = 8
_GRID_STEPS = (1e-2, 1e-3, 1e-4)


def oracle_shortest_paths(C: WeightedDigraph, alpha: float) -> np.ndarray:
    """Exact all-pairs shortest path lengths by exhaustive simple-path search.

    Depth-first enumeration over simple paths with sound branch-and-bound
    pruning (edge lengths are nonnegative, so a prefix already longer than
    the best known distance to its endpoint cannot start an optimal path).
    NaN where no path exists.  Limited to n <= 8 nodes.
    """
    n = C.n
    if n > ORACLE_MAX_NODES:
        raise TooLarge(f"oracle handles at most {ORACLE_MAX_NODES} nodes, got {n}")
    with np.errstate(divide="ignore"):
        lengths = np.where(C.weights > 0, 1.0 / C.weights ** alpha, np.inf)
    np.fill_diagonal(lengths, np.inf)
    adjacency = [sorted(((lengths[i, j], j) for j in range(n) if np.isfinite(lengths[i, j])))
                 for i in range(n)]
    best = np.full((n, n), np.inf)
    for s in range(n):
        row = best[s]
        on_path = [False] * n
        on_path[s] = True

        def walk(u: int, acc: float) -> None:
            for w, v in adjacency[u]:
                if on_path[v]:
                    continue
                nd = acc + w
                if nd > row[v]:
                    continue
                row[v] = nd
                on_path[v] = True
                walk(v, nd)
                on_path[v] = False

        walk(s, 0.0)
    np.fill_diagonal(best, np.inf)
    return np.where(np.isinf(best), np.nan, best)


def _zip_loglik_grid(y: np.ndarray, beta0: np.ndarray, delta0: np.ndarray) -> np.ndarray:
    """Intercept-only zero-inflated Poisson log-likelihood on a meshgrid."""
    n_zero = int((y == 0).sum())
    y_pos = y[y > 0]
    mu = np.exp(beta0)
    pi = expit(delta0)
    ll = n_zero * np.log(pi + (1 - pi) * np.exp(-mu))
    ll = ll + len(y_pos) * np.log1p(-pi)
    ll = ll + y_pos.sum() * beta0 - len(y_pos) * mu - gammaln(y_pos + 1).sum()
    return ll


def oracle_grid_mle(kind: str, y: np.ndarray, lo: float = -4.0, hi: float = 4.0):
    """Dense grid-search MLE for tiny intercept-only probit / ZIP problems.

    Full coarse grid followed by local refinements down to step 1e-4; at
    most 2 free parameters and 20 observations.  Raises Separation when the
    maximum sits on the grid boundary (the likelihood diverges).
    Returns (coef array, log-likelihood at the maximum).
    """
    y = np.asarray(y, dtype=float)
    if len(y) > 20:
        raise TooLarge("grid oracle handles at most 20 observations")

    if kind == "probit":
        n1 = int((y == 1).sum())
        n0 = len(y) - n1
        center, half = (lo + hi) / 2, (hi - lo) / 2
        for step in (1e-3, 1e-4):
            grid = np.arange(center - half, center + half + step / 2, step)
            ll = n1 * log_ndtr(grid) + n0 * log_ndtr(-grid)
            k = int(np.argmax(ll))
            if step == 1e-3 and k in (0, len(grid) - 1):
                raise Separation("grid maximum at parameter boundary")
            center, half = float(grid[k]), 2 * step
        return np.array([center]), float(ll[k])

    if kind == "zip":
        cb, cd = (lo + hi) / 2, (lo + hi) / 2
        half = (hi - lo) / 2
        for step in _GRID_STEPS:
            gb = np.arange(cb - half, cb + half + step / 2, step)
            gd = np.arange(cd - half, cd + half + step / 2, step)
            ll = _zip_loglik_grid(y, gb[:, None], gd[None, :])
            kb, kd = np.unravel_index(int(np.argmax(ll)), ll.shape)
            if step == _GRID_STEPS[0] and (kb in (0, len(gb) - 1) or kd in (0, len(gd) - 1)):
                raise Separation("grid maximum at parameter boundary")
            cb, cd = float(gb[kb]), float(gd[kd])
            half = 2 * step
        return np.array([cb, cd]), float(ll[kb, kd])

    raise ConfigInvalid(f"unknown grid-oracle kind {kind!r}")
