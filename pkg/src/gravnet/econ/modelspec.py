"""Declarative model specifications and the plain-text spec-file grammar.

A spec file is `key = value` lines (# starts a comment); list values are
comma-separated.  Interactions use the `a:b` syntax and must reference
terms that also appear on their own.  Example::

    dependent  = ln_trade
    estimator  = heckman2s
    direction  = same
    regressors = ln_CC, ln_spl, ln_gdp_o, ln_gdp_d, ln_pop_o, ln_pop_d,
                 contig, colony, smctry, comlang, ln_dist

(long lists may be split across lines by ending a line with a comma).

Simultaneous-equation systems name their equations with `eqN.` prefixes::

    estimator  = threesls
    endogenous = ln_trade, ln_CC
    eq1.dependent  = ln_trade
    eq1.regressors = ln_CC, ...
    eq2.dependent  = ln_CC
    eq2.regressors = ln_trade, ...
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import SpecError

ESTIMATORS = ("ols", "heckman2s", "ppml", "zippml", "threesls", "reduced_form")
SYSTEM_ESTIMATORS = ("threesls", "reduced_form")
DIRECTIONS = ("same", "inverse")
LOG_POLICIES = ("shift1", "drop_zeros")

# direction = inverse swaps every measure-side variable for its
# transpose-direction twin
INVERSE_REWRITE = {
    "ln_CC": "ln_CC_inv",
    "ln_spl": "ln_spl_inv",
    "ln_diff": "ln_diff_inv",
    "cc": "cc_inv",
    "spl": "spl_inv",
    "diff": "diff_inv",
}


def interaction_parts(term: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in term.split(":"))


def rewrite_term(term: str, direction: str) -> str:
    if direction == "same":
        return term
    parts = [INVERSE_REWRITE.get(p, p) for p in interaction_parts(term)]
    return ":".join(parts)


@dataclass
class ModelSpec:
    """Single-equation model: dependent, regressors, estimator, options."""

    regressors: list[str]
    dependent: str = "ln_trade"
    estimator: str = "heckman2s"
    selection: list[str] = field(default_factory=lambda: ["ln_dist"])
    direction: str = "same"
    filters: dict[str, str] = field(default_factory=dict)
    alpha: float = 1.0
    log_policy: str = "shift1"

    def validate(self) -> None:
        if self.estimator not in ESTIMATORS:
            raise SpecError(f"unknown estimator {self.estimator!r}")
        if self.direction not in DIRECTIONS:
            raise SpecError(f"direction must be one of {DIRECTIONS}")
        if self.log_policy not in LOG_POLICIES:
            raise SpecError(f"log_policy must be one of {LOG_POLICIES}")
        if self.alpha < 0:
            raise SpecError("alpha must be nonnegative")
        if self.estimator in ("ols", "heckman2s") and self.dependent != "ln_trade":
            raise SpecError(f"estimator {self.estimator} models ln_trade, "
                            f"got dependent {self.dependent!r}")
        if self.estimator in ("ppml", "zippml") and self.dependent != "trade":
            raise SpecError(f"estimator {self.estimator} models trade in levels, "
                            f"got dependent {self.dependent!r}")
        if not self.regressors:
            raise SpecError("at least one regressor is required")
        if len(set(self.regressors)) != len(self.regressors):
            raise SpecError("duplicate regressor terms")
        if self.dependent in self.regressors:
            raise SpecError("dependent variable cannot appear among regressors")
        plain = {t for t in self.regressors if ":" not in t}
        for term in self.regressors:
            parts = interaction_parts(term)
            if len(parts) > 2:
                raise SpecError(f"interactions take exactly two factors: {term!r}")
            if len(parts) == 2:
                for p in parts:
                    if p not in plain:
                        raise SpecError(
                            f"interaction {term!r} references {p!r}, which is not "
                            f"a declared regressor")
        if not self.selection:
            raise SpecError("selection equation needs at least one term")


@dataclass
class EquationSpec:
    dependent: str
    regressors: list[str]


@dataclass
class EquationSystem:
    """Two or more equations with declared endogenous variables."""

    equations: list[EquationSpec]
    endogenous: list[str]
    estimator: str = "threesls"
    filters: dict[str, str] = field(default_factory=dict)
    alpha: float = 1.0
    log_policy: str = "shift1"
    direction: str = "same"

    def validate(self) -> None:
        if self.estimator not in SYSTEM_ESTIMATORS:
            raise SpecError(f"system estimator must be one of {SYSTEM_ESTIMATORS}")
        if len(self.equations) < 2:
            raise SpecError("an equation system needs at least two equations")
        if not self.endogenous:
            raise SpecError("declare the endogenous variables")
        deps = [eq.dependent for eq in self.equations]
        if len(set(deps)) != len(deps):
            raise SpecError("equations must have distinct dependents")
        for dep in deps:
            if dep not in self.endogenous:
                raise SpecError(f"dependent {dep!r} must be declared endogenous")
        for eq in self.equations:
            if len(set(eq.regressors)) != len(eq.regressors):
                raise SpecError(f"duplicate regressors in equation for {eq.dependent}")
            if eq.dependent in eq.regressors:
                raise SpecError(f"{eq.dependent} cannot be a regressor of its own equation")

    def exogenous_terms(self) -> list[str]:
        """Union of non-endogenous regressor terms, in first-seen order."""
        seen: list[str] = []
        endo = set(self.endogenous)
        for eq in self.equations:
            for term in eq.regressors:
                if term in endo or term in seen:
                    continue
                if any(p in endo for p in interaction_parts(term)):
                    continue
                seen.append(term)
        return seen


_KEY_RE = re.compile(r"^[A-Za-z0-9_.]+$")


def _parse_lines(text: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    pending_key = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if pending_key is not None:
            entries[pending_key] += " " + line
            if not line.endswith(","):
                pending_key = None
            continue
        if "=" not in line:
            raise SpecError(f"expected 'key = value', got: {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise SpecError(f"bad key {key!r}")
        entries[key.lower()] = value
        if value.endswith(","):
            pending_key = key.lower()
    return entries


def _split_list(value: str) -> list[str]:
    return [item.strip() for item in value.split(",") if item.strip()]


def _parse_filters(value: str) -> dict[str, str]:
    filters = {}
    for item in _split_list(value):
        if "=" not in item:
            raise SpecError(f"filter entries look like column=value, got {item!r}")
        col, v = (p.strip() for p in item.split("=", 1))
        filters[col] = v
    return filters


def parse_spec_text(text: str) -> ModelSpec | EquationSystem:
    entries = _parse_lines(text)
    estimator = entries.get("estimator", "heckman2s").lower()

    common = {
        "filters": _parse_filters(entries["filters"]) if "filters" in entries else {},
        "alpha": float(entries.get("alpha", "1.0")),
        "log_policy": entries.get("log_policy", "shift1"),
        "direction": entries.get("direction", "same"),
    }

    if estimator in SYSTEM_ESTIMATORS:
        eq_keys = sorted({k.split(".", 1)[0] for k in entries if k.startswith("eq")})
        equations = []
        for ek in eq_keys:
            try:
                dep = entries[f"{ek}.dependent"]
                regs = _split_list(entries[f"{ek}.regressors"])
            except KeyError as exc:
                raise SpecError(f"equation {ek} needs .dependent and .regressors") from exc
            equations.append(EquationSpec(dep, regs))
        system = EquationSystem(
            equations=equations,
            endogenous=_split_list(entries.get("endogenous", "")),
            estimator=estimator,
            **common,
        )
        system.validate()
        return system

    known = {"dependent", "regressors", "estimator", "selection", "direction",
             "filters", "alpha", "log_policy"}
    unknown = set(entries) - known
    if unknown:
        raise SpecError(f"unknown spec key(s): {', '.join(sorted(unknown))}")
    spec = ModelSpec(
        regressors=_split_list(entries.get("regressors", "")),
        dependent=entries.get("dependent", "ln_trade"),
        estimator=estimator,
        selection=_split_list(entries.get("selection", "ln_dist")) or ["ln_dist"],
        **common,
    )
    spec.validate()
    return spec


def load_spec(path) -> ModelSpec | EquationSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_spec_text(fh.read())
