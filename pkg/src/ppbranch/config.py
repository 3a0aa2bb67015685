"""JSON configuration files.

A config document has the keys ``predator_law``, ``prey_law``,
``predator_survival``, ``prey_survival``, ``carrying`` (nullable) and
``initial``. Bundled configs can be addressed by name (``example1`` ...).
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .model import (
    CompetitionFamily,
    CompetitionFunction,
    ModelConfig,
    OffspringLaw,
    ParameterError,
    SurvivalFamily,
    SurvivalFunction,
    build_g1,
    build_g2,
    build_table,
)

BUNDLED = ("example1", "example2", "example3")


class ConfigError(ValueError):
    """Malformed configuration document (bad JSON, missing or mistyped keys)."""


def _law(d: dict) -> OffspringLaw:
    kind = d["kind"]
    if kind == "geometric":
        law = OffspringLaw.geometric(d["p"])
    elif kind == "explicit":
        pmf = d["pmf"]
        if isinstance(pmf, dict):
            pmf = {int(k): v for k, v in pmf.items()}
        law = OffspringLaw.explicit(pmf)
    else:
        raise ConfigError(f"unknown offspring law kind {kind!r}")
    for key in ("mean", "variance"):
        if key in d and abs(float(d[key]) - getattr(law, key)) > 1e-9:
            raise ParameterError(f"stated {key} {d[key]} disagrees with the law ({getattr(law, key)})")
    return law


def _survival(d: dict, mu: float) -> SurvivalFunction:
    family = d["family"]
    rho1, rho2, gamma = float(d["rho1"]), float(d["rho2"]), float(d["gamma"])
    if family == SurvivalFamily.G1.value:
        return build_g1(rho1, rho2, gamma, mu)
    if family == SurvivalFamily.G2.value:
        return build_g2(rho1, rho2, gamma, mu)
    if family == SurvivalFamily.TABLE.value:
        return build_table(d["points"], rho1, rho2, gamma)
    raise ConfigError(f"unknown survival family {family!r}")


def _carrying(d: dict | None) -> CompetitionFunction | None:
    if d is None:
        return None
    try:
        family = CompetitionFamily(d["family"])
    except ValueError:
        raise ConfigError(f"unknown competition family {d['family']!r}") from None
    return CompetitionFunction(family, float(d["K"]), float(d.get("v", 1.0)))


def config_from_dict(doc: dict) -> ModelConfig:
    """Build a config; raises ConfigError for schema problems and
    ParameterError when a constructor rejects the model parameters."""
    try:
        pred_law = _law(doc["predator_law"])
        prey_law = _law(doc["prey_law"])
        initial = tuple(int(v) for v in doc["initial"])
        if len(initial) != 2:
            raise ConfigError("initial must hold exactly two counts")
        return ModelConfig(
            predator_law=pred_law,
            prey_law=prey_law,
            predator_survival=_survival(doc["predator_survival"], pred_law.mean),
            prey_survival=_survival(doc["prey_survival"], prey_law.mean),
            carrying=_carrying(doc.get("carrying")),
            initial=initial,
        )
    except KeyError as exc:
        raise ConfigError(f"missing key {exc.args[0]!r}") from None
    except (TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed config: {exc}") from None


def load_config(source: str | Path) -> ModelConfig:
    return config_from_dict(read_document(source))


def read_document(source: str | Path) -> dict:
    text = _read_text(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    return doc


def _read_text(source: str | Path) -> str:
    name = str(source)
    if name in BUNDLED:
        return resources.files("ppbranch").joinpath("data", f"{name}.json").read_text()
    return Path(source).read_text()


def dump_config(cfg: ModelConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2)
