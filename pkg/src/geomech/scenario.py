"""Scenario files: validation and construction of the systems they name."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import SchemaError, UnknownScenario
from .mechanics import HamiltonianSpec, NaturalSystemSpec, to_hamiltonian
from . import models

KINDS = (
    "simulate",
    "maupertuis-verify",
    "contact-check",
    "reeb-verify",
    "periodic-search",
    "ellipsoid-verify",
    "moser-verify",
)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class NaturalSystem(_Strict):
    type: Literal["natural"]
    dim: int = Field(2, ge=1)
    potential: str = "quartic"
    field: float = 0.0

    @field_validator("field")
    @classmethod
    def _planar(cls, v, info):
        if v and info.data.get("dim", 2) != 2:
            raise ValueError("a uniform field needs dim = 2")
        return v


class HarmonicSystem(_Strict):
    type: Literal["harmonic"]
    a: List[float]
    b: List[float]
    blocks: Optional[List[int]] = None


class KeplerSystem(_Strict):
    type: Literal["kepler"]
    dim: int = Field(2, ge=2)
    gamma: float = Field(1.0, gt=0)


class NeumannSystem(_Strict):
    type: Literal["neumann"]
    a: List[float]


class CustomSystem(_Strict):
    type: Literal["custom-H"]
    dim: int = Field(ge=1)
    H: str


System = Annotated[
    Union[NaturalSystem, HarmonicSystem, KeplerSystem, NeumannSystem, CustomSystem],
    Field(discriminator="type"),
]


class Initial(_Strict):
    q: List[float]
    p: List[float]


class AlphaChoice(_Strict):
    form: Literal["p_dq", "-q_dp", "sym"]
    expect: Optional[Literal["ContactType", "Fails"]] = None


class Scenario(_Strict):
    name: str = Field(pattern=r"^[A-Za-z0-9_.-]+$")
    description: str = ""
    anchors: List[str] = []
    kind: Literal[KINDS]  # type: ignore[valid-type]
    system: System
    h: Optional[float] = None
    initial: Optional[Initial] = None
    alpha: List[AlphaChoice] = []
    options: Dict[str, object] = {}
    bounds: Dict[str, float] = {}
    seed: int = Field(0, ge=0, lt=2**64)


def parse_scenario(text: str) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON: {exc}") from None
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise SchemaError(str(exc)) from None


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    return parse_scenario(text)


def bundled_dir():
    return resources.files("geomech") / "scenarios"


def bundled_names() -> list:
    return sorted(p.name[:-5] for p in bundled_dir().iterdir() if p.name.endswith(".json"))


def bundled_scenario(name: str) -> Scenario:
    if name.endswith(".json"):
        name = name[:-5]
    if name not in bundled_names():
        raise UnknownScenario(f"no bundled scenario named {name!r}")
    return parse_scenario((bundled_dir() / f"{name}.json").read_text())


def resolve_scenario(ref: str) -> Scenario:
    """A path to a JSON file, or the name of a bundled scenario."""
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    if p.suffix == ".json" and p.parent != Path("."):
        raise SchemaError(f"no such file: {ref}")
    return bundled_scenario(p.name)


# ---------------------------------------------------------------------------
# System construction
# ---------------------------------------------------------------------------


def _sympy_functions(expr: str, names: list):
    import sympy as sp

    syms = sp.symbols(names)
    try:
        e = sp.sympify(expr, locals={n: s for n, s in zip(names, syms)})
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise SchemaError(f"cannot parse expression {expr!r}: {exc}") from None
    extra = e.free_symbols - set(syms)
    if extra:
        raise SchemaError(f"unknown symbols in {expr!r}: {sorted(map(str, extra))}")
    f = sp.lambdify(syms, e, "numpy")
    grads = [sp.lambdify(syms, sp.diff(e, s), "numpy") for s in syms]
    return f, grads


def natural_system(cfg: NaturalSystem) -> NaturalSystemSpec:
    n = cfg.dim
    name = cfg.potential
    if name == "quartic":
        sys = models.quartic_system(n)
        V, gV = sys.potential, sys.potential_grad
    elif name == "harmonic":
        V, gV = (lambda q: 0.5 * (q @ q)), (lambda q: np.array(q, dtype=float))
    elif name == "zero":
        V, gV = (lambda q: 0.0), (lambda q: np.zeros(n))
    else:
        names = [f"q{i + 1}" for i in range(n)]
        f, grads = _sympy_functions(name, names)
        V = lambda q: float(f(*q))  # noqa: E731
        gV = lambda q: np.array([float(g(*q)) for g in grads])  # noqa: E731
    if cfg.field:
        return models.uniform_field_system(cfg.field, V, gV, name=f"{name}-field")
    return NaturalSystemSpec(n, V, gV, name=name)


def custom_hamiltonian(cfg: CustomSystem) -> HamiltonianSpec:
    n = cfg.dim
    names = [f"q{i + 1}" for i in range(n)] + [f"p{i + 1}" for i in range(n)]
    f, grads = _sympy_functions(cfg.H, names)

    def grad(q, p):
        z = np.concatenate([q, p])
        return np.array([float(g(*z)) for g in grads])

    return HamiltonianSpec(
        n,
        lambda q, p: float(f(*np.concatenate([q, p]))),
        lambda q, p: grad(q, p)[:n],
        lambda q, p: grad(q, p)[n:],
        name="custom",
    )


def build_spec(cfg):
    """The model-level spec object for a system config (None for natural/custom)."""
    if isinstance(cfg, HarmonicSystem):
        return models.HarmonicSpec(tuple(cfg.a), tuple(cfg.b), tuple(cfg.blocks) if cfg.blocks else None)
    if isinstance(cfg, NeumannSystem):
        return models.NeumannSpec(tuple(cfg.a))
    return None


def build_hamiltonian(scn: Scenario) -> HamiltonianSpec:
    cfg = scn.system
    if isinstance(cfg, NaturalSystem):
        return to_hamiltonian(natural_system(cfg))
    if isinstance(cfg, HarmonicSystem):
        return models.harmonic_system(build_spec(cfg))
    if isinstance(cfg, KeplerSystem):
        return models.kepler_system(models.KeplerSpec(cfg.dim, cfg.gamma, scn.h if scn.h is not None else -0.5))
    if isinstance(cfg, CustomSystem):
        return custom_hamiltonian(cfg)
    return models.neumann_knorrer(build_spec(cfg)).hamiltonian


def system_dim(cfg) -> int:
    if isinstance(cfg, (HarmonicSystem, NeumannSystem)):
        return len(cfg.a)
    return cfg.dim


def scenario_schema() -> dict:
    return Scenario.model_json_schema()


__all__ = [
    "KINDS",
    "Scenario",
    "NaturalSystem",
    "HarmonicSystem",
    "KeplerSystem",
    "NeumannSystem",
    "CustomSystem",
    "Initial",
    "AlphaChoice",
    "parse_scenario",
    "load_scenario",
    "bundled_names",
    "bundled_scenario",
    "resolve_scenario",
    "natural_system",
    "custom_hamiltonian",
    "build_spec",
    "build_hamiltonian",
    "system_dim",
    "scenario_schema",
]
