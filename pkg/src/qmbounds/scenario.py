"""Scenario files: YAML (JSON is accepted too) describing a probe state and the checks to run.

Example::

    name: mspe-saturation
    modes: 2
    spectra: [[0.5, -0.5], [0.5, -0.5]]   # optional, defaults to +-1/2
    state:
      family: mspe_noon_product
      params: {counts: [2, 2]}
    direction: [1, 1]                      # optional
    entanglement: {P: [2, 2], partition: [[0], [1]]}
    checks: [mode_separable:saturated, {name: shot_noise_rank, equals: 2}]
    povm: {type: extremal_parity}
    theta: [0.2, 0.1]
    output: {report: report.json}
    seed: 0

Modes are numbered from 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import NonIntegerTargets, ScenarioError
from .hilbert import ModeConfig, QuantumState
from .states import (
    CLASSES,
    Direction,
    EntanglementSpec,
    lambda_sep_multinoon,
    mepe_multinoon,
    meps_state,
    msps_assignment,
    msps_state,
    mspe_noon_product,
    multinoon,
    noon,
    p_producible_noon_chain,
    sample_state,
    validate_partition,
)

CHECKS = (
    "shot_noise",
    "mode_separable",
    "p_producible",
    "heisenberg",
    "heisenberg_cross",
    "heisenberg_fixed",
    "partition",
    "particle_separable_state",
    "mode_separable_state",
    "lambda_separable_state",
    "cauchy_schwarz_state",
    "shot_noise_rank",
    "classical_fisher",
    "qfi_transform",
    "weighted_bound",
)

POVM_TYPES = ("extremal_parity", "computational", "projective", "sld_eigenbasis")

TOP_KEYS = {"name", "modes", "spectra", "state", "direction", "entanglement", "weight",
            "checks", "povm", "theta", "moments", "output", "seed"}


# --------------------------------------------------------------------------
# state families


def _need_direction(sc: "ScenarioConfig") -> Direction:
    if sc.direction is None:
        raise ScenarioError(f"state family {sc.state_family!r} needs a direction")
    return Direction(sc.direction)


def _build_msps(sc, p):
    if "assignment" in p:
        return msps_state(sc.config, p["assignment"])
    try:
        assignment = msps_assignment(p["targets"])
    except NonIntegerTargets as exc:
        raise ScenarioError(f"{exc}; for non-integer targets use the delocalized meps_state family") from exc
    return msps_state(sc.config, assignment)


def _build_meps(sc, p):
    return meps_state(sc.config, int(p["N"]), p["targets"])


def _build_mepe(sc, p):
    return mepe_multinoon(sc.config, p["counts"], _need_direction(sc))


def _build_pchain(sc, p):
    P = p.get("P")
    if P is None:
        if sc.entanglement is None or sc.entanglement.P is None:
            raise ScenarioError("p_producible_noon_chain needs P (in params or entanglement)")
        P = sc.entanglement.P
    return p_producible_noon_chain(sc.config, p["counts"], P)


def _build_lsep(sc, p):
    part = p.get("partition")
    if part is None:
        if sc.entanglement is None or sc.entanglement.partition is None:
            raise ScenarioError("lambda_sep_multinoon needs a partition (in params or entanglement)")
        part = sc.entanglement.partition
    return lambda_sep_multinoon(sc.config, p["counts"], part, _need_direction(sc))


def _build_multinoon(sc, p):
    return multinoon(sc.config, p["counts"], p.get("signs"))


def _build_noon(sc, p):
    return noon(sc.config, int(p.get("mode", 0)), int(p["n"]))


def _build_sample(sc, p):
    cls = p["class"]
    if cls not in CLASSES:
        raise ScenarioError(f"unknown sample class {cls!r}; expected one of {CLASSES}")
    return sample_state(sc.config, p["N"], cls, sc.entanglement, int(p.get("seed", sc.seed)))


# family name -> (required params, optional params, builder)
FAMILIES = {
    "msps_state": ((), ("assignment", "targets"), _build_msps),
    "meps_state": (("N", "targets"), (), _build_meps),
    "mspe_noon_product": (("counts",), (), lambda sc, p: mspe_noon_product(sc.config, p["counts"])),
    "mepe_multinoon": (("counts",), (), _build_mepe),
    "p_producible_noon_chain": (("counts",), ("P",), _build_pchain),
    "lambda_sep_multinoon": (("counts",), ("partition",), _build_lsep),
    "multinoon": (("counts",), ("signs",), _build_multinoon),
    "noon": (("n",), ("mode",), _build_noon),
    "sample": (("N", "class"), ("seed",), _build_sample),
}


# --------------------------------------------------------------------------
# config types


@dataclass(frozen=True)
class CheckSpec:
    name: str
    saturated: bool = False
    equals: float | None = None

    def to_plain(self):
        if self.equals is None:
            return f"{self.name}:saturated" if self.saturated else self.name
        out = {"name": self.name, "equals": self.equals}
        if self.saturated:
            out["saturated"] = True
        return out


def parse_check(item) -> CheckSpec:
    if isinstance(item, str):
        name, _, flag = item.partition(":")
        if flag not in ("", "saturated"):
            raise ScenarioError(f"unknown check modifier {flag!r} in {item!r}")
        spec = CheckSpec(name.strip(), flag == "saturated")
    elif isinstance(item, dict):
        unknown = set(item) - {"name", "saturated", "equals"}
        if unknown or "name" not in item:
            raise ScenarioError(f"malformed check entry {item!r}")
        eq = item.get("equals")
        spec = CheckSpec(str(item["name"]), bool(item.get("saturated", False)),
                         None if eq is None else _number(eq, "equals"))
    else:
        raise ScenarioError(f"malformed check entry {item!r}")
    if spec.name not in CHECKS:
        raise ScenarioError(f"unknown check {spec.name!r}; known checks: {', '.join(CHECKS)}")
    return spec


def _number(x, what: str):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenarioError(f"{what} must be a number, got {x!r}")
    return x


def _numbers(xs, what: str) -> tuple:
    if not isinstance(xs, (list, tuple)):
        raise ScenarioError(f"{what} must be a list of numbers")
    return tuple(_number(x, what) for x in xs)


def _matrix(rows, what: str) -> tuple:
    if not isinstance(rows, (list, tuple)):
        raise ScenarioError(f"{what} must be a list of rows")
    out = tuple(_numbers(r, what) for r in rows)
    if any(len(r) != len(out) for r in out):
        raise ScenarioError(f"{what} must be square")
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    config: ModeConfig
    state_family: str
    state_params: dict
    direction: tuple | None = None
    entanglement: EntanglementSpec | None = None
    weight: tuple | None = None
    checks: tuple = ()
    povm: dict | None = None
    theta: tuple | None = None
    moments: dict | None = None
    output: dict = field(default_factory=dict)
    seed: int = 0

    def build_state(self) -> QuantumState:
        _, _, builder = FAMILIES[self.state_family]
        try:
            return builder(self, self.state_params)
        except ScenarioError:
            raise
        except (ValueError, TypeError, KeyError) as exc:
            raise ScenarioError(f"cannot build state {self.state_family!r}: {exc}") from exc

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "modes": self.config.M,
            "spectra": [list(s) for s in self.config.spectra],
            "state": {"family": self.state_family, "params": _plain(self.state_params)},
            "checks": [c.to_plain() for c in self.checks],
            "seed": self.seed,
        }
        if self.direction is not None:
            out["direction"] = list(self.direction)
        if self.entanglement is not None:
            ent = {}
            e = self.entanglement
            if e.P is not None:
                ent["P"] = list(e.P)
            if e.partition is not None:
                ent["partition"] = [list(g) for g in e.partition]
            if e.Me is not None:
                ent["Me"] = e.Me
            if e.Pe is not None:
                ent["Pe"] = e.Pe
            out["entanglement"] = ent
        if self.weight is not None:
            out["weight"] = [list(r) for r in self.weight]
        if self.povm is not None:
            out["povm"] = _plain(self.povm)
        if self.theta is not None:
            out["theta"] = list(self.theta)
        if self.moments is not None:
            out["moments"] = _plain(self.moments)
        if self.output:
            out["output"] = dict(self.output)
        return out


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _parse_povm(p) -> dict:
    if not isinstance(p, dict) or p.get("type") not in POVM_TYPES:
        raise ScenarioError(f"povm needs a type from {POVM_TYPES}, got {p!r}")
    t = p["type"]
    allowed = {"type"} | ({"vectors"} if t == "projective" else set()) | ({"mode"} if t == "sld_eigenbasis" else set())
    if set(p) - allowed:
        raise ScenarioError(f"unexpected povm fields {sorted(set(p) - allowed)}")
    if t == "projective" and "vectors" not in p:
        raise ScenarioError("projective povm needs vectors")
    return dict(p)


def parse_scenario(data) -> ScenarioConfig:
    """Validate a scenario mapping and turn it into a ScenarioConfig."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
    try:
        spectra = data.get("spectra")
        if spectra is not None:
            spectra = tuple(_numbers(s, "spectra") for s in spectra)
        modes = data.get("modes")
        if modes is None and spectra is None:
            raise ScenarioError("scenario needs modes or spectra")
        config = ModeConfig.from_dict({"modes": modes, "spectra": spectra})
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"bad mode configuration: {exc}") from exc

    st = data.get("state")
    if not isinstance(st, dict) or "family" not in st:
        raise ScenarioError("scenario needs state.family")
    family = st["family"]
    if family not in FAMILIES:
        raise ScenarioError(f"unknown state family {family!r}; known: {', '.join(FAMILIES)}")
    params = st.get("params") or {}
    if not isinstance(params, dict) or set(st) - {"family", "params"}:
        raise ScenarioError("state must be {family, params}")
    required, optional, _ = FAMILIES[family]
    missing = [k for k in required if k not in params]
    extra = [k for k in params if k not in required and k not in optional]
    if missing or extra:
        raise ScenarioError(f"state {family!r}: missing {missing}, unexpected {extra}")
    if family == "msps_state" and ("assignment" in params) == ("targets" in params):
        raise ScenarioError("msps_state needs exactly one of assignment or targets")

    direction = data.get("direction")
    if direction is not None:
        direction = _numbers(direction, "direction")
        if len(direction) != config.M:
            raise ScenarioError("direction length must equal the number of modes")

    ent = data.get("entanglement")
    if ent is not None:
        if not isinstance(ent, dict) or set(ent) - {"P", "partition", "Me", "Pe"}:
            raise ScenarioError(f"malformed entanglement block {ent!r}")
        part = ent.get("partition")
        if part is not None:
            try:
                part = validate_partition(part, config.M)
            except ValueError as exc:
                raise ScenarioError(str(exc)) from exc
        P = ent.get("P")
        ent = EntanglementSpec(
            P=None if P is None else tuple(int(x) for x in _numbers(P, "P")),
            partition=part,
            Me=None if ent.get("Me") is None else int(ent["Me"]),
            Pe=None if ent.get("Pe") is None else int(ent["Pe"]),
        )

    weight = data.get("weight")
    if weight is not None:
        weight = _matrix(weight, "weight")
        if len(weight) != config.M:
            raise ScenarioError("weight matrix must be M x M")

    checks = data.get("checks") or []
    if not isinstance(checks, list):
        raise ScenarioError("checks must be a list")
    checks = tuple(parse_check(c) for c in checks)

    povm = data.get("povm")
    if povm is not None:
        povm = _parse_povm(povm)

    theta = data.get("theta")
    if theta is not None:
        theta = _numbers(theta, "theta")
        if len(theta) != config.M:
            raise ScenarioError("theta length must equal the number of modes")

    moments = data.get("moments")
    if moments is not None:
        if not isinstance(moments, dict) or "first" not in moments or set(moments) - {"first", "second"}:
            raise ScenarioError("moments must be {first, second}")
        moments = {"first": list(_numbers(moments["first"], "moments.first"))}
        if data["moments"].get("second") is not None:
            sec = data["moments"]["second"]
            moments["second"] = ([list(r) for r in _matrix(sec, "moments.second")]
                                 if sec and isinstance(sec[0], (list, tuple)) else list(_numbers(sec, "moments.second")))

    output = data.get("output") or {}
    if not isinstance(output, dict) or set(output) - {"report", "estimates", "summary"}:
        raise ScenarioError("output must be a mapping with report/estimates/summary paths")

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ScenarioError("seed must be a non-negative integer")

    name = str(data.get("name", "scenario"))
    return ScenarioConfig(name, config, family, dict(params), direction, ent, weight, checks,
                          povm, theta, moments, dict(output), seed)


def load_scenario(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"cannot parse {path}: {exc}") from exc
    return parse_scenario(data)


def dump_scenario(sc: ScenarioConfig, fmt: str = "yaml") -> str:
    if fmt == "json":
        return json.dumps(sc.to_dict(), indent=2)
    return yaml.safe_dump(sc.to_dict(), sort_keys=False)


def povm_vectors(spec: dict, dim: int) -> list:
    """Explicit projective vectors from a scenario entry; entries may be numbers or [re, im] pairs."""
    vecs = []
    for v in spec["vectors"]:
        arr = np.array([complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in v])
        if arr.size != dim:
            raise ScenarioError(f"povm vector of length {arr.size}, state dimension {dim}")
        vecs.append(arr / np.linalg.norm(arr))
    return vecs
