"""Specification files: loading, validation and backend construction.

A specification is a UTF-8 JSON object::

    {
      "state_space": {"axes": [{"name": "x", "lower": -100, "upper": 100}, ...]},
      "horizon": {"t0": 0, "tf": 40},
      "fragment": "LTL_NO_NEXT",
      "propositions": {"s": {"kind": "box", "bounds": {"x": {"lo": -50, "hi": 50}}}},
      "formula": "(G s)",
      "backends": {
        "hj": {"grid": {"x": 91, "v": 91}, "dynamics": {"name": "double_integrator"},
               "cfl": 0.5, "profiles": {"full": {"grid": {...}}}},
        "hz": {"dt": 0.5, "N": 80,
               "dynamics": {"A": [[0, 1], [0, 0]], "B": [[0], [1]], "continuous": true,
                            "u_lo": [-1], "u_hi": [1]}}
      }
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from tltc import formula as F
from tltc import setexpr as S
from tltc.errors import HorizonMismatch, TltcError
from tltc.hj.backend import HjBackend
from tltc.hj.dynamics import make_dynamics
from tltc.hj.levelset import Grid
from tltc.hj.solver import HjConfig
from tltc.hz.backend import HzBackend
from tltc.hz.reach import LinearSystem

SPECS_DIR = Path(__file__).parent / "specs"


class SpecError(TltcError, ValueError):
    """The specification file is malformed or inconsistent."""


@dataclass
class Spec:
    space: S.StateSpace
    t0: float
    tf: float
    fragment: F.Fragment
    propositions: S.PropositionMap
    formula: F.Formula
    backends: dict[str, Any]
    path: Path | None = None


def load_spec(path) -> Spec:
    """Parse and validate a specification file.

    Raises:
        SpecError: missing fields, bad values, or a formula outside the
            declared fragment.
        FormulaSyntaxError: the formula does not parse.
        CycleError / UnboundProposition: bad proposition bindings.
    """
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SpecError(f"cannot read {path}: {e}") from e
    return spec_from_json(obj, path)


def spec_from_json(obj: dict, path: Path | None = None) -> Spec:
    try:
        space = S.space_from_json(obj["state_space"])
        t0 = float(obj["horizon"].get("t0", 0.0))
        tf = float(obj["horizon"]["tf"])
        fragment = F.Fragment.parse(obj.get("fragment", "LTL"))
        props = S.PropositionMap()
        for name, e in obj.get("propositions", {}).items():
            props = S.bind(props, name, S.from_json(e))
        text = obj["formula"]
        backends = dict(obj.get("backends", {}))
    except (KeyError, TypeError, AttributeError) as e:
        raise SpecError(f"malformed specification: missing or invalid field {e}") from e
    except ValueError as e:
        if isinstance(e, TltcError):
            raise
        raise SpecError(f"malformed specification: {e}") from e
    if not tf > t0:
        raise SpecError("horizon needs tf > t0")
    f = F.parse(text)
    bad = F.first_violation(f, fragment)
    if bad is not None:
        raise SpecError(f"formula leaves the declared fragment {fragment.value} at {F.render(bad)}")
    for name in F.free_propositions(f):
        props.resolve(name)
    for name, e in props.bindings.items():
        try:
            S.check_bounds(e, t0, tf, props)
        except ValueError as err:
            raise SpecError(f"proposition {name!r}: {err}") from err
    return Spec(space, t0, tf, fragment, props, f, backends, path)


def _profile(cfg: dict, profile: str | None) -> dict:
    if not profile or profile == "default":
        return cfg
    profiles = cfg.get("profiles", {})
    if profile not in profiles:
        raise SpecError(f"unknown grid profile {profile!r}; available: {sorted(profiles) or 'none'}")
    return {**cfg, **profiles[profile]}


def make_backend(spec: Spec, name: str, profile: str | None = None):
    """Instantiate the named backend from the spec's configuration."""
    if name not in spec.backends:
        raise SpecError(f"specification has no configuration for backend {name!r}")
    cfg = _profile(spec.backends[name], profile)
    try:
        if name == "hj":
            grid = Grid.from_space(spec.space, cfg["grid"])
            hc = HjConfig(grid, make_dynamics(cfg["dynamics"]), spec.t0, spec.tf,
                          cfl=float(cfg.get("cfl", 0.5)),
                          max_slices=int(cfg.get("max_slices", 256)),
                          store_every=cfg.get("store_every"))
            return HjBackend(spec.space, hc)
        if name == "hz":
            dt, N = float(cfg["dt"]), int(cfg["N"])
            if abs(N * dt - (spec.tf - spec.t0)) > 1e-9 * max(1.0, spec.tf - spec.t0):
                raise HorizonMismatch(f"N*dt = {N * dt} does not match horizon {spec.tf - spec.t0}")
            d = cfg["dynamics"]
            make = LinearSystem.from_continuous if d.get("continuous", False) else LinearSystem
            sys = make(np.asarray(d["A"], dtype=float), np.asarray(d["B"], dtype=float), dt,
                       d["u_lo"], d["u_hi"])
            return HzBackend(spec.space, sys, N, spec.t0, int(cfg.get("binary_cap", 20)))
    except (KeyError, TypeError) as e:
        raise SpecError(f"backend {name!r}: missing or invalid field {e}") from e
    except ValueError as e:
        if isinstance(e, TltcError):
            raise
        raise SpecError(f"backend {name!r}: {e}") from e
    raise SpecError(f"unknown backend {name!r}")


def shipped_spec(name: str) -> Path:
    return SPECS_DIR / name
