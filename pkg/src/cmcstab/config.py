"""Run configuration: TOML blocks for space, surface, solver, verify, sweep and output."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .ambient import AmbientSpace
from .errors import ConfigError, InvalidSpace

CONVENTION = "Jf+lambda f=0"

SURFACE_CONSTRUCTORS = {
    # constructor -> (allowed space kinds, allowed parameter keys)
    "round_sphere": (("SpaceForm",), {"radius", "H"}),
    "clifford_torus": (("SpaceForm",), {"H"}),
    "hopf_torus": (("ProductS2S1", "BergerSphere"), {"c_gamma"}),
    "slice_sphere": (("ProductS2R", "ProductS2S1"), {"t"}),
}

_TOP_KEYS = {"space", "surface", "solver", "verify", "output", "sweep"}
_SURFACE_KEYS = {"constructor", "params", "resolution", "resolutions"}
_SOLVER_KEYS = {"k", "tol", "max_iter", "shift_policy"}
_VERIFY_KEYS = {"tol_eq", "tol_verify", "families", "ladder", "min_order", "corrupt_potential"}
_OUTPUT_KEYS = {"directory", "formats"}
_SWEEP_KEYS = {"family", "ranges", "max_jobs", "resolution"}
_FORMATS = {"json", "csv", "off"}


def load_toml_text(text):
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from None


def _check_keys(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigError("expected a table", path)
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}", path)


@dataclass
class SolverConfig:
    k: int = 5
    tol: float = 1e-9
    max_iter: int = 500
    shift_policy: str = "bound"


@dataclass
class VerifyConfig:
    tol_eq: float = 1e-3
    tol_verify: float = 0.02
    families: list = field(default_factory=list)
    ladder: list = field(default_factory=list)
    min_order: float = 1.7
    corrupt_potential: float = 0.0


@dataclass
class RunConfig:
    space: AmbientSpace | None = None
    surface: dict | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    output_dir: str = "cmcstab-out"
    formats: tuple = ("json", "csv")
    sweep: dict | None = None
    raw: dict = field(default_factory=dict)

    @property
    def hash(self):
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _resolution(value, path):
    if isinstance(value, int):
        value = [value]
    if not isinstance(value, list) or not value or not all(isinstance(v, int) and v > 0 for v in value):
        raise ConfigError("resolution must be a positive integer or a list of them", path)
    return tuple(value)


def parse_config(data):
    """Validate a decoded TOML document and build a RunConfig."""
    _check_keys(data, _TOP_KEYS, "<root>")
    cfg = RunConfig(raw=data)
    if "space" in data:
        try:
            cfg.space = AmbientSpace.from_dict(data["space"])
        except InvalidSpace as exc:
            raise ConfigError(str(exc), "space") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "space") from None
    if "surface" in data:
        surf = data["surface"]
        _check_keys(surf, _SURFACE_KEYS, "surface")
        ctor = surf.get("constructor")
        if ctor not in SURFACE_CONSTRUCTORS:
            raise ConfigError(f"unknown constructor {ctor!r}", "surface.constructor")
        kinds, pkeys = SURFACE_CONSTRUCTORS[ctor]
        if cfg.space is not None and cfg.space.kind not in kinds:
            raise ConfigError(f"{ctor} is not available in {cfg.space.kind}", "surface.constructor")
        params = surf.get("params", {})
        _check_keys(params, pkeys, "surface.params")
        out = {"constructor": ctor, "params": {k: float(v) for k, v in params.items()}}
        if "resolution" in surf:
            out["resolution"] = _resolution(surf["resolution"], "surface.resolution")
        if "resolutions" in surf:
            if not isinstance(surf["resolutions"], list) or not surf["resolutions"]:
                raise ConfigError("resolutions must be a non-empty list", "surface.resolutions")
            out["resolutions"] = [_resolution(r, "surface.resolutions") for r in surf["resolutions"]]
        cfg.surface = out
    if "solver" in data:
        s = data["solver"]
        _check_keys(s, _SOLVER_KEYS, "solver")
        cfg.solver = SolverConfig(**s)
        if cfg.solver.k < 1:
            raise ConfigError("k must be >= 1", "solver.k")
        if not cfg.solver.tol > 0:
            raise ConfigError("tol must be > 0", "solver.tol")
        if cfg.solver.shift_policy not in ("bound", "potential"):
            raise ConfigError("shift_policy must be 'bound' or 'potential'", "solver.shift_policy")
    if "verify" in data:
        v = data["verify"]
        _check_keys(v, _VERIFY_KEYS, "verify")
        cfg.verify = VerifyConfig(**v)
        if cfg.verify.ladder:
            cfg.verify.ladder = [_resolution(r, "verify.ladder") for r in cfg.verify.ladder]
    if "output" in data:
        o = data["output"]
        _check_keys(o, _OUTPUT_KEYS, "output")
        cfg.output_dir = str(o.get("directory", cfg.output_dir))
        formats = tuple(o.get("formats", cfg.formats))
        bad = set(formats) - _FORMATS
        if bad:
            raise ConfigError(f"unsupported formats {sorted(bad)}", "output.formats")
        cfg.formats = formats
    if "sweep" in data:
        sw = data["sweep"]
        _check_keys(sw, _SWEEP_KEYS, "sweep")
        ranges = sw.get("ranges", {})
        _check_keys(ranges, {"kappa", "tau", "H", "c_gamma", "c"}, "sweep.ranges")
        parsed = {}
        for key, spec in ranges.items():
            if not (isinstance(spec, list) and len(spec) == 3):
                raise ConfigError("range must be [start, stop, steps]", f"sweep.ranges.{key}")
            start, stop, steps = spec
            if not isinstance(steps, int) or steps < 1:
                raise ConfigError("range needs at least one step", f"sweep.ranges.{key}")
            parsed[key] = (float(start), float(stop), steps)
        if not parsed:
            raise ConfigError("empty parameter range", "sweep.ranges")
        cfg.sweep = {
            "family": sw.get("family"),
            "ranges": parsed,
            "max_jobs": int(sw.get("max_jobs", 200)),
            "resolution": _resolution(sw["resolution"], "sweep.resolution") if "resolution" in sw else None,
        }
    return cfg


def load_config(path):
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    return parse_config(load_toml_text(text))
