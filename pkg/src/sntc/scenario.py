"""Scenario configs, the task runner, and CSV/JSON/plot-script emitters."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np
import yaml

from .continuation import (
    EQUILIBRIUM,
    ContinuationSettings,
    Curve,
    continue_equilibrium,
    continue_fold_curve,
    continue_hopf_curve,
    continue_tc_curve,
    defining_residual,
    fold_seed,
    hopf_seed,
    tc_seed,
)
from .errors import ConfigurationError, InvalidConstantsError, PreconditionError, SntcError
from .integrate import Section, Trajectory, integrate, long_run_outcome, write_trajectory_csv
from .models import (
    BUILTIN_SYSTEMS,
    NORMAL_FORM_KINDS,
    NormalFormId,
    get_system,
    kooi_boundary_equilibria,
    kooi_coexistence_equilibrium,
    oracle_fold_curve,
    oracle_fold_state,
)
from .system import SystemDef, fd_sweep, resolve_params
from .testfunctions import (
    CODIM2_KINDS,
    FOLD,
    HOPF,
    SNTC_DOUBLE_ZERO,
    SNTC_SINGLE_ZERO,
    TRANSCRITICAL,
    SpecialPoint,
)

__all__ = [
    "CONFIG_SCHEMA",
    "ScenarioConfig",
    "TaskResult",
    "RunReport",
    "load_config",
    "bundled_scenarios",
    "run_scenario",
    "emit_curve_csv",
    "read_curve_csv",
    "verify_special_record",
    "output_root",
    "OUTPUT_ROOT_ENV",
]

log = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "SNTC_OUTPUT_ROOT"

TASK_TYPES = ("continue-equilibrium", "continue-fold", "continue-tc", "continue-hopf",
              "integrate", "detect-codim2", "fd-check")
CURVE_TASKS = TASK_TYPES[:4]
_CURVE_KIND = {"continue-equilibrium": EQUILIBRIUM, "continue-fold": FOLD,
               "continue-tc": TRANSCRITICAL, "continue-hopf": HOPF}

_NUM = {"type": "number"}
_RANGE = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_PARAMS = {"type": "object", "additionalProperties": _NUM}
_SETTINGS = {
    "type": "object",
    "properties": {f.name: _NUM for f in fields(ContinuationSettings)},
    "additionalProperties": False,
}
_SEED = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "state": {"type": "array", "items": _NUM, "minItems": 1},
                "params": _PARAMS,
                "q": {"type": "array", "items": _NUM},
                "pinned": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "transversal": {"type": "integer", "minimum": 0},
            },
            "required": ["state"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "from": {"type": "string"},
                "kind": {"type": "string"},
                "index": {"type": "integer", "minimum": 0},
            },
            "required": ["from"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "equilibrium": {"enum": ["washout", "boundary", "coexistence"]},
                "index": {"type": "integer", "minimum": 0},
                "params": _PARAMS,
            },
            "required": ["equilibrium"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "oracle": {
                    "type": "object",
                    "properties": {"b": _NUM, "branch": {"enum": [-1, 1]}},
                    "required": ["b"],
                    "additionalProperties": False,
                },
            },
            "required": ["oracle"],
            "additionalProperties": False,
        },
    ]
}
_TASK = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_-]+$"},
        "type": {"enum": list(TASK_TYPES)},
        "system": {"type": "string"},
        "constants": _PARAMS,
        "params": _PARAMS,
        "settings": _SETTINGS,
        "seed": _SEED,
        "free": {"type": "string"},
        "range": _RANGE,
        "pair": {"type": "array", "items": {"type": "string"}, "minItems": 2, "maxItems": 2},
        "bounds": {"type": "object", "additionalProperties": _RANGE},
        "direction": {"enum": [1, -1, "both"]},
        "pinned": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "hopf_tol": {"type": "number", "exclusiveMinimum": 0},
        "oracle_tol": {"type": "number", "exclusiveMinimum": 0},
        "oracle_range": _RANGE,
        "perturb": {
            "type": "object",
            "properties": {
                "scale": _NUM,
                "add": {"type": "array", "items": _NUM},
            },
            "additionalProperties": False,
        },
        "t_end": {"type": "number", "exclusiveMinimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "stride": {"type": "integer", "minimum": 1},
        "section": {
            "type": "object",
            "properties": {
                "component": {"type": ["string", "integer"]},
                "value": _NUM,
                "direction": {"enum": [1, -1]},
            },
            "required": ["component", "value"],
            "additionalProperties": False,
        },
        "curves": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "match_tol": {"type": "number", "exclusiveMinimum": 0},
        "points": {"type": "integer", "minimum": 1},
        "rng_seed": {"type": "integer", "minimum": 0},
        "state_box": {"type": "array", "items": _RANGE},
        "param_spread": {"type": "number", "minimum": 0},
    },
    "required": ["id", "type"],
    "additionalProperties": False,
}
CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "description": {"type": "string"},
        "system": {"type": "string"},
        "constants": _PARAMS,
        "params": _PARAMS,
        "settings": _SETTINGS,
        "output": {"type": "string"},
        "tasks": {"type": "array", "items": _TASK, "minItems": 1},
    },
    "required": ["name", "system", "tasks"],
    "additionalProperties": False,
}

# which task types may seed which; "from" references must point backwards
_SEED_SOURCES = {
    "continue-equilibrium": CURVE_TASKS,
    "continue-fold": ("continue-equilibrium", "continue-fold"),
    "continue-tc": ("continue-equilibrium", "continue-tc"),
    "continue-hopf": ("continue-equilibrium", "continue-hopf", "continue-tc"),
    "integrate": CURVE_TASKS,
}


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


@dataclass
class ScenarioConfig:
    """A validated scenario: default system and parameters plus a task list."""

    name: str
    system: str
    tasks: list[dict[str, Any]]
    constants: dict[str, float] = field(default_factory=dict)
    params: dict[str, float] = field(default_factory=dict)
    settings: dict[str, float] = field(default_factory=dict)
    output: str | None = None
    description: str = ""
    source: str | None = None

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], source: str | None = None) -> "ScenarioConfig":
        if not isinstance(data, Mapping):
            raise ConfigurationError(f"{source or 'config'}: top level must be a mapping")
        validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            lines = [f"{_path(e.absolute_path)}: {_schema_message(e)}" for e in errors[:10]]
            raise ConfigurationError(f"{source or 'config'} is invalid:\n  " + "\n  ".join(lines))
        cfg = cls(
            name=data["name"],
            system=data["system"],
            tasks=[dict(t) for t in data["tasks"]],
            constants=dict(data.get("constants", {})),
            params=dict(data.get("params", {})),
            settings=dict(data.get("settings", {})),
            output=data.get("output"),
            description=data.get("description", ""),
            source=source,
        )
        cfg.validate()
        return cfg

    def task_system(self, task: Mapping[str, Any]) -> tuple[str, dict[str, float]]:
        if "system" in task:
            return task["system"], dict(task.get("constants", {}))
        consts = dict(self.constants)
        consts.update(task.get("constants", {}))
        return self.system, consts

    def task_params(self, task: Mapping[str, Any]) -> dict[str, float]:
        p = {} if "system" in task else dict(self.params)
        p.update(task.get("params", {}))
        return p

    def task_settings(self, task: Mapping[str, Any]) -> ContinuationSettings:
        s = dict(self.settings)
        s.update(task.get("settings", {}))
        for key in ("newton_max_iter", "max_points", "grow_iters"):
            if key in s:
                s[key] = int(s[key])
        return ContinuationSettings(**s)

    def validate(self) -> None:
        """Semantic checks: names exist for the system, seeds fit, references resolve."""
        seen: dict[str, str] = {}
        for i, task in enumerate(self.tasks):
            where = f"tasks[{i}]"
            tid = task["id"]
            if tid in seen:
                raise ConfigurationError(f"{where}.id: duplicate task id '{tid}'")
            sname, consts = self.task_system(task)
            try:
                sys = get_system(sname, **consts)
            except (ConfigurationError, InvalidConstantsError) as exc:
                raise ConfigurationError(f"{where}.system: {exc}") from None
            try:
                params = resolve_params(sys, self.task_params(task))
            except ConfigurationError as exc:
                raise ConfigurationError(f"{where}.params: {exc}") from None
            try:
                self.task_settings(task)
            except (ConfigurationError, TypeError) as exc:
                raise ConfigurationError(f"{where}.settings: {exc}") from None
            self._check_task(where, task, sys, params, seen)
            seen[tid] = task["type"]

    def _check_task(self, where, task, sys: SystemDef, params, seen) -> None:
        ttype = task["type"]
        names = sys.param_names

        def need_param(key, name):
            if name not in names:
                raise ConfigurationError(f"{where}.{key}: unknown parameter '{name}' for system '{sys.name}'")

        if ttype == "continue-equilibrium":
            if "free" not in task:
                raise ConfigurationError(f"{where}.free: required for continue-equilibrium")
            need_param("free", task["free"])
            if "range" in task and not task["range"][0] < task["range"][1]:
                raise ConfigurationError(f"{where}.range: lower bound must be below upper bound")
        if ttype in ("continue-fold", "continue-tc", "continue-hopf"):
            pair = task.get("pair") or sys.default_pair
            if pair is None:
                raise ConfigurationError(f"{where}.pair: required for system '{sys.name}'")
            if pair[0] == pair[1]:
                raise ConfigurationError(f"{where}.pair: parameters must be distinct")
            for name in pair:
                need_param("pair", name)
        for name, rng in task.get("bounds", {}).items():
            need_param(f"bounds.{name}", name)
            if not rng[0] < rng[1]:
                raise ConfigurationError(f"{where}.bounds.{name}: lower bound must be below upper bound")
        for k in task.get("pinned", []):
            if k not in sys.invariant_components:
                raise ConfigurationError(f"{where}.pinned: component {k} is not invariant in '{sys.name}'")
        if ttype in _SEED_SOURCES:
            if "seed" not in task:
                raise ConfigurationError(f"{where}.seed: required for {ttype}")
            self._check_seed(f"{where}.seed", task["seed"], ttype, sys, seen)
        elif "seed" in task:
            raise ConfigurationError(f"{where}.seed: not used by {ttype}")
        if ttype == "integrate":
            sec = task.get("section")
            if sec is not None:
                c = sec["component"]
                if isinstance(c, str) and c not in sys.state_names:
                    raise ConfigurationError(f"{where}.section.component: unknown state '{c}'")
                if isinstance(c, int) and not 0 <= c < sys.dim:
                    raise ConfigurationError(f"{where}.section.component: index {c} out of range")
            add = task.get("perturb", {}).get("add")
            if add is not None and len(add) != sys.dim:
                raise ConfigurationError(f"{where}.perturb.add: expected {sys.dim} entries, got {len(add)}")
        if ttype == "detect-codim2":
            for j, ref in enumerate(task.get("curves", [])):
                if seen.get(ref) not in CURVE_TASKS:
                    raise ConfigurationError(f"{where}.curves[{j}]: '{ref}' is not an earlier curve task")
            if "curves" not in task:
                raise ConfigurationError(f"{where}.curves: required for detect-codim2")
        if ttype == "fd-check" and "state_box" in task and len(task["state_box"]) != sys.dim:
            raise ConfigurationError(f"{where}.state_box: expected {sys.dim} ranges")
        if "oracle_tol" in task and sys.name not in NORMAL_FORM_KINDS:
            raise ConfigurationError(f"{where}.oracle_tol: system '{sys.name}' has no closed-form fold curve")

    def _check_seed(self, where, seed, ttype, sys, seen) -> None:
        if "state" in seed:
            if len(seed["state"]) != sys.dim:
                raise ConfigurationError(f"{where}.state: expected {sys.dim} entries, got {len(seed['state'])}")
            try:
                resolve_params(sys, seed.get("params", {}))
            except ConfigurationError as exc:
                raise ConfigurationError(f"{where}.params: {exc}") from None
            if "q" in seed and len(seed["q"]) != sys.dim:
                raise ConfigurationError(f"{where}.q: expected {sys.dim} entries")
            if ttype == "continue-tc" and ("pinned" not in seed or "transversal" not in seed):
                raise ConfigurationError(f"{where}: explicit transcritical seeds need 'pinned' and 'transversal'")
            for k in seed.get("pinned", []) + ([seed["transversal"]] if "transversal" in seed else []):
                if k not in sys.invariant_components:
                    raise ConfigurationError(f"{where}: component {k} is not invariant in '{sys.name}'")
        elif "from" in seed:
            src = seen.get(seed["from"])
            if src is None:
                raise ConfigurationError(f"{where}.from: '{seed['from']}' is not an earlier task")
            if src not in _SEED_SOURCES[ttype]:
                raise ConfigurationError(f"{where}.from: a {src} task cannot seed {ttype}")
        elif "equilibrium" in seed:
            if sys.name != "kooi":
                raise ConfigurationError(f"{where}.equilibrium: only available for the chemostat system")
        elif "oracle" in seed:
            if sys.name not in NORMAL_FORM_KINDS:
                raise ConfigurationError(f"{where}.oracle: system '{sys.name}' is not a normal form")
            if ttype != "continue-fold":
                raise ConfigurationError(f"{where}.oracle: oracle seeds only start fold curves")


def _schema_message(err: jsonschema.ValidationError) -> str:
    if err.validator == "oneOf" and err.absolute_path and err.absolute_path[-1] == "seed":
        return "seed must give one of: state, from, equilibrium, oracle"
    return err.message


def load_config(spec: str | Path | Mapping[str, Any]) -> ScenarioConfig:
    """Load a config from a mapping, a YAML path, or a bundled scenario name."""
    if isinstance(spec, Mapping):
        return ScenarioConfig.from_mapping(spec)
    path = Path(spec)
    if path.is_file():
        text, source = path.read_text(), str(path)
    else:
        bundled = bundled_scenarios()
        if str(spec) not in bundled:
            raise ConfigurationError(
                f"'{spec}' is neither a file nor a bundled scenario ({', '.join(sorted(bundled))})")
        text, source = bundled[str(spec)], f"bundled:{spec}"
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{source}: YAML parse error: {exc}") from None
    return ScenarioConfig.from_mapping(data, source)


def bundled_scenarios() -> dict[str, str]:
    """Bundled scenario name -> YAML text."""
    out = {}
    for entry in resources.files("sntc").joinpath("scenarios").iterdir():
        if entry.name.endswith(".yaml"):
            out[entry.name[:-5]] = entry.read_text()
    return dict(sorted(out.items()))


def output_root() -> Path:
    import os

    return Path(os.environ.get(OUTPUT_ROOT_ENV, "sntc-output"))


# --------------------------------------------------------------------------
# report
# --------------------------------------------------------------------------

@dataclass
class TaskResult:
    id: str
    type: str
    status: str = "pending"
    message: str = ""
    files: list[str] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_json(self) -> dict:
        # elapsed time is left out so report.json stays reproducible
        return {"id": self.id, "type": self.type, "status": self.status, "message": self.message,
                "files": list(self.files), "summary": _clean(self.summary)}


@dataclass
class RunReport:
    scenario: str
    output_dir: Path
    tasks: list[TaskResult] = field(default_factory=list)
    specials: list[dict] = field(default_factory=list)
    manifest: dict[str, str] = field(default_factory=dict)
    created: str = ""

    @property
    def ok(self) -> bool:
        return all(t.ok for t in self.tasks)

    def task(self, tid: str) -> TaskResult:
        for t in self.tasks:
            if t.id == tid:
                return t
        raise KeyError(tid)

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "ok": self.ok, "tasks": [t.to_json() for t in self.tasks],
                "specials": self.specials}


def _clean(v):
    if isinstance(v, Mapping):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# --------------------------------------------------------------------------
# CSV emission
# --------------------------------------------------------------------------

_TEST_COLUMNS = ("gamma", "alpha", "beta_cusp", "beta_bt", "max_re_eig")


def _fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else ""


def emit_curve_csv(curve: Curve, path: str | Path) -> Path:
    """Write a curve as CSV: a ``# system=... kind=... params=...`` line, a
    column header, one row per point, then ``# SPECIAL`` comment rows.

    Columns are ``index``, the active parameters, the state, then
    ``gamma, alpha, beta_cusp, beta_bt, max_re_eig``; Hopf curves add
    ``omega``. Test functions not computed on a curve kind are left empty.
    """
    if len(curve.points) == 0:
        raise PreconditionError("cannot emit an empty curve")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sys = curve.system
    fixed = ",".join(f"{k}={_fmt(v)}" for k, v in curve.params.items() if k not in curve.active)
    cols = ["index", *curve.active, *sys.state_names, *_TEST_COLUMNS]
    extra = ("omega",) if curve.kind == HOPF else ()
    cols += list(extra)
    buf = io.StringIO()
    buf.write(f"# system={sys.name} kind={curve.kind} params={fixed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    on_branch = curve.kind == EQUILIBRIUM
    for i, pt in enumerate(curve.points):
        tv = pt.testvals
        row = [str(i)] + [_fmt(pt.params[k]) for k in curve.active] + [_fmt(v) for v in pt.x]
        for c in _TEST_COLUMNS:
            if c == "max_re_eig":
                row.append(_fmt(pt.max_re_eig))
            elif on_branch and c != "gamma":
                row.append("")
            else:
                row.append(_fmt(tv.get(c)))
        for c in extra:
            row.append(_fmt(pt.aux.get(c, tv.get(c))))
        w.writerow(row)
    for sp in curve.specials:
        loc = " ".join(f"{k}={_fmt(sp.params[k])}" for k in curve.active)
        buf.write(f"# SPECIAL kind={sp.kind} {loc}\n")
    path.write_text(buf.getvalue())
    return path


def read_curve_csv(path: str | Path) -> dict[str, Any]:
    """Parse a file written by :func:`emit_curve_csv` (columns as float arrays)."""
    lines = Path(path).read_text().splitlines()
    header = dict(kv.split("=", 1) for kv in lines[0][2:].split(" ", 2))
    specials = []
    body = []
    for ln in lines[1:]:
        if ln.startswith("# SPECIAL"):
            fields_ = dict(kv.split("=", 1) for kv in ln[len("# SPECIAL "):].split())
            specials.append({k: (v if k == "kind" else float(v)) for k, v in fields_.items()})
        else:
            body.append(ln)
    rows = list(csv.reader(body))
    names = rows[0]
    cols = {n: np.array([float(r[j]) if r[j] != "" else np.nan for r in rows[1:]]) for j, n in enumerate(names)}
    return {"system": header.get("system"), "kind": header.get("kind"), "params": header.get("params", ""),
            "columns": cols, "names": names, "specials": specials}


# --------------------------------------------------------------------------
# plot scripts
# --------------------------------------------------------------------------

_PLOT_PRELUDE = '''"""Standalone plot script generated by sntc; reads only the CSV files next to it."""
import csv
import os

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read_curve(name):
    with open(os.path.join(HERE, name)) as fh:
        lines = fh.read().splitlines()
    specials, body = [], []
    for ln in lines[1:]:
        if ln.startswith("# SPECIAL"):
            specials.append(dict(kv.split("=", 1) for kv in ln[len("# SPECIAL "):].split()))
        elif not ln.startswith("#"):
            body.append(ln)
    rows = list(csv.reader(body))
    cols = {n: [float(r[j]) if r[j] else float("nan") for r in rows[1:]] for j, n in enumerate(rows[0])}
    return cols, specials

'''

_STYLE = {"Fold": ("k", "-", "SN"), "Transcritical": ("tab:blue", "--", "TC"),
          "Hopf": ("tab:red", "-.", "HB"), "Equilibrium": ("0.3", "-", "equilibria")}


def _diagram_script(entries: list[tuple[str, str, tuple[str, ...]]], title: str, png: str) -> str:
    """Curves of one or two active parameters, codimension-two points marked."""
    items = ",\n    ".join(repr(e) for e in entries)
    return _PLOT_PRELUDE + f'''STYLE = {_STYLE!r}
CURVES = [
    {items},
]
CODIM2 = {list(CODIM2_KINDS)!r}

fig, ax = plt.subplots(figsize=(6, 4.5))
used = set()
for fname, kind, active in CURVES:
    cols, specials = read_curve(fname)
    color, ls, label = STYLE.get(kind, ("k", "-", kind))
    if len(active) == 2:
        xs, ys = cols[active[0]], cols[active[1]]
    else:
        xs, ys = cols[active[0]], cols[[c for c in cols if c not in ("index", active[0])][0]]
    ax.plot(xs, ys, color=color, ls=ls, label=None if label in used else label)
    used.add(label)
    for sp in specials:
        mark = "o" if sp["kind"] in CODIM2 else "s"
        y = float(sp[active[1]]) if len(active) == 2 else None
        if y is not None:
            ax.plot(float(sp[active[0]]), y, mark, color=color, mfc="white")
            ax.annotate(sp["kind"], (float(sp[active[0]]), y), fontsize=7,
                        xytext=(4, 4), textcoords="offset points")
ax.set_xlabel(CURVES[0][2][0])
ax.set_ylabel(CURVES[0][2][1] if len(CURVES[0][2]) == 2 else "state")
ax.set_title({title!r})
ax.legend(loc="best", fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(HERE, {png!r}), dpi=150)
'''


def _trajectory_script(fname: str, title: str, scales: dict[str, float], png: str) -> str:
    # raw densities in the CSV; the script divides by the reference scales
    return _PLOT_PRELUDE + f'''SCALES = {scales!r}

with open(os.path.join(HERE, {fname!r})) as fh:
    rows = [r for r in csv.reader(ln for ln in fh if not ln.startswith("#"))]
names = rows[0]
data = {{n: [float(r[j]) for r in rows[1:]] for j, n in enumerate(names)}}
fig, ax = plt.subplots(figsize=(7, 3.5))
for n in names[1:]:
    s = SCALES.get(n, 1.0)
    ax.plot(data["t"], [v / s for v in data[n]], label=n if s == 1.0 else f"{{n}} (scaled)")
ax.set_xlabel("t")
ax.set_title({title!r})
ax.legend(loc="best", fontsize=8)
fig.tight_layout()
fig.savefig(os.path.join(HERE, {png!r}), dpi=150)
'''


# --------------------------------------------------------------------------
# special-point records
# --------------------------------------------------------------------------

def _record(sp: SpecialPoint, task_id: str) -> dict:
    rec = sp.to_json()
    rec["task"] = task_id
    rec["location"] = {k: float(sp.params[k]) for k in sp.active}
    diag = sp.diagnostics
    if "normalized" in diag:
        rec["diagnostics"]["normalized"] = _clean(diag["normalized"])
    for key in ("candidate", "ambiguous", "alpha_one_sided"):
        if diag.get(key):
            rec["diagnostics"][key] = True
    return rec


def verify_special_record(record: Mapping[str, Any], sys: SystemDef | None = None) -> float:
    """Recompute the defining residual of a special-point JSON record.

    Fold-type points use the stored null vector ``q``, transcritical-type
    points the stored transversal component, and Hopf points the real part
    of the eigenvalue pair closest to the imaginary axis.
    """
    if sys is None:
        sys = get_system(record["system"])
    x = np.asarray(record["state"], dtype=float)
    params = resolve_params(sys, record["params"])
    if record.get("q") is not None:
        return defining_residual(sys, FOLD, x, params, q=record["q"])
    if record.get("transversal") is not None:
        return defining_residual(sys, TRANSCRITICAL, x, params, transversal=int(record["transversal"]))
    res = defining_residual(sys, EQUILIBRIUM, x, params)
    if record.get("kind") == HOPF:
        eig = np.linalg.eigvals(sys.jac(x, params))
        pair = [e for e in eig if e.imag > 0]
        if not pair:
            return math.inf
        res = max(res, min(abs(e.real) for e in pair))
    return res


# --------------------------------------------------------------------------
# runner
# --------------------------------------------------------------------------

class _Skip(Exception):
    pass


class _Runner:
    def __init__(self, cfg: ScenarioConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.results: dict[str, Any] = {}
        self.status: dict[str, str] = {}
        self.specials: list[dict] = []
        self.diagram: list[tuple[str, str, tuple[str, ...]]] = []

    # seeds ---------------------------------------------------------------

    def _source_special(self, seed, kinds) -> SpecialPoint:
        ref = seed["from"]
        if self.status.get(ref) != "ok":
            raise _Skip(f"seed task '{ref}' did not succeed")
        curve = self.results[ref]
        want = seed.get("kind")
        cands = [sp for sp in curve.specials if (sp.kind == want if want else sp.kind in kinds)]
        idx = seed.get("index", 0)
        if idx >= len(cands):
            raise PreconditionError(f"task '{ref}' has {len(cands)} special(s) of kind {want or kinds}, "
                                    f"index {idx} requested")
        return cands[idx]

    def _explicit_state(self, seed, sys, params) -> tuple[np.ndarray, dict[str, float]]:
        p = dict(params)
        p.update(seed.get("params", {}))
        if "state" in seed:
            return np.asarray(seed["state"], dtype=float), p
        kind = seed["equilibrium"]
        if kind == "washout":
            return np.array([p["N_r"], 0.0, 0.0]), p
        if kind == "coexistence":
            x = kooi_coexistence_equilibrium(p)
            if x is None:
                raise PreconditionError("no coexistence equilibrium at these parameters")
            return x, p
        eqs = kooi_boundary_equilibria(p)
        idx = seed.get("index", 0)
        if idx >= len(eqs):
            raise PreconditionError(f"{len(eqs)} predator-free equilibria with R > 0, index {idx} requested")
        return eqs[idx], p

    # tasks ---------------------------------------------------------------

    def run_task(self, task, res: TaskResult) -> None:
        sname, consts = self.cfg.task_system(task)
        sys = get_system(sname, **consts)
        params = resolve_params(sys, self.cfg.task_params(task))
        ttype = task["type"]
        if ttype in CURVE_TASKS:
            curve = self._curve_task(task, sys, params)
            self.results[task["id"]] = curve
            self._emit_curve(task, curve, res)
        elif ttype == "integrate":
            self._integrate_task(task, sys, params, res)
        elif ttype == "detect-codim2":
            self._codim2_task(task, res)
        else:
            box = task.get("state_box")
            rep = fd_sweep(sys, task.get("points", 100), task.get("rng_seed", 0), task.get("tol", 1e-5),
                           None if box is None else [tuple(b) for b in box], task.get("param_spread", 0.1))
            res.summary.update(rep)

    def _curve_task(self, task, sys, params) -> Curve:
        ttype = task["type"]
        settings = self.cfg.task_settings(task)
        seed = task["seed"]
        bounds = {k: tuple(v) for k, v in task.get("bounds", {}).items()} or None
        direction = task.get("direction", 1 if ttype == "continue-equilibrium" else "both")
        pair = tuple(task["pair"]) if "pair" in task else sys.default_pair
        if ttype == "continue-equilibrium":
            if "from" in seed:
                src = self._source_special(seed, (FOLD, TRANSCRITICAL, HOPF))
                x, p = src.x, dict(src.params)
            else:
                x, p = self._explicit_state(seed, sys, params)
            pinned = task.get("pinned")
            return continue_equilibrium(sys, x, p, task["free"], tuple(task["range"]) if "range" in task else None,
                                        settings, pinned=pinned, direction=direction)
        if ttype == "continue-fold":
            if "from" in seed:
                sd = self._source_special(seed, (FOLD,))
                if sd.kind != FOLD:
                    sd = fold_seed(sys, sd.x, sd.params, pair, sd.q, sd.pinned, settings)
            elif "oracle" in seed:
                nf = NormalFormId(sys.name, dict(self.cfg.task_system(task)[1]))
                b = float(seed["oracle"]["b"])
                branch = seed["oracle"].get("branch", 1)
                p = dict(params, a=oracle_fold_curve(nf, b, branch), b=b)
                sd = fold_seed(sys, oracle_fold_state(nf, b, branch), p, pair, settings=settings)
            else:
                x, p = self._explicit_state(seed, sys, params)
                sd = fold_seed(sys, x, p, pair, seed.get("q"), seed.get("pinned"), settings)
            return continue_fold_curve(sys, sd, settings, pair=pair, bounds=bounds, direction=direction)
        if ttype == "continue-tc":
            if "from" in seed:
                sd = self._source_special(seed, (TRANSCRITICAL,) + CODIM2_KINDS)
                if sd.transversal is None:
                    raise PreconditionError("seed special carries no transversal component")
                if sd.kind != TRANSCRITICAL:
                    sd = tc_seed(sys, sd.x, sd.params, pair, sd.pinned, sd.transversal, settings)
            else:
                x, p = self._explicit_state(seed, sys, params)
                sd = tc_seed(sys, x, p, pair, seed["pinned"], seed["transversal"], settings)
            return continue_tc_curve(sys, sd, settings, pair=pair, bounds=bounds, direction=direction)
        tol = task.get("hopf_tol", 1e-6)
        if "from" in seed:
            src = self._source_special(seed, (HOPF,))
            x, p = src.x, dict(src.params)
        else:
            x, p = self._explicit_state(seed, sys, params)
        sd = hopf_seed(sys, x, p, pair, settings, tol)
        return continue_hopf_curve(sys, sd, settings, pair=pair, bounds=bounds, direction=direction, tol=tol)

    def _emit_curve(self, task, curve: Curve, res: TaskResult) -> None:
        tid = task["id"]
        fname = f"{tid}.csv"
        emit_curve_csv(curve, self.out / fname)
        res.files.append(fname)
        script = f"{tid}_plot.py"
        (self.out / script).write_text(_diagram_script([(fname, curve.kind, curve.active)],
                                                       f"{curve.system.name}: {tid}", f"{tid}.png"))
        res.files.append(script)
        if len(curve.active) == 2:
            self.diagram.append((fname, curve.kind, curve.active))
        recs = [_record(sp, tid) for sp in curve.specials]
        self.specials.extend(recs)
        term = curve.meta.get("termination")
        summ = {
            "kind": curve.kind,
            "points": len(curve.points),
            "termination": list(term) if isinstance(term, tuple) else term,
            "specials": [{"kind": r["kind"], "location": r["location"]} for r in recs],
            "max_residual": max(pt.residual for pt in curve.points),
        }
        if curve.kind == HOPF:
            summ["min_omega"] = curve.meta.get("min_omega")
            summ["endpoints"] = [{"params": {k: e["params"][k] for k in curve.active}, "omega": e["omega"]}
                                 for e in curve.meta.get("endpoints", [])]
        if "oracle_tol" in task:
            summ.update(self._oracle(task, curve))
        res.summary.update(summ)

    def _oracle(self, task, curve: Curve) -> dict:
        sname, consts = self.cfg.task_system(task)
        nf = NormalFormId(sname, consts)
        lo, hi = task.get("oracle_range", (-math.inf, math.inf))
        dev = 0.0
        n = 0
        for pt in curve.points:
            b = pt.params["b"]
            if not lo <= b <= hi:
                continue
            try:
                a_ref = oracle_fold_curve(nf, b, 1 if pt.params["a"] >= 0 else -1)
            except SntcError:
                continue
            dev = max(dev, abs(pt.params["a"] - a_ref))
            n += 1
        if n == 0:
            raise PreconditionError("no curve point inside the oracle range")
        if dev > task["oracle_tol"]:
            raise PreconditionError(f"oracle deviation {dev:.3e} exceeds {task['oracle_tol']:.1e}")
        return {"oracle_points": n, "max_oracle_dev": dev}

    def _integrate_task(self, task, sys, params, res: TaskResult) -> None:
        seed = task["seed"]
        if "from" in seed:
            src = self._source_special(seed, (FOLD, TRANSCRITICAL, HOPF) + CODIM2_KINDS)
            x0, p = np.array(src.x, dtype=float), dict(params)
        else:
            x0, p = self._explicit_state(seed, sys, params)
        x0 = np.array(x0, dtype=float)
        pert = task.get("perturb", {})
        x0 = x0 * pert.get("scale", 1.0) + np.asarray(pert.get("add", np.zeros(sys.dim)), dtype=float)
        if sys.nonnegative:
            x0 = np.maximum(x0, 0.0)
        traj = integrate(sys, x0, p, task.get("t_end", 1000.0), task.get("tol", 1e-9))
        section = None
        if "section" in task:
            sec = task["section"]
            c = sec["component"]
            idx = sys.state_names.index(c) if isinstance(c, str) else int(c)
            section = Section.component(sys.dim, idx, sec["value"], sec.get("direction", 1))
        outcome = long_run_outcome(traj, section)
        tid = task["id"]
        fname = f"{tid}.csv"
        write_trajectory_csv(traj, self.out / fname, task.get("stride", 10))
        res.files.append(fname)
        scales = _plot_scales(sys, traj)
        script = f"{tid}_plot.py"
        (self.out / script).write_text(_trajectory_script(fname, f"{sys.name}: {tid}", scales, f"{tid}.png"))
        res.files.append(script)
        res.summary.update({
            "outcome": outcome["kind"], "final": outcome["final"], "period": outcome["period"],
            "steps": traj.stats, "x0": x0, "params": {k: p[k] for k in (sys.default_pair or ())},
        })

    def _codim2_task(self, task, res: TaskResult) -> None:
        refs = task["curves"]
        bad = [r for r in refs if self.status.get(r) != "ok"]
        if len(bad) == len(refs):
            raise _Skip(f"no referenced curve succeeded ({', '.join(bad)})")
        tol = task.get("match_tol", 1e-6)
        points: list[dict] = []
        for ref in refs:
            if ref in bad:
                continue
            curve = self.results[ref]
            for sp in curve.specials:
                if sp.kind not in CODIM2_KINDS:
                    continue
                loc = np.array(sp.location)
                hit = None
                for p in points:
                    if p["kind"] == sp.kind and p["active"] == list(sp.active) and \
                            np.max(np.abs(np.array(p["_loc"]) - loc) / (1.0 + np.abs(loc))) <= tol:
                        hit = p
                        break
                entry = {"task": ref, "curve_kind": sp.curve_kind, "location": [float(v) for v in loc],
                         "candidate": bool(sp.diagnostics.get("candidate"))}
                if sp.tangent is not None:
                    entry["direction"] = _param_direction(sp)
                if hit is None:
                    points.append({"kind": sp.kind, "active": list(sp.active), "_loc": loc,
                                   "location": {k: float(sp.params[k]) for k in sp.active},
                                   "found_on": [entry]})
                else:
                    hit["found_on"].append(entry)
            if curve.kind == HOPF:
                for e in curve.meta.get("endpoints", []):
                    loc = np.array([e["params"][k] for k in curve.active])
                    for p in points:
                        if p["active"] == list(curve.active) and \
                                np.max(np.abs(np.array(p["_loc"]) - loc) / (1.0 + np.abs(loc))) <= tol:
                            p["found_on"].append({"task": ref, "curve_kind": HOPF, "location": loc.tolist(),
                                                  "omega": float(e["omega"])})
        for p in points:
            p.pop("_loc")
            kinds = {f["curve_kind"] for f in p["found_on"]}
            p["curves_meeting"] = sorted(kinds)
            dirs = {f["curve_kind"]: f["direction"] for f in p["found_on"] if "direction" in f}
            if FOLD in dirs and TRANSCRITICAL in dirs:
                u, v = dirs[FOLD], dirs[TRANSCRITICAL]
                # atan2 keeps precision for nearly parallel directions, where acos does not
                p["tangent_angle"] = math.atan2(abs(u[0] * v[1] - u[1] * v[0]), abs(float(np.dot(u, v))))
            # an interaction reported only as a TC-curve candidate is unconfirmed
            p["confirmed"] = p["kind"] not in (SNTC_SINGLE_ZERO, SNTC_DOUBLE_ZERO) or FOLD in kinds
        fname = f"{task['id']}.json"
        (self.out / fname).write_text(json.dumps(_clean(points), indent=2, sort_keys=True) + "\n")
        res.files.append(fname)
        res.summary.update({"codim2": _clean(points),
                            "counts": {k: sum(1 for p in points if p["kind"] == k)
                                       for k in sorted({p["kind"] for p in points})}})
        if bad:
            raise PreconditionError(f"referenced curve task(s) failed: {', '.join(bad)}")


def _param_direction(sp: SpecialPoint) -> list[float]:
    v = np.asarray(sp.tangent, dtype=float)[-len(sp.active):]
    n = float(np.linalg.norm(v))
    return (v / n).tolist() if n > 0 else [float("nan")] * len(v)


def _plot_scales(sys: SystemDef, traj: Trajectory) -> dict[str, float]:
    if sys.name == "kooi":
        p = traj.params
        return {"N": p["N_r"], "R": p["kappa_RP"], "P": p["kappa_RP"]}
    return {}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_scenario(config: ScenarioConfig | str | Path | Mapping[str, Any],
                 output_dir: str | Path | None = None) -> RunReport:
    """Execute the tasks of ``config`` in order and write all artifacts.

    A failing task is recorded and the run continues; tasks seeded from a
    failed task are marked ``skipped``. Output goes to ``output_dir`` or to
    ``<output root>/<config.output or config.name>``.
    """
    cfg = config if isinstance(config, ScenarioConfig) else load_config(config)
    out = Path(output_dir) if output_dir is not None else output_root() / (cfg.output or cfg.name)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport(cfg.name, out)
    runner = _Runner(cfg, out)
    for task in cfg.tasks:
        res = TaskResult(task["id"], task["type"])
        t0 = time.perf_counter()
        try:
            runner.run_task(task, res)
            res.status = "ok"
        except _Skip as exc:
            res.status, res.message = "skipped", str(exc)
        except (SntcError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("task %s failed: %s", task["id"], exc)
            res.status, res.message = "error", f"{type(exc).__name__}: {exc}"
        res.elapsed = time.perf_counter() - t0
        runner.status[task["id"]] = res.status
        report.tasks.append(res)
    report.specials = runner.specials
    files = []
    (out / "specials.json").write_text(json.dumps(_clean(runner.specials), indent=2, sort_keys=True) + "\n")
    files.append("specials.json")
    if runner.diagram:
        (out / "diagram_plot.py").write_text(_diagram_script(runner.diagram, cfg.name, "diagram.png"))
        files.append("diagram_plot.py")
    (out / "report.json").write_text(json.dumps(_clean(report.to_json()), indent=2, sort_keys=True) + "\n")
    files.append("report.json")
    for res in report.tasks:
        files.extend(res.files)
    report.manifest = {f: _sha256(out / f) for f in sorted(files)}
    report.created = _dt.datetime.now(_dt.timezone.utc).isoformat()
    # the timestamp sits outside the hashed files
    manifest = {"created": report.created, "files": [{"path": f, "sha256": h, "bytes": (out / f).stat().st_size}
                                                     for f, h in report.manifest.items()]}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return report
