"""File formats: model/run config (YAML), torso traces and logs (CSV), reports (JSON).

Floats are written with 17 significant digits, so every write/load round
trip reproduces the in-memory values exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .frames import HumanSample
from .kinematics import ArmModel, Joint, quat_normalize
from .planners import Gains, SvfParams
from .sim import SimConfig, TraceLog

MODEL_FORMAT = "compsim-model"
MODEL_VERSION = 1
LOG_FORMAT = "compsim-log"
LOG_VERSION = 1
TRACE_COLUMNS = ("t", "px", "py", "pz", "qw", "qx", "qy", "qz")
VELOCITY_COLUMNS = ("vx", "vy", "vz")


class FormatError(ValueError):
    """Malformed or incompatible input file."""

    def __init__(self, path, message: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else f"{path}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _fmt(x) -> str:
    return format(float(x), ".17g")


def default_model_path() -> Path:
    return Path(str(resources.files("compsim") / "data" / "default_model.yaml"))


# ----------------------------
# Model / run configuration
# ----------------------------

def _node_line(node, path) -> int | None:
    """1-based line of the YAML node at ``path`` (keys / list indices)."""
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            nxt = node.value[key]
        else:
            nxt = None
        if nxt is None:
            break
        node = nxt
    return node.start_mark.line + 1 if node is not None else None


class _ConfigReader:
    def __init__(self, path, text: str):
        self.path = path
        try:
            self.data = yaml.safe_load(text)
            self.root = yaml.compose(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            raise FormatError(path, f"invalid YAML: {getattr(exc, 'problem', exc)}",
                              mark.line + 1 if mark else None) from exc
        if not isinstance(self.data, dict):
            raise FormatError(path, "expected a mapping at top level", 1)

    def fail(self, keypath, message):
        raise FormatError(self.path, f"{'.'.join(map(str, keypath))}: {message}",
                          _node_line(self.root, keypath))

    def get(self, *keypath, default=KeyError):
        node = self.data
        for key in keypath:
            if isinstance(node, dict) and key in node:
                node = node[key]
            elif isinstance(node, list) and isinstance(key, int) and key < len(node):
                node = node[key]
            elif default is KeyError:
                self.fail(keypath, "missing")
            else:
                return default
        return node

    def vector(self, *keypath, size, default=KeyError):
        value = self.get(*keypath, default=default)
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            self.fail(keypath, "expected numbers")
        if arr.shape != (size,):
            self.fail(keypath, f"expected {size} values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            self.fail(keypath, "values must be finite")
        return arr

    def number(self, *keypath, default=KeyError):
        value = self.get(*keypath, default=default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(keypath, "expected a number")
        return float(value)


def _read_config(path) -> _ConfigReader:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(path, f"cannot read file ({exc.strerror})") from exc
    cfg = _ConfigReader(path, text)
    if cfg.get("format", default=None) != MODEL_FORMAT:
        cfg.fail(("format",), f"expected '{MODEL_FORMAT}'")
    if cfg.get("version", default=None) != MODEL_VERSION:
        cfg.fail(("version",), f"unsupported version, expected {MODEL_VERSION}")
    return cfg


def load_model(path=None) -> ArmModel:
    cfg = _read_config(path or default_model_path())
    joints_raw = cfg.get("joints")
    if not isinstance(joints_raw, list) or len(joints_raw) != 6:
        cfg.fail(("joints",), "expected a list of 6 joints")
    joints = []
    for i in range(6):
        try:
            joints.append(Joint(cfg.vector("joints", i, "xyz", size=3),
                                cfg.vector("joints", i, "rpy", size=3, default=[0, 0, 0]),
                                cfg.vector("joints", i, "axis", size=3)))
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            cfg.fail(("joints", i), str(exc))
    vel = cfg.vector("limits", "velocity", size=6)
    try:
        return ArmModel(
            joints=tuple(joints),
            pos_min=cfg.vector("limits", "position_min", size=6),
            pos_max=cfg.vector("limits", "position_max", size=6),
            vel_max=vel,
            ee_xyz=cfg.vector("ee", "xyz", size=3, default=[0, 0, 0]),
            ee_rpy=cfg.vector("ee", "rpy", size=3, default=[0, 0, 0]),
            name=str(cfg.get("name", default="arm")),
        )
    except FormatError:
        raise
    except ValueError as exc:
        cfg.fail(("limits",), str(exc))


def load_config(path=None, **overrides) -> SimConfig:
    """Model plus the ``run`` section; keyword overrides win."""
    path = path or default_model_path()
    model = load_model(path)
    cfg = _read_config(path)
    svf = SvfParams(cfg.number("run", "svf", "sigma0", default=0.01),
                    cfg.number("run", "svf", "upsilon", default=10.0))
    gains = Gains(cfg.vector("run", "gains", "K_P", size=3, default=[1, 1, 1]),
                  cfg.vector("run", "gains", "K_O", size=3, default=[1, 1, 1]))
    kwargs = dict(
        model=model,
        theta0=cfg.vector("run", "theta0", size=6),
        rate=cfg.number("run", "rate", default=60.0),
        gains=gains,
        svf=svf,
        mount_offset=cfg.vector("run", "mount_offset", size=3, default=[0.0, -0.18, 0.25]),
        released_axis=str(cfg.get("run", "released_axis", default="x")),
        directional_limits=bool(cfg.get("run", "directional_limits", default=False)),
    )
    kwargs.update(overrides)
    try:
        return SimConfig(**kwargs)
    except ValueError as exc:
        cfg.fail(("run",), str(exc))


def config_fingerprint(config: SimConfig) -> dict:
    """Plain-data view of a run configuration, used for manifest hashing."""
    m = config.model
    return {
        "model": {
            "name": m.name,
            "joints": [{"xyz": j.origin_xyz.tolist(), "rpy": j.origin_rpy.tolist(),
                        "axis": j.axis.tolist()} for j in m.joints],
            "ee": {"xyz": m.ee_xyz.tolist(), "rpy": m.ee_rpy.tolist()},
            "limits": {"position_min": m.pos_min.tolist(), "position_max": m.pos_max.tolist(),
                       "velocity": config.joint_limits.vel_limit.tolist()},
        },
        "method": config.method,
        "rate": config.rate,
        "theta0": config.theta0.tolist(),
        "gains": {"K_P": config.gains.K_P.tolist(), "K_O": config.gains.K_O.tolist()},
        "svf": None if config.svf is None else {"sigma0": config.svf.sigma0,
                                                 "upsilon": config.svf.upsilon},
        "mount_offset": config.mount_offset.tolist(),
        "released_axis": config.released_axis,
        "directional_limits": config.directional_limits,
        "compensate": config.compensate,
    }


def canonical_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# ----------------------------
# Torso traces
# ----------------------------

def _central_differences(t, p):
    if len(t) < 2:
        return np.zeros_like(p)
    return np.gradient(p, t, axis=0)


def load_trace(path) -> list[HumanSample]:
    """Read a torso trace CSV; velocities are derived when the columns are absent."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(path, f"cannot read file ({exc.strerror})") from exc
    numbered = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not numbered:
        raise FormatError(path, "empty trace file")
    header_line, header = numbered[0]
    cols = [c.strip() for c in header.split(",")]
    if tuple(cols) == TRACE_COLUMNS:
        has_v = False
    elif tuple(cols) == TRACE_COLUMNS + VELOCITY_COLUMNS:
        has_v = True
    else:
        raise FormatError(path, f"bad header, expected '{','.join(TRACE_COLUMNS + VELOCITY_COLUMNS)}'"
                                f" (velocity columns optional)", header_line)
    rows, line_nos = [], []
    for line_no, text in numbered[1:]:
        fields = text.split(",")
        if len(fields) != len(cols):
            raise FormatError(path, f"expected {len(cols)} fields, got {len(fields)}", line_no)
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise FormatError(path, f"not a number ({exc})", line_no) from exc
        if not all(np.isfinite(values)):
            raise FormatError(path, "non-finite value", line_no)
        if rows and values[0] <= rows[-1][0]:
            raise FormatError(path, "timestamps must be strictly increasing", line_no)
        q = np.asarray(values[4:8])
        if abs(np.linalg.norm(q) - 1.0) > 1e-6:
            raise FormatError(path, "orientation is not a unit quaternion", line_no)
        rows.append(values)
        line_nos.append(line_no)
    if not rows:
        raise FormatError(path, "trace has no samples")
    data = np.asarray(rows)
    t, p = data[:, 0], data[:, 1:4]
    v = data[:, 8:11] if has_v else _central_differences(t, p)
    return [HumanSample(float(t[k]), p[k].copy(), quat_normalize(data[k, 4:8]), v[k].copy())
            for k in range(len(t))]


def write_trace(samples, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS + VELOCITY_COLUMNS)
        for s in samples:
            w.writerow([_fmt(x) for x in (s.t, *s.p_H, *s.Q_H, *s.v_H)])


# ----------------------------
# Trace logs
# ----------------------------

_LOG_FIELDS = (
    ("p_H", ("px", "py", "pz")),
    ("Q_H", ("qw", "qx", "qy", "qz")),
    ("v_B", ("vbx", "vby", "vbz")),
    ("delta_p_E", ("dpx", "dpy", "dpz")),
    ("delta_eta", ("deta",)),
    ("delta_eps", ("depsx", "depsy", "depsz")),
    ("theta", tuple(f"th{i}" for i in range(1, 7))),
    ("theta_dot", tuple(f"thd{i}" for i in range(1, 7))),
    ("theta_dot_raw", tuple(f"thdraw{i}" for i in range(1, 7))),
    ("ee_position", ("eex", "eey", "eez")),
    ("ee_orientation", ("eqw", "eqx", "eqy", "eqz")),
    ("rho_E", ("rhox", "rhoy", "rhoz")),
    ("p1_violation", ("p1",)),
    ("saturated", ("sat",)),
)
LOG_COLUMNS = ("t",) + tuple(c for _, cols in _LOG_FIELDS for c in cols)


def write_log(log: TraceLog, path) -> None:
    buf = io.StringIO()
    buf.write(f"# {LOG_FORMAT} v{LOG_VERSION}\n")
    buf.write(f"# method={log.method}\n# scenario={log.scenario}\n# rate={_fmt(log.rate)}\n")
    buf.write("# units: s, m, m/s, rad, rad/s; quaternions [w,x,y,z]; rho = EE world position\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    blocks = [log.t[:, None]]
    for name, cols in _LOG_FIELDS:
        arr = np.asarray(getattr(log, name), dtype=float)
        blocks.append(arr.reshape(len(log.t), len(cols)))
    table = np.hstack(blocks)
    for row in table:
        w.writerow([_fmt(x) for x in row])
    Path(path).write_text(buf.getvalue())


def load_log(path) -> TraceLog:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(path, f"cannot read file ({exc.strerror})") from exc
    if not lines or lines[0].strip() != f"# {LOG_FORMAT} v{LOG_VERSION}":
        raise FormatError(path, f"not a {LOG_FORMAT} v{LOG_VERSION} file", 1)
    meta = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#"):
        key, sep, value = lines[i][1:].strip().partition("=")
        if sep:
            meta[key.strip()] = value.strip()
        i += 1
    for key in ("method", "scenario", "rate"):
        if key not in meta:
            raise FormatError(path, f"missing '# {key}=' header line")
    if i >= len(lines) or tuple(lines[i].split(",")) != LOG_COLUMNS:
        raise FormatError(path, "bad column header", i + 1)
    rows = []
    for j in range(i + 1, len(lines)):
        if not lines[j].strip():
            continue
        fields = lines[j].split(",")
        if len(fields) != len(LOG_COLUMNS):
            raise FormatError(path, f"expected {len(LOG_COLUMNS)} fields, got {len(fields)}", j + 1)
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise FormatError(path, f"not a number ({exc})", j + 1) from exc
    if len(rows) < 2:
        raise FormatError(path, "log needs at least 2 rows")
    table = np.asarray(rows)
    out = {"t": table[:, 0]}
    col = 1
    for name, cols in _LOG_FIELDS:
        block = table[:, col:col + len(cols)]
        col += len(cols)
        out[name] = block[:, 0] if len(cols) == 1 else block
    out["p1_violation"] = out["p1_violation"].astype(bool)
    out["saturated"] = out["saturated"].astype(bool)
    try:
        rate = float(meta["rate"])
    except ValueError as exc:
        raise FormatError(path, "rate is not a number") from exc
    return TraceLog(method=meta["method"], scenario=meta["scenario"], rate=rate, **out)


# ----------------------------
# Reports and manifests
# ----------------------------

def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_report(report, path) -> None:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(dumps_json(data))


def load_report(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(path, f"invalid JSON: {exc.msg}", exc.lineno) from exc


@dataclass
class RunManifest:
    config_hash: str
    model_path: str
    scenarios: list = field(default_factory=list)
    outputs: dict = field(default_factory=dict)
    tool_version: str = __version__

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "model_path": self.model_path,
                "scenarios": self.scenarios, "outputs": self.outputs,
                "tool_version": self.tool_version}

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**d)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
