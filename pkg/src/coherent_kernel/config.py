"""``key = value`` run configuration with typed keys and strict validation."""
from __future__ import annotations

import ast
import configparser
import math
import operator
from pathlib import Path

from .errors import ValidationError

REQUIRED = ("mass", "omega", "volume")

# key -> (type, default). Types: float, int, str, bool, floats (comma list).
KEYS = {
    # physics
    "mass": ("float", None),
    "omega": ("float", None),
    "volume": ("float", None),
    "charge": ("float", 1.0),
    "light_speed": ("float", 1.0),
    "magnetic_field": ("float", 0.0),
    "g0_re": ("float", 0.0),
    "g0_im": ("float", 0.0),
    # time
    "t_final": ("float", 1.0),
    "dt": ("float", 1e-3),
    "dt_quad": ("float", 1e-2),
    "kernel_dt": ("float", 1e-3),
    # field checks
    "n_levels": ("int", 40),
    "drive": ("str", "sin"),
    "drive_amplitude": ("float", 1.0),
    "drive_frequency": ("float", 1.0),
    "residual_tol": ("float", 1e-5),
    # z grid and packet
    "z_center": ("float", 0.0),
    "z_half_width": ("float", 12.0),
    "z_spacing": ("float", 0.02),
    "packet_center": ("float", 0.0),
    "packet_width": ("float", 1.0),
    "packet_momentum": ("float", 0.0),
    # xy grid and packet
    "xy_half_width": ("float", 12.0),
    "xy_spacing": ("float", 0.25),
    "packet_x": ("float", 0.0),
    "packet_y": ("float", 0.0),
    "packet_width_xy": ("float", 1.0),
    # kernel-xy / kernel-z
    "xi": ("float", 0.0),
    "yi": ("float", 0.0),
    "zi": ("float", 0.0),
    "z_slice": ("bool", False),
    # mathieu-check
    "mathieu_a": ("float", 0.0),
    "mathieu_q": ("float", -1.0),
    "z_max": ("float", 10.0),
    "z_points": ("int", 201),
    # evolve / oracle-compare
    "snapshots": ("int", 4),
    "method": ("str", "auto"),
    "oracle_dt": ("float", 1e-4),
    "l2_tol": ("float", 1e-2),
    # stability-scan
    "volumes": ("floats", (1e2, 1e3, 1e4)),
    "t_star": ("float", None),
    "scan_dt": ("float", 2e-3),
    "scan_z_half_width": ("float", 20.0),
    "scan_z_spacing": ("float", 0.05),
}

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "inf": math.inf}


def _eval_number(text: str, key: str) -> float:
    """Evaluate a numeric literal or simple arithmetic (``2*pi``, ``1e4``)."""
    def ev(node):
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ValueError
    try:
        return float(ev(ast.parse(text.strip(), mode="eval").body))
    except (SyntaxError, ValueError, ZeroDivisionError, TypeError):
        raise ValidationError(f"key '{key}': cannot parse number from {text!r}") from None


def _coerce(key: str, raw: str):
    kind, _ = KEYS[key]
    if kind == "float":
        return _eval_number(raw, key)
    if kind == "int":
        v = _eval_number(raw, key)
        if v != int(v):
            raise ValidationError(f"key '{key}': expected an integer, got {raw!r}")
        return int(v)
    if kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"key '{key}': expected a boolean, got {raw!r}")
    if kind == "floats":
        parts = [p for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValidationError(f"key '{key}': empty list")
        return tuple(_eval_number(p, key) for p in parts)
    return raw.strip()


def parse_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' and ';' start comments."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"config parse error: {exc}") from None
    return dict(cp["run"])


def parse_override(item: str):
    if "=" not in item:
        raise ValidationError(f"override {item!r} must look like KEY=VALUE")
    k, v = item.split("=", 1)
    return k.strip(), v.strip()


def load_config(path: str | Path | None, overrides=()) -> dict:
    """Resolve a configuration: file values, then ``--set`` overrides, then defaults."""
    raw = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"config file not found: {p}")
        raw.update(parse_text(p.read_text()))
    for item in overrides:
        k, v = parse_override(item)
        raw[k] = v
    unknown = sorted(set(raw) - set(KEYS))
    if unknown:
        raise ValidationError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = {k: _coerce(k, v) for k, v in raw.items()}
    missing = [k for k in REQUIRED if k not in cfg]
    if missing:
        raise ValidationError(f"missing required config key(s): {', '.join(missing)}")
    for k, (_, default) in KEYS.items():
        cfg.setdefault(k, default)
    return cfg


def params_from_config(cfg: dict):
    from .core import PhysParams

    return PhysParams(mass=cfg["mass"], omega=cfg["omega"], volume=cfg["volume"], charge=cfg["charge"],
                      light_speed=cfg["light_speed"], magnetic_field=cfg["magnetic_field"],
                      g0=complex(cfg["g0_re"], cfg["g0_im"]))
