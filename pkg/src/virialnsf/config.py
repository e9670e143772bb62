"""Strict INI-style run configuration.

``[section]`` headers, ``key = value`` lines and ``#`` comments.  Unknown
sections or keys, duplicated keys and malformed values are rejected with the
offending line number.  Coefficients are written as ``+``-separated terms::

    b0 = power(1, 1)
    b2 = rational(-0.5, 0.2, 1.2, 1) + constant(0.1)

Lists are comma separated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from . import laws
from .errors import ConfigError
from .statelaw import CoefficientFn, VirialLaw

_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _float(v):
    return float(v)


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError(f"expected an integer, got {v!r}")
    return int(f)


def _bool(v):
    try:
        return _BOOL[v.lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {v!r}") from None


def _floats(v):
    return tuple(float(p) for p in v.split(",") if p.strip())


def _ints(v):
    return tuple(_int(p) for p in v.split(",") if p.strip())


def _str(v):
    return v


_TERM = re.compile(r"^\s*(constant|power|rational)\s*\(([^()]*)\)\s*$")


def parse_coefficient(text):
    """``constant(a)``, ``power(a, p)``, ``rational(a, p, q[, s])`` joined by ``+``."""
    parts, depth, cur = [], 0, ""
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "+" and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    terms = []
    for p in parts:
        m = _TERM.match(p)
        if not m:
            raise ValueError(f"cannot parse coefficient term {p.strip()!r}")
        kind, args = m.group(1), [float(a) for a in m.group(2).split(",")]
        arity = {"constant": (1,), "power": (2,), "rational": (3, 4)}[kind]
        if len(args) not in arity:
            raise ValueError(f"{kind} takes {' or '.join(map(str, arity))} arguments")
        terms.append({"constant": CoefficientFn.constant, "power": CoefficientFn.power,
                      "rational": CoefficientFn.rational}[kind](*args))
    return terms[0] if len(terms) == 1 else CoefficientFn.sum_of(*terms)


# ----------------------------------------------------------------------------
# schema: section -> key -> (converter, default)

SCHEMA = {
    "law": {
        "preset": (_str, "reference"),
        "gamma": (_float, None), "gamma_theta": (_float, None), "alpha": (_float, None),
        "alpha_bar": (_float, None), "n_trunc": (_int, None), "mu": (_float, None),
        "lambda": (_float, None), "kappa_a": (_float, None), "kappa_b": (_float, None),
        "m_const": (_float, None), "b_bar": (_floats, None),
    },
    "grid": {"dim": (_int, 1), "n": (_int, 64), "length": (_float, 1.0)},
    "time": {"t_final": (_float, 0.05), "slab_length": (_float, 0.05), "cfl": (_float, 0.4),
             "thermal_dt": (_float, 1e-3)},
    "fixed_point": {"omega": (_float, 0.5), "tol": (_float, 1e-6), "max_iter": (_int, 50)},
    "regularization": {"eps": (_float, 1e-3), "continuation": (_floats, ())},
    "initial": {"profile": (_str, "uniform"), "rho0": (_float, 1.0), "theta0": (_float, 1.0),
                "u0": (_float, 0.0), "rho_amp": (_float, 0.0), "theta_amp": (_float, 0.0),
                "u_amp": (_float, 0.0), "file": (_str, "")},
    "output": {"directory": (_str, "output"), "snapshot_every": (_int, 1), "csv": (_bool, True)},
    "validator": {"theta_lo": (_float, 1e-3), "theta_hi": (_float, 1e3),
                  "rho_lo": (_float, 1e-3), "rho_hi": (_float, 1e2), "points": (_int, 128),
                  "spacing": (_str, "log"), "theta_split": (_float, 1.0),
                  "exponent_slack": (_float, 0.01), "force": (_bool, False)},
    "diagnostics": {"c_tol": (_float, 1.0), "g_balance_tol": (_float, 1e-3)},
    "mms": {"module": (_str, "thermal"), "ns": (_ints, (32, 64, 128)),
            "dts": (_floats, (0.02, 0.01, 0.005)), "t_end": (_float, 0.05)},
}

_COEF_KEY = re.compile(r"^b(\d+)$")
PROFILES = ("uniform", "sine", "file")


@dataclass(frozen=True)
class RunConfig:
    law: VirialLaw
    values: dict
    lines: dict = field(default_factory=dict, compare=False)
    text: str = field(default="", compare=False)

    def get(self, section, key):
        return self.values[section][key]

    def section(self, name):
        return dict(self.values[name])


def _raw_parse(text):
    raw, lines, section = {}, {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            raw.setdefault(section, {})
            continue
        if "=" not in s:
            raise ConfigError(f"expected 'key = value', got {s!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, value = (p.strip() for p in s.split("=", 1))
        known = key in SCHEMA[section] or (section == "law" and _COEF_KEY.match(key))
        if not known:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if key in raw[section]:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        raw[section][key] = value
        lines[(section, key)] = lineno
    return raw, lines


def _build_law(raw_law, lines):
    def line(key):
        return lines.get(("law", key))

    preset = raw_law.get("preset", "reference")
    try:
        base = laws.preset(preset)
    except ValueError as exc:
        raise ConfigError(str(exc), line("preset")) from None
    kw = {}
    conv = SCHEMA["law"]
    for key, value in raw_law.items():
        if key == "preset" or _COEF_KEY.match(key):
            continue
        try:
            kw["lam" if key == "lambda" else key] = conv[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"[law] {key}: {exc}", line(key)) from None
    n_trunc = kw.get("n_trunc", base.n_trunc)
    b = list(base.b[: n_trunc + 1]) + [CoefficientFn.constant(0.0)] * max(
        0, n_trunc + 1 - len(base.b))
    for key, value in raw_law.items():
        m = _COEF_KEY.match(key)
        if not m:
            continue
        idx = int(m.group(1))
        if idx > n_trunc:
            raise ConfigError(f"coefficient {key} exceeds n_trunc = {n_trunc}", line(key))
        try:
            b[idx] = parse_coefficient(value)
        except ValueError as exc:
            raise ConfigError(f"[law] {key}: {exc}", line(key)) from None
    kw["b"] = tuple(b)
    if "b_bar" not in kw:
        bb = list(base.b_bar[: n_trunc + 1])
        kw["b_bar"] = tuple(bb + [0.0] * (n_trunc + 1 - len(bb)))
    kw["name"] = preset
    try:
        return replace(base, **kw)
    except ValueError as exc:
        raise ConfigError(f"[law] {exc}", line("n_trunc") or line("preset")) from None


def _structural_errors(law, dim):
    from .validator import validate_structure

    return [c for c in validate_structure(law, dim) if c.status == "fail"]


_CHECK_KEYS = {
    "gamma-floor": "gamma", "gamma-theta-range": "gamma_theta", "alpha-bar": "alpha_bar",
    "lame": "lambda", "conductivity": "kappa_b", "b1-constant": "b1",
}


def parse_config(text, check=True):
    """Parse configuration text; with ``check`` the exponent/viscosity checks must pass."""
    raw, lines = _raw_parse(text)
    values = {}
    for section, schema in SCHEMA.items():
        got = raw.get(section, {})
        out = {}
        for key, (conv, default) in schema.items():
            if section == "law":
                continue
            if key in got:
                try:
                    out[key] = conv(got[key])
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}", lines[(section, key)]) from None
            else:
                out[key] = default
        values[section] = out
    law = _build_law(raw.get("law", {}), lines)
    values["law"] = {"preset": raw.get("law", {}).get("preset", "reference")}

    def bad(section, key, msg):
        return ConfigError(f"[{section}] {key}: {msg}", lines.get((section, key)))

    g = values["grid"]
    if g["dim"] not in (1, 2):
        raise bad("grid", "dim", "must be 1 or 2")
    if g["n"] < 8:
        raise bad("grid", "n", "need at least 8 cells")
    if g["length"] != 1.0:
        raise bad("grid", "length", "domain length is fixed to 1")
    t = values["time"]
    for k in ("t_final", "slab_length", "thermal_dt"):
        if t[k] <= 0:
            raise bad("time", k, "must be positive")
    if not 0 < t["cfl"] < 1:
        raise bad("time", "cfl", "must lie in (0, 1)")
    fp = values["fixed_point"]
    if not 0 < fp["omega"] <= 1:
        raise bad("fixed_point", "omega", "must lie in (0, 1]")
    if fp["tol"] <= 0:
        raise bad("fixed_point", "tol", "must be positive")
    if fp["max_iter"] < 1:
        raise bad("fixed_point", "max_iter", "must be at least 1")
    if values["regularization"]["eps"] <= 0:
        raise bad("regularization", "eps", "must be positive")
    if any(e <= 0 for e in values["regularization"]["continuation"]):
        raise bad("regularization", "continuation", "values must be positive")
    if values["initial"]["profile"] not in PROFILES:
        raise bad("initial", "profile", f"must be one of {', '.join(PROFILES)}")
    if values["initial"]["profile"] == "file" and not values["initial"]["file"]:
        raise bad("initial", "file", "profile = file needs a snapshot path")
    if values["initial"]["rho0"] <= 0 or values["initial"]["theta0"] < 0:
        raise bad("initial", "rho0", "rho0 must be positive and theta0 non-negative")
    if values["output"]["snapshot_every"] < 1:
        raise bad("output", "snapshot_every", "must be at least 1")
    if values["validator"]["spacing"] not in ("log", "linear"):
        raise bad("validator", "spacing", "must be log or linear")
    if values["mms"]["module"] not in ("thermal", "hydro", "both"):
        raise bad("mms", "module", "must be thermal, hydro or both")

    if check and not values["validator"]["force"]:
        errs = _structural_errors(law, g["dim"])
        if errs:
            first = errs[0]
            key = _CHECK_KEYS.get(first.check_id, "preset")
            ids = ", ".join(c.check_id for c in errs)
            raise ConfigError(f"law fails structural checks: {ids} ({first.detail})",
                              lines.get(("law", key)) or lines.get(("law", "preset")))
    return RunConfig(law=law, values=values, lines=lines, text=text)


def load_config(path, check=True):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), check=check)
