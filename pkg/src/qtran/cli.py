"""Command line front end: config parsing, run orchestration, CSV emission.

Config files are JSON with a fixed schema; complex entries are two-element
[re, im] arrays and matrices are row-major nested arrays. Unknown keys are
rejected with the offending path so typos cannot silently fall back to
defaults. The environment variable QTRAN_EPS_MIN overrides the global energy
cutoff; everything else lives in the config file.
"""

import argparse
import json
import os
import sys
from concurrent import futures
from dataclasses import dataclass

import numpy as np

from . import oracle as oracle_mod
from .errors import ConfigError, ParseError, QtranError, ValidationError
from .ground_state import ground_state_density
from .model import (BiasProfile, InducedFockRule, LeadBias, build_chain,
                    build_single_site, DeviceModel)
from .propagate import KINDS, run
from .steady import steady_current, transmission_wbl, transmission_wbl_std

DEFAULT_EPS_MIN = -1000.0

_TOP_KEYS = ("model", "bias", "rule", "dissipator", "dt", "t_end", "out",
             "gnuplot", "eps_min", "steady", "transmission", "oracle",
             "sweep")
_MODEL_BUILTIN_KEYS = {
    "single_site": ("builtin", "eps_d", "lambda_L", "lambda_R", "mu0"),
    "chain": ("builtin", "n", "eps", "hop", "lambda_L", "lambda_R", "mu0"),
}
_MODEL_EXPLICIT_KEYS = ("h0", "lambda_L", "lambda_R", "mu0")
_LEAD_KEYS = ("kind", "dV", "rise_fs", "times", "values")
_RULE_KEYS = ("kind", "times", "values")
_STEADY_KEYS = ("dv_L", "dv_R", "dv_R_values")
_TRANS_KEYS = ("eps_lo", "eps_hi", "n", "dh_inf")
_ORACLE_KEYS = ("W", "n_levels", "dt", "t_end", "init", "sample_every")


def _check_keys(section, allowed, path):
    if not isinstance(section, dict):
        raise ValidationError("%s: expected an object" % path)
    for key in section:
        if key not in allowed:
            raise ValidationError("%s.%s: unknown key" % (path, key))


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError("%s: expected a number" % path)
    return float(value)


def _entry_complex(value, path):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(_number(value[0], path), _number(value[1], path))
    raise ValidationError("%s: expected a number or [re, im] pair" % path)


def _matrix(value, path):
    if not isinstance(value, list) or not value:
        raise ValidationError("%s: expected a nested array" % path)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list):
            raise ValidationError("%s[%d]: expected an array row" % (path, i))
        rows.append([_entry_complex(x, "%s[%d][%d]" % (path, i, j))
                     for j, x in enumerate(row)])
    return np.array(rows, dtype=complex)


def _float_list(value, path):
    if not isinstance(value, list):
        raise ValidationError("%s: expected an array of numbers" % path)
    return [_number(x, "%s[%d]" % (path, i)) for i, x in enumerate(value)]


def _parse_model(section):
    path = "model"
    if "builtin" in section:
        name = section["builtin"]
        if name not in _MODEL_BUILTIN_KEYS:
            raise ValidationError("model.builtin: unknown builtin %r" % (name,))
        _check_keys(section, _MODEL_BUILTIN_KEYS[name], path)
        if name == "single_site":
            return build_single_site(
                _number(section.get("eps_d", 0.0), "model.eps_d"),
                _number(section.get("lambda_L", 0.0), "model.lambda_L"),
                _number(section.get("lambda_R", 0.0), "model.lambda_R"),
                _number(section.get("mu0", 0.0), "model.mu0"))
        return build_chain(
            int(_number(section.get("n", 2), "model.n")),
            _number(section.get("eps", 0.0), "model.eps"),
            _entry_complex(section.get("hop", 0.0), "model.hop"),
            _number(section.get("lambda_L", 0.0), "model.lambda_L"),
            _number(section.get("lambda_R", 0.0), "model.lambda_R"),
            _number(section.get("mu0", 0.0), "model.mu0"))
    _check_keys(section, _MODEL_EXPLICIT_KEYS, path)
    for key in ("h0", "lambda_L", "lambda_R"):
        if key not in section:
            raise ValidationError("model.%s: required for explicit models" % key)
    return DeviceModel(
        h0=_matrix(section["h0"], "model.h0"),
        lambda_L=_matrix(section["lambda_L"], "model.lambda_L"),
        lambda_R=_matrix(section["lambda_R"], "model.lambda_R"),
        mu0=_number(section.get("mu0", 0.0), "model.mu0"))


def _parse_lead(section, path):
    _check_keys(section, _LEAD_KEYS, path)
    kind = section.get("kind", "zero")
    if kind == "zero":
        return LeadBias(kind="zero")
    if kind == "smooth_step":
        return LeadBias(kind="smooth_step",
                        dV=_number(section.get("dV", 0.0), path + ".dV"),
                        rise_fs=_number(section.get("rise_fs", 0.1),
                                        path + ".rise_fs"))
    if kind == "tabulated":
        return LeadBias(kind="tabulated",
                        times=tuple(_float_list(section.get("times", []),
                                                path + ".times")),
                        values=tuple(_float_list(section.get("values", []),
                                                 path + ".values")))
    raise ValidationError("%s.kind: unknown bias kind %r" % (path, kind))


def _parse_bias(section):
    _check_keys(section, ("L", "R"), "bias")
    return BiasProfile(
        L=_parse_lead(section.get("L", {"kind": "zero"}), "bias.L"),
        R=_parse_lead(section.get("R", {"kind": "zero"}), "bias.R"))


def _parse_rule(section):
    _check_keys(section, _RULE_KEYS, "rule")
    kind = section.get("kind", "paper_half_sum")
    if kind == "tabulated":
        return InducedFockRule(
            kind="tabulated",
            times=tuple(_float_list(section.get("times", []), "rule.times")),
            values=tuple(_float_list(section.get("values", []),
                                     "rule.values")))
    return InducedFockRule(kind=kind)


@dataclass
class RunConfig:
    doc: dict
    model: DeviceModel
    bias: BiasProfile
    rule: InducedFockRule
    dissipator: str
    dt: float
    t_end: float
    out: str
    gnuplot: bool
    eps_min: float
    steady: dict
    transmission: dict
    oracle: dict
    sweep: list

    def to_json(self):
        return json.dumps(self.doc, sort_keys=True, indent=2)


def parse_config(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("config is not valid JSON at line %d column %d: %s"
                         % (exc.lineno, exc.colno, exc.msg))
    if not isinstance(doc, dict):
        raise ValidationError("config root must be an object")
    if not doc:
        raise ValidationError(
            "config document is empty; required keys: model "
            "(with bias, dt, t_end for propagation runs)")
    _check_keys(doc, _TOP_KEYS, "config")
    if "model" not in doc:
        raise ValidationError("config.model: required key missing")

    model = _parse_model(doc["model"])
    bias = _parse_bias(doc.get("bias", {}))
    rule = _parse_rule(doc.get("rule", {}))
    dissipator = doc.get("dissipator", "wbl_adiabatic")
    if dissipator not in KINDS:
        raise ValidationError(
            "config.dissipator: unknown kind %r" % (dissipator,))
    dt = _number(doc.get("dt", 0.02), "config.dt")
    t_end = _number(doc.get("t_end", 30.0), "config.t_end")
    out = doc.get("out", "trace.csv")
    if not isinstance(out, str):
        raise ValidationError("config.out: expected a string path")
    gnuplot = doc.get("gnuplot", False)
    if not isinstance(gnuplot, bool):
        raise ValidationError("config.gnuplot: expected true or false")
    eps_min = _number(doc.get("eps_min", DEFAULT_EPS_MIN), "config.eps_min")
    if eps_min >= model.mu0:
        raise ValidationError("config.eps_min: must lie below mu0")

    steady = doc.get("steady", {})
    _check_keys(steady, _STEADY_KEYS, "steady")
    trans = doc.get("transmission", {})
    _check_keys(trans, _TRANS_KEYS, "transmission")
    oracle = doc.get("oracle", {})
    _check_keys(oracle, _ORACLE_KEYS, "oracle")
    sweep = doc.get("sweep", [])
    if not isinstance(sweep, list):
        raise ValidationError("config.sweep: expected an array of overrides")

    normalized = dict(doc)
    normalized.setdefault("bias", {"L": {"kind": "zero"}, "R": {"kind": "zero"}})
    normalized.setdefault("rule", {"kind": rule.kind})
    normalized.setdefault("dissipator", dissipator)
    normalized.setdefault("dt", dt)
    normalized.setdefault("t_end", t_end)
    normalized.setdefault("out", out)
    normalized.setdefault("gnuplot", gnuplot)
    normalized.setdefault("eps_min", eps_min)

    return RunConfig(doc=normalized, model=model, bias=bias, rule=rule,
                     dissipator=dissipator, dt=dt, t_end=t_end, out=out,
                     gnuplot=gnuplot, eps_min=eps_min, steady=steady,
                     transmission=trans, oracle=oracle, sweep=sweep)


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    return parse_config(text)


def _resolve_eps_min(cfg):
    raw = os.environ.get("QTRAN_EPS_MIN")
    if raw is None:
        return cfg.eps_min
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError("QTRAN_EPS_MIN must parse as a float, got %r" % raw)
    if val >= cfg.model.mu0:
        raise ConfigError("QTRAN_EPS_MIN must lie below mu0")
    return val


def _fmt(x):
    return "%.12g" % x


def _cmd_ground_state(cfg, out):
    eps_min = _resolve_eps_min(cfg)
    gs = ground_state_density(cfg.model, eps_min=eps_min)
    occ = np.real(np.diag(gs.sigma0))
    print("occupations: " + " ".join(_fmt(x) for x in occ))
    print("trace: " + _fmt(float(np.sum(occ))))
    for row in gs.sigma0:
        print("  ".join("%s%+sj" % (_fmt(z.real), _fmt(z.imag))
                        for z in row))
    if out:
        payload = {"occupations": [float(x) for x in occ],
                   "sigma0": [[[float(z.real), float(z.imag)] for z in row]
                              for row in gs.sigma0]}
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        print("wrote %s" % out)
    return 0


def _run_one_trace(cfg, out):
    eps_min = _resolve_eps_min(cfg)
    rec = run(cfg.model, cfg.bias, cfg.rule, cfg.t_end, dt=cfg.dt,
              dissipator_kind=cfg.dissipator, eps_min=eps_min)
    gp = out + ".gp" if cfg.gnuplot else None
    rec.to_csv(out, gnuplot_path=gp)
    settled = rec.meta.get("settled_t_fs")
    settled_txt = "not settled" if settled is None \
        else "settled at %s fs" % _fmt(settled)
    print("wrote %s (%d samples, %s, J_R final %s uA)"
          % (out, len(rec.times), settled_txt, _fmt(rec.j_R[-1])))
    return rec


def _merge_override(base, override, path="sweep"):
    if not isinstance(override, dict):
        raise ValidationError("%s: expected an object of overrides" % path)
    merged = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            merged[key] = _merge_override(base[key], val, "%s.%s" % (path, key))
        else:
            merged[key] = val
    return merged


def _cmd_propagate(cfg, out):
    if cfg.sweep:
        docs = []
        for i, entry in enumerate(cfg.sweep):
            doc = _merge_override(cfg.doc, entry, "sweep[%d]" % i)
            doc.pop("sweep", None)
            sub = parse_config(json.dumps(doc))
            docs.append(sub)
        outs = [sub.out for sub in docs]
        if len(set(outs)) != len(outs):
            raise ValidationError("sweep entries must write distinct out paths")
        with futures.ThreadPoolExecutor(
                max_workers=min(len(docs), os.cpu_count() or 1)) as pool:
            jobs = [pool.submit(_run_one_trace, sub, sub.out) for sub in docs]
            for job in jobs:
                job.result()
        return 0
    _run_one_trace(cfg, out or cfg.out)
    return 0


def _cmd_steady(cfg, out):
    sec = cfg.steady
    dv_l = _number(sec["dv_L"], "steady.dv_L") if "dv_L" in sec \
        else cfg.bias.L.voltage_inf()
    if "dv_R_values" in sec:
        values = _float_list(sec["dv_R_values"], "steady.dv_R_values")
        lines = ["dv_R,J_uA"]
        for dv_r in values:
            j = steady_current(cfg.model, (dv_l, dv_r), cfg.rule)
            lines.append("%s,%s" % (_fmt(dv_r), _fmt(j)))
        text = "\n".join(lines) + "\n"
        target = out or cfg.out
        with open(target, "w") as fh:
            fh.write(text)
        print("wrote %s (%d bias points)" % (target, len(values)))
        return 0
    dv_r = _number(sec["dv_R"], "steady.dv_R") if "dv_R" in sec \
        else cfg.bias.R.voltage_inf()
    j = steady_current(cfg.model, (dv_l, dv_r), cfg.rule)
    print("J_steady_uA: %s" % _fmt(j))
    return 0


def _cmd_transmission(cfg, out):
    sec = cfg.transmission
    lo = _number(sec.get("eps_lo", -1.0), "transmission.eps_lo")
    hi = _number(sec.get("eps_hi", 1.0), "transmission.eps_hi")
    n = int(_number(sec.get("n", 201), "transmission.n"))
    dh = _number(sec.get("dh_inf", 0.0), "transmission.dh_inf")
    if not hi > lo or n < 2:
        raise ValidationError("transmission window must satisfy eps_hi > eps_lo, n >= 2")
    lines = ["eps_eV,T_trace,T_std"]
    for eps in np.linspace(lo, hi, n):
        lines.append(",".join(_fmt(x) for x in (
            eps, transmission_wbl(cfg.model, eps, dh_inf=dh),
            transmission_wbl_std(cfg.model, eps, dh_inf=dh))))
    target = out or cfg.out
    with open(target, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("wrote %s (%d energies)" % (target, n))
    return 0


def _cmd_oracle(cfg, out):
    sec = cfg.oracle
    width = _number(sec.get("W", 2.0), "oracle.W")
    n_levels = int(_number(sec.get("n_levels", 400), "oracle.n_levels"))
    dt = _number(sec.get("dt", 0.002), "oracle.dt")
    t_end = _number(sec.get("t_end", min(cfg.t_end, 5.0)), "oracle.t_end")
    init = sec.get("init", "partition_free")
    sample_every = int(_number(sec.get("sample_every", 5),
                               "oracle.sample_every"))
    leads = {a: oracle_mod.discretize_lead(cfg.model.lead_lambda(a), width,
                                           n_levels, mu0=cfg.model.mu0)
             for a in ("L", "R")}
    report = oracle_mod.compare_to_wbl(cfg.model, leads, cfg.bias, cfg.rule,
                                       t_end, dt=dt, sample_every=sample_every,
                                       init=init)
    target = out or cfg.out
    report["oracle"].to_csv(target)
    base, ext = os.path.splitext(target)
    report["wbl"].to_csv(base + "_wbl" + ext)
    print("wrote %s and %s" % (target, base + "_wbl" + ext))
    print("recurrence_fs: %s" % _fmt(report["recurrence_fs"]))
    print("max_rel_deviation: %s" % _fmt(report["sup_rel_diff"]))
    return 0


def _cmd_verify(cfg, out):
    del out
    from .verify import run_all
    ok = run_all(model=cfg.model, eps_min=_resolve_eps_min(cfg))
    return 0 if ok else 3


_COMMANDS = {
    "ground-state": _cmd_ground_state,
    "propagate": _cmd_propagate,
    "steady": _cmd_steady,
    "transmission": _cmd_transmission,
    "oracle": _cmd_oracle,
    "verify": _cmd_verify,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="qtran",
        description="time-dependent quantum transport in the wide-band limit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output file path")
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        if cfg.sweep and args.command != "propagate":
            raise ValidationError("sweep is only supported for propagate")
        return _COMMANDS[args.command](cfg, args.out)
    except QtranError as exc:
        print("%s: %s" % (exc.category, exc), file=sys.stderr)
        return {"CONFIG": 2, "NUMERIC": 3, "IO": 4}.get(exc.category, 1)
    except OSError as exc:
        print("IO: %s" % exc, file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
