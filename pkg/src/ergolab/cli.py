"""Batch experiment runner.

    ergolab run <config.yaml>
    ergolab validate <config.yaml>
    ergolab list-experiments

A config names one experiment, a rotation, a decreasing function and the
experiment's parameters. Results go to <output_dir>/<experiment>.csv and
<output_dir>/summary.json; LAB_OUTPUT_DIR overrides output_dir.
"""

from __future__ import annotations

import argparse
import ast
import csv
import io
import json
import math
import operator
import os
import sys
import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import __version__
from .errors import LabError
from .numerics import MonotoneFunction, constant, one_minus_x, power

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE = 0, 2, 3


# ----------------------------------------------------------------------
# parameter parsing helpers
# ----------------------------------------------------------------------

def parse_function(text: str) -> MonotoneFunction:
    tag, _, arg = str(text).strip().partition(":")
    tag = tag.lower()
    try:
        if tag == "const":
            c = float(arg)
            if c < 0:
                raise ValueError
            return constant(c)
        if tag == "power":
            return power(float(arg))
        if tag == "oneminusx" and not arg:
            return one_minus_x()
        if tag == "gs":
            from .divergence import GsFunction
            s = float(arg)
            if not s > 0:
                raise ValueError
            return GsFunction.make(s).as_monotone()
    except ValueError:
        pass
    raise ValueError(f"unknown function {text!r} (const:c, power:c, oneminusx, gs:s)")


def parse_sequence(text: str) -> List[int]:
    """'prefix:N' (0..N-1), 'range:a,b' (a..b-1), 'list:1,4,9' or 'blocks:<text form>'."""
    tag, _, arg = str(text).strip().partition(":")
    tag = tag.lower()
    try:
        if tag == "prefix":
            N = int(arg)
            if N >= 1:
                return list(range(N))
        elif tag == "range":
            a, b = (int(v) for v in arg.split(","))
            if 0 <= a < b:
                return list(range(a, b))
        elif tag == "list":
            vals = sorted({int(v) for v in arg.split(",") if v.strip()})
            if vals and vals[0] >= 0:
                return vals
        elif tag == "blocks":
            from .blockseq import PerturbedBlockSequence
            return PerturbedBlockSequence.from_text(arg).elements().tolist()
    except ValueError:
        pass
    raise ValueError(f"bad sequence {text!r} (prefix:N, range:a,b, list:..., blocks:...)")


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow, ast.FloorDiv: operator.floordiv,
           ast.Mod: operator.mod}
_FUNCS = {"floor": math.floor, "ceil": math.ceil, "log": math.log, "sqrt": math.sqrt,
          "exp": math.exp, "min": min, "max": max, "round": round, "abs": abs}


def eval_expression(expr: str, env: Dict[str, float]):
    """Arithmetic over numbers, the names in env and a few math functions ('^' is power)."""
    tree = ast.parse(str(expr).replace("^", "**"), mode="eval")

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name):
            if node.id in env:
                return env[node.id]
            raise ValueError(f"unknown name {node.id!r}")
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and not node.keywords):
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        raise ValueError(f"unsupported expression element in {expr!r}")

    return ev(tree)


def integer_series(expr: str, K: int, extra: Optional[Dict[str, Sequence[float]]] = None) -> List[int]:
    out = []
    for k in range(1, K + 1):
        env = {"k": k}
        for name, vals in (extra or {}).items():
            env[name] = vals[k - 1]
        v = eval_expression(expr, env)
        if isinstance(v, float):
            if not math.isfinite(v):
                raise ValueError(f"{expr!r} is not finite at k={k}")
            v = int(math.floor(v + 0.5)) if abs(v - round(v)) < 1e-9 else int(math.floor(v))
        out.append(int(v))
    return out


def parse_lambda_grid(value) -> List[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value)
    if text.startswith("logspace:"):
        lo, hi, n = text[len("logspace:"):].split(",")
        return [float(v) for v in np.geomspace(float(lo), float(hi), int(n))]
    return [float(v) for v in text.split(",")]


# ----------------------------------------------------------------------
# schema
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Param:
    kind: type
    default: Any
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""


def _pos(x):
    return x > 0


def _parsable(parser):
    def ok(v):
        try:
            parser(v)
            return True
        except (ValueError, LabError):
            return False
    return ok


def _valid_phi(v) -> bool:
    from .orlicz import OrliczFunction
    return _parsable(OrliczFunction.parse)(v)


def _valid_unit_decimal(v) -> bool:
    try:
        return 0 <= Decimal(str(v)) < 1
    except InvalidOperation:
        return False


def _valid_levels(v) -> bool:
    try:
        levels = parse_lambda_grid(v)
    except ValueError:
        return False
    return bool(levels) and all(x > 0 for x in levels)


_REQUIRED = object()

SCHEMAS: Dict[str, Dict[str, Param]] = {
    "norm": {
        "phi": Param(str, "power:2", _valid_phi, "norm precondition: phi is power:p, llog:beta or composite:s,p"),
        "tol": Param(float, 1e-8, _pos, "norm precondition tol > 0"),
    },
    "average": {
        "seq": Param(str, "prefix:1000", _parsable(parse_sequence), "average precondition N >= 1"),
        "x": Param(str, "0", _valid_unit_decimal, "x is a decimal string in [0, 1)"),
    },
    "levelset": {
        "lambda": Param(float, _REQUIRED, _pos, "levelset precondition lambda > 0"),
        "seq": Param(str, "prefix:1", _parsable(parse_sequence), "levelset precondition: nonempty sequence"),
        "grid_cells": Param(int, 10**5, lambda g: g >= 1000, "levelset precondition grid_cells >= 1000"),
    },
    "decompose": {
        "lambda": Param(float, _REQUIRED, _pos, "levelset precondition lambda > 0"),
        "seq": Param(str, "list:1,4", _parsable(parse_sequence), "decompose precondition: nonempty sequence"),
        "grid_cells": Param(int, 10**5, lambda g: g >= 1000, "levelset precondition grid_cells >= 1000"),
    },
    "witness": {
        "lambda": Param(float, _REQUIRED, _pos, "witness precondition lambda > 0"),
        "arc_start": Param(str, "0", _valid_unit_decimal, "arc_start is a decimal string in [0, 1)"),
        "arc_length": Param(float, None, lambda v: v is None or 0 < v <= 1, "witness precondition 0 < |I| <= 1 (default M_lambda)"),
        "delta": Param(float, 0.1, _pos, "witness precondition delta > 0"),
        "eps": Param(float, 1e-3, _pos, "witness precondition 0 < eps < M_lambda"),
        "eta": Param(float, 1e-2, _pos, "witness precondition eta > 0"),
        "beta": Param(float, 1e-3, lambda b: 0 < b < 0.5, "witness precondition 0 < beta_prox < 1/2"),
        "n_start": Param(int, 1, lambda n: n >= 0, "witness precondition n_start >= 0"),
        "n_max": Param(int, 10**8, _pos, "entry-time budget n_max > 0"),
    },
    "criterion": {
        "phi": Param(str, "power:2", _valid_phi, "criterion precondition: valid Orlicz function"),
        "l": Param(str, "2^k", None, "l_k expression in k"),
        "d": Param(str, "2", None, "d_k expression in k and l"),
        "K": Param(int, 30, lambda K: 2 <= K <= 10**6, "criterion precondition 2 <= K <= 10^6"),
        "C": Param(float, 2.0, _pos, "growth constant C > 0"),
        "bound": Param(float, None, lambda v: v is None or v > 0, "ratio bound > 0"),
    },
    "construct": {
        "s": Param(float, None, lambda v: v is None or v > 0, "construct precondition s > 0"),
        "K": Param(int, 20, lambda K: 16 <= K <= 40, "construct precondition 16 <= K <= 40"),
        "beta": Param(float, 1e-2, lambda b: 0 < b < 0.5, "construct precondition 0 < beta < 1/2"),
        "max_total_elements": Param(int, 10**7, _pos, "element budget > 0"),
        "sample_count": Param(int, 100, _pos, "sample_count > 0"),
        "seed": Param(int, 0, lambda v: v >= 0, "seed >= 0"),
    },
    "example-series": {
        "s": Param(float, _REQUIRED, _pos, "example-series precondition s > 0"),
        "p": Param(float, _REQUIRED, lambda p: p >= 0, "example-series precondition p >= 0"),
        "K": Param(int, 10**5, lambda K: 16 <= K <= 10**7, "example-series precondition 16 <= K <= 10^7"),
    },
    "weak-scan": {
        "phi": Param(str, "power:1", _valid_phi, "weak-scan precondition: valid Orlicz function"),
        "seqs": Param(list, ["prefix:10", "prefix:100", "prefix:1000"], lambda v: len(v) > 0 and all(_parsable(parse_sequence)(s) for s in v), "weak-scan precondition: nonempty list of sequences"),
        "lambdas": Param(object, "logspace:1.2,20,10", _valid_levels, "weak-scan precondition: lambdas > 0"),
        "grid_cells": Param(int, 10**4, lambda g: g >= 1000, "levelset precondition grid_cells >= 1000"),
    },
}

TOP_KEYS = {"experiment", "system", "function", "parameters", "output_dir"}
DESCRIPTIONS = {
    "norm": "Luxemburg norm of f for an Orlicz function",
    "average": "ergodic average of f along a sequence from one base point",
    "levelset": "inner/outer grid sandwich of {A_N f >= lambda}",
    "decompose": "split the level set into disjoint arcs T^{-n_k}[0, a_k]",
    "witness": "finite subsequence with average >= lambda/2 on most of an arc",
    "criterion": "perturbation criterion, sufficient conditions and ratio test for l_k, d_k",
    "construct": "staged divergent perturbed block sequence for g_s",
    "example-series": "criterion series for g_s in LLog^p L",
    "weak-scan": "empirical constant in the weak (Phi) maximal inequality",
}


@dataclass
class RunConfig:
    experiment: str
    system: str = "golden"
    function: str = "power:0.5"
    parameters: Dict[str, Any] = field(default_factory=dict)
    output_dir: str = "lab_output"

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "system": self.system, "function": self.function,
                "parameters": dict(self.parameters), "output_dir": self.output_dir}


def _key_lines(text: str) -> Dict[Tuple[str, ...], int]:
    """1-based line of every mapping key, by path."""
    lines: Dict[Tuple[str, ...], int] = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = (*path, str(k.value))
                lines[key] = k.start_mark.line + 1
                walk(v, key)

    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    walk(root, ())
    return lines


def _coerce(value, kind):
    if value is None:
        return None
    if kind is float:
        if isinstance(value, bool):
            raise ValueError
        return float(value)
    if kind is int:
        if isinstance(value, bool):
            raise ValueError
        if isinstance(value, float) and not value.is_integer():
            raise ValueError
        return int(value)
    if kind is str:
        return str(value)
    if kind is list:
        if not isinstance(value, list):
            raise ValueError
        return [str(v) for v in value]
    return value


def validate(config_text: str):
    """RunConfig for valid text, else a list of 'line N: path: message' strings."""
    errors: List[str] = []
    try:
        data = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        return [f"{where}config is not valid YAML ({getattr(exc, 'problem', exc)})"]
    lines = _key_lines(config_text)

    def err(path: Tuple[str, ...], msg: str):
        ln = lines.get(path) or (lines.get(path[:1]) if path else None)
        prefix = f"line {ln}: " if ln else ""
        errors.append(f"{prefix}{'.'.join(path)}: {msg}")

    if not isinstance(data, dict):
        return ["config: expected a mapping at top level"]
    for key in data:
        if key not in TOP_KEYS:
            err((str(key),), "unknown key")
    exp = data.get("experiment")
    if exp is None:
        err(("experiment",), "required")
    elif exp not in SCHEMAS:
        err(("experiment",), f"unknown experiment {exp!r} (one of {', '.join(SCHEMAS)})")
    system = str(data.get("system", "golden"))
    try:
        from .rotation import RotationSystem
        RotationSystem.parse(system)
    except ValueError as exc:
        err(("system",), str(exc))
    function = str(data.get("function", "power:0.5"))
    try:
        parse_function(function)
    except (ValueError, LabError) as exc:
        err(("function",), str(exc))
    params_in = data.get("parameters") or {}
    if not isinstance(params_in, dict):
        err(("parameters",), "expected a mapping")
        params_in = {}
    params: Dict[str, Any] = {}
    if exp in SCHEMAS:
        schema = SCHEMAS[exp]
        for key in params_in:
            if key not in schema:
                err(("parameters", str(key)), f"unknown parameter for {exp}")
        for name, param in schema.items():
            if name in params_in:
                try:
                    val = _coerce(params_in[name], param.kind)
                except (ValueError, TypeError):
                    err(("parameters", name), f"expected {param.kind.__name__}")
                    continue
            elif param.default is _REQUIRED:
                err(("parameters", name), "required")
                continue
            else:
                val = param.default
            if param.check is not None and val is not None:
                try:
                    good = param.check(val)
                except Exception:
                    good = False
                if not good:
                    err(("parameters", name), f"{val!r} violates {param.rule}")
                    continue
            params[name] = val
        if exp == "construct" and params.get("s") is None and not function.startswith("gs:"):
            err(("parameters", "s"), "required unless function is gs:s")
        if exp == "witness" and "eps" in params and params.get("arc_length") is not None:
            if not params["eps"] < params["arc_length"]:
                err(("parameters", "eps"), "violates witness precondition eps < |I|")
    out_dir = str(data.get("output_dir", "lab_output"))
    if errors:
        return errors
    return RunConfig(exp, system, function, params, out_dir)


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------

Table = Tuple[List[str], List[List[Any]]]


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _exp_norm(cfg, sys_, f) -> Tuple[dict, Table]:
    from .orlicz import OrliczFunction, luxemburg_norm
    phi = OrliczFunction.parse(cfg.parameters["phi"])
    val = luxemburg_norm(phi, f, cfg.parameters["tol"])
    return {"norm": val, "phi": str(phi)}, (["phi", "function", "norm"], [[str(phi), cfg.function, val]])


def _exp_average(cfg, sys_, f) -> Tuple[dict, Table]:
    from .rotation import CirclePoint, ergodic_average
    seq = parse_sequence(cfg.parameters["seq"])
    x = CirclePoint.from_decimal(cfg.parameters["x"])
    val = ergodic_average(sys_, f, seq, x)
    return {"average": val, "n_terms": len(seq)}, (["n_terms", "average"], [[len(seq), val]])


def _exp_levelset(cfg, sys_, f) -> Tuple[dict, Table]:
    from .levelset import compute_level_set, m_lambda
    p = cfg.parameters
    seq = parse_sequence(p["seq"])
    lvl = compute_level_set(sys_, f, seq, p["lambda"], p["grid_cells"])
    rows = [[i, a.start.to_decimal(), float(a.start), a.length] for i, a in enumerate(lvl.arcs)]
    payload = {"lambda": lvl.lam, "inner_measure": lvl.inner_measure,
               "outer_measure": lvl.outer_measure, "arcs": len(lvl.arcs),
               "m_lambda": m_lambda(f, p["lambda"]) if f.declared_monotone_decreasing else None}
    return payload, (["arc", "start_decimal", "start", "length"], rows)


def _exp_decompose(cfg, sys_, f) -> Tuple[dict, Table]:
    from .levelset import decompose_level_set
    p = cfg.parameters
    seq = parse_sequence(p["seq"])
    res = decompose_level_set(sys_, f, seq, p["lambda"], p["grid_cells"])
    rows = []
    arc_iter = iter(res.s_arcs)
    for k, (n, a) in enumerate(zip(seq, res.a_values)):
        arc = next(arc_iter) if a > 0 else None
        rows.append([k, n, a, arc.start.to_decimal() if arc else "", arc.length if arc else 0.0])
    payload = {"union_measure": res.union_measure, "symdiff_vs_levelset": res.symdiff_vs_levelset,
               "disjoint": res.disjoint, "levelset_outer_measure": res.level_set.outer_measure}
    return payload, (["k", "n_k", "a_k", "arc_start_decimal", "arc_length"], rows)


def _exp_witness(cfg, sys_, f) -> Tuple[dict, Table]:
    from .levelset import construct_witness, m_lambda, sampled_minimum_average
    from .rotation import ONE, CircleArc, CirclePoint
    p = cfg.parameters
    lam = p["lambda"]
    length = p["arc_length"] if p["arc_length"] is not None else m_lambda(f, lam)
    start = CirclePoint.from_decimal(p["arc_start"])
    arc = CircleArc.full() if length >= 1.0 else CircleArc(start, int(length * ONE))
    w = construct_witness(sys_, f, lam, arc, p["delta"], p["eps"], p["eta"], p["beta"],
                          n_start=p["n_start"], n_max=p["n_max"])
    recheck = sampled_minimum_average(sys_, f, w.subsequence, w.certified_arc, w.beta / 4)
    payload = w.to_json()
    payload["recheck_min_average"] = recheck
    payload["M"] = length
    payload["subsequence_length"] = len(w.subsequence)
    del payload["subsequence"]
    return payload, (["index", "time"], [[i, n] for i, n in enumerate(w.subsequence)])


def _exp_criterion(cfg, sys_, f) -> Tuple[dict, Table]:
    from .blockseq import perturbation_criterion, proposition_conditions, reinhold_ratio
    from .orlicz import OrliczFunction
    p = cfg.parameters
    K = p["K"]
    phi = OrliczFunction.parse(p["phi"])
    l = integer_series(p["l"], K)
    d = integer_series(p["d"], K, {"l": l, "l_k": l})
    rep = perturbation_criterion(phi, l, d, K)
    prop = proposition_conditions(phi, l, d, p["C"], K)
    rr = reinhold_ratio(l, d, K, p["bound"])
    rows = [[k + 1, l[k], d[k], rep.terms[k], rep.partial_sums[k], float(rr.ratios[k])]
            for k in range(K)]
    payload = {"classification": rep.classification.value, "rationale": rep.rationale,
               "partial_sum": rep.partial_sums[-1],
               "cond_growth": prop.cond_growth, "sum1": prop.sum1.classification.value,
               "sum2": prop.sum2.classification.value,
               "ratio_bounded": rr.bounded, "ratio_limit_zero": rr.limit_zero}
    return payload, (["k", "l_k", "d_k", "term", "partial_sum", "ratio_d_over_l"], rows)


def _exp_construct(cfg, sys_, f) -> Tuple[dict, Table]:
    from .divergence import (ConstructionOptions, construct_divergent_sequence,
                             divergence_precondition_check, schedule_from_example)
    p = cfg.parameters
    s = p["s"] if p["s"] is not None else float(cfg.function.split(":", 1)[1])
    sched = schedule_from_example(s, p["K"], f)
    opts = ConstructionOptions(beta=p["beta"], max_total_elements=p["max_total_elements"],
                               sample_count=p["sample_count"], seed=p["seed"])
    seq, reps = construct_divergent_sequence(sys_, f, sched, p["K"], opts)
    pre = divergence_precondition_check(f, sched, p["K"])
    rows = [[r.k, r.l_k, r.d_k, r.lower_bound_lhs, r.lower_bound_rhs, r.passed,
             r.witness_certified_measure, r.arc_length] for r in reps]
    payload = {"stages": len(reps), "all_passed": all(r.passed for r in reps),
               "total_elements": seq.total, "sum_a": pre.sum_a,
               "a_k_comparison_holds": pre.pointwise_ok, "s": s}
    return payload, (["k", "l_k", "d_k", "lhs_min", "rhs", "passed",
                      "witness_certified_measure", "arc_length"], rows)


def _exp_example_series(cfg, sys_, f) -> Tuple[dict, Table]:
    from .divergence import example_criterion_series, membership_exponent_classifier
    p = cfg.parameters
    rep = example_criterion_series(p["s"], p["p"], p["K"])
    K = p["K"]
    ks = sorted(set(np.unique(np.geomspace(16, K, 200).astype(int)).tolist()) | {K})
    rows = [[k, rep.terms[k - 16], rep.partial_sums[k - 16]] for k in ks]
    payload = {"classification": rep.classification.value, "rationale": rep.rationale,
               "partial_sum": rep.partial_sums[-1],
               "membership": membership_exponent_classifier(p["s"], p["p"]).value}
    return payload, (["k", "term", "partial_sum"], rows)


def _exp_weak_scan(cfg, sys_, f) -> Tuple[dict, Table]:
    from .levelset import weak_phi_inequality_scan
    from .orlicz import OrliczFunction
    p = cfg.parameters
    phi = OrliczFunction.parse(p["phi"])
    seqs = [parse_sequence(s) for s in p["seqs"]]
    res = weak_phi_inequality_scan(sys_, f, phi, seqs, parse_lambda_grid(p["lambdas"]),
                                   p["grid_cells"])
    rows = [[r.lam, r.measure, r.phi_integral, r.empirical_C] for r in res.rows]
    return {"max_C": res.max_C}, (["lambda", "measure", "phi_integral", "empirical_C"], rows)


EXPERIMENTS = {
    "norm": _exp_norm,
    "average": _exp_average,
    "levelset": _exp_levelset,
    "decompose": _exp_decompose,
    "witness": _exp_witness,
    "criterion": _exp_criterion,
    "construct": _exp_construct,
    "example-series": _exp_example_series,
    "weak-scan": _exp_weak_scan,
}


def _write_csv(path: Path, header: List[str], rows: List[List[Any]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def run(cfg: RunConfig) -> Tuple[int, dict]:
    """Execute one experiment; returns (exit status, summary)."""
    from .rotation import RotationSystem
    out_dir = Path(os.environ.get("LAB_OUTPUT_DIR") or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"config": cfg.to_dict(), "version": __version__,
               "seed": cfg.parameters.get("seed", 0)}
    t0 = time.perf_counter()
    status = EXIT_OK
    try:
        sys_ = RotationSystem.parse(cfg.system)
        f = parse_function(cfg.function)
        payload, (header, rows) = EXPERIMENTS[cfg.experiment](cfg, sys_, f)
        _write_csv(out_dir / f"{cfg.experiment}.csv", header, rows)
        summary["result"] = payload
        summary["status"] = "ok"
    except LabError as exc:
        status = EXIT_COMPUTE
        summary["status"] = "error"
        summary["error"] = {"name": type(exc).__name__, "message": str(exc)}
    summary["wall_time"] = time.perf_counter() - t0
    (out_dir / "summary.json").write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True)
                                          + "\n", encoding="utf-8")
    return status, summary


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="ergolab", description="Computational ergodic theory lab.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    sub.add_parser("list-experiments", help="list experiment names")
    args = ap.parse_args(argv)

    if args.cmd == "list-experiments":
        for name in SCHEMAS:
            print(f"{name:16s} {DESCRIPTIONS[name]}")
        return EXIT_OK
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    res = validate(text)
    if isinstance(res, list):
        for line in res:
            print(f"{args.config}: {line}", file=sys.stderr)
        return EXIT_INVALID
    if args.cmd == "validate":
        print(json.dumps(_jsonable(res.to_dict()), indent=2, sort_keys=True))
        return EXIT_OK
    status, summary = run(res)
    if status == EXIT_OK:
        print(json.dumps(_jsonable(summary["result"]), indent=2, sort_keys=True))
    else:
        print(f"error: {summary['error']['name']}: {summary['error']['message']}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
