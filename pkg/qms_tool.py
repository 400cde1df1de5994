import argparse
import csv
import hashlib
import json
import logging
import math
import os
import platform
import re
import sys
import time
from functools import cached_property

import jsonschema
import numpy as np
import scipy

from qmscommutators import adjoint_action, support_span, validate_action_oracle
from qmsdiagnostics import (check_lemma1, check_theorem2, invariant_subspace_search,
                            positivity_improving_probe, sector_estimate)
from qmsevolution import evolve_density, pure_state, write_timeseries_csv
from qmsfinite import FiniteGKLSModel, fd_positivity_probe, initial_derivative
from qmsfock import build_space
from qmsgenerator import build_lindbladian, build_operators
from qmsmodel import (GaussianModel, TwoBosonParams, bogoliubov_transform, build_kossakowski,
                      check_minimality, generate_bogoliubov, kraus_factor, mix_kraus, two_boson_model)
from qmsrunlog import RunLedger
from qmsutils import (settings, ConfigError, QMSError, as_complex_array, random_unit_vectors,
                      random_unitary, relative_rank, to_jsonable)

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

if settings.DEBUG:
    logger.setLevel(logging.DEBUG)

GAUSSIAN_TASKS = ("kossakowski", "minimality", "bogoliubov", "lemma1", "theorem2", "evolve",
                  "support", "improve", "invariant", "sector")
FINITE_TASKS = ("fd-probe", "fd-derivative")
MODEL_TYPES = ("gaussian", "two_boson", "finite")
PLOT_KINDS = ("support-rank-vs-t", "min-eig-vs-t", "numerical-range-scatter")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_ASSERTION_FAILED = 2


_NUMBER_LIST = {"type": "array", "minItems": 1, "items": {"type": "number"}}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["seed", "model", "tasks"],
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "output_dir": {"type": "string"},
        "model": {
            "type": "object",
            "required": ["type"],
            "properties": {
                "type": {"enum": list(MODEL_TYPES)},
                "d": {"type": "integer", "minimum": 1},
                "n": {"type": "integer", "minimum": 1},
            },
            "allOf": [
                {"if": {"properties": {"type": {"const": "gaussian"}}, "required": ["type"]},
                 "then": {"required": ["d", "V", "U"]}},
                {"if": {"properties": {"type": {"const": "two_boson"}}, "required": ["type"]},
                 "then": {"required": ["gamma_minus", "gamma_plus"]}},
                {"if": {"properties": {"type": {"const": "finite"}}, "required": ["type"]},
                 "then": {"required": ["n", "c"]}},
            ],
        },
        "space": {
            "type": "object",
            "required": ["N_max"],
            "properties": {
                "N_max": {"type": "integer", "minimum": 1},
                "interior_margin": {"type": "integer", "minimum": 0},
            },
        },
        "tasks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["task"],
                "properties": {
                    "task": {"enum": list(GAUSSIAN_TASKS + FINITE_TASKS)},
                    "expect": {"type": "object"},
                    "times": _NUMBER_LIST,
                    "t_grid": _NUMBER_LIST,
                },
            },
        },
    },
    "if": {"properties": {"model": {"properties": {"type": {"enum": ["gaussian", "two_boson"]}}, "required": ["type"]}},
           "required": ["model"]},
    "then": {"required": ["space"]},
}

_REQUIRED_MESSAGE = re.compile(r"^'(?P<key>[^']+)' is a required property$")


def _pointer(error):
    parts = [str(part) for part in error.absolute_path]
    if error.validator == "required":
        match = _REQUIRED_MESSAGE.match(error.message)
        if match:
            parts.append(match.group("key"))
    return "/" + "/".join(parts) if parts else ""


def _task_model_mismatches(data):
    model = data.get("model")
    tasks = data.get("tasks")
    if not isinstance(model, dict) or not isinstance(tasks, list):
        return []
    model_type = model.get("type")
    if model_type not in MODEL_TYPES:
        return []
    allowed = FINITE_TASKS if model_type == "finite" else GAUSSIAN_TASKS
    problems = []
    for index, task in enumerate(tasks):
        name = task.get("task") if isinstance(task, dict) else None
        if name in GAUSSIAN_TASKS + FINITE_TASKS and name not in allowed:
            problems.append((f"/tasks/{index}/task", f"task {name!r} does not apply to {model_type} models"))
    return problems


def validate_scenario(data):
    '''Collect every schema problem as (json_pointer, message) and raise ConfigError if there are any.'''
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    problems = [(_pointer(error), error.message) for error in validator.iter_errors(data)]
    problems.sort(key=lambda problem: problem[0])
    if isinstance(data, dict):
        problems.extend(_task_model_mismatches(data))
    if problems:
        raise ConfigError(problems)
    return data


def load_scenario(path):
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigError([("", f"config file {path} not found")])
    except json.JSONDecodeError as e:
        raise ConfigError([("", f"invalid JSON: {e}")])
    validate_scenario(data)
    data.setdefault("name", os.path.splitext(os.path.basename(path))[0])
    return data


def config_hash(data):
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def build_model(model_data):
    '''Turn the model block into a GaussianModel or FiniteGKLSModel; problems carry /model pointers.'''
    model_type = model_data["type"]
    try:
        if model_type == "gaussian":
            return GaussianModel.from_json(model_data)
        if model_type == "two_boson":
            params = TwoBosonParams(
                gamma_minus=as_complex_array(model_data["gamma_minus"], 2, "gamma_minus"),
                gamma_plus=as_complex_array(model_data["gamma_plus"], 2, "gamma_plus"),
                omega=as_complex_array(model_data.get("omega", np.zeros((2, 2))), 2, "omega"))
            return two_boson_model(params)
        return FiniteGKLSModel.from_json(model_data)
    except (QMSError, ValueError, KeyError) as e:
        raise ConfigError([("/model", str(e))])


class ScenarioContext:
    '''Model, space and lazily built operators shared by the tasks of one run.'''
    def __init__(self, config):
        self.config = config
        self.seed = config["seed"]
        self.model = build_model(config["model"])
        self.space = None
        if config["model"]["type"] != "finite":
            space = config["space"]
            try:
                self.space = build_space(self.model.d, space["N_max"],
                                         interior_margin=space.get("interior_margin"))
                # raises EmptyInteriorError when the margin covers every grade
                self.space.interior_indices
            except (QMSError, ValueError) as e:
                raise ConfigError([("/space", str(e))])

    @cached_property
    def ops(self):
        return build_operators(self.model, self.space)

    @cached_property
    def schrodinger(self):
        return build_lindbladian(self.ops, "schrodinger")

    @cached_property
    def kossakowski(self):
        return build_kossakowski(self.model.V, self.model.U)

    @cached_property
    def action(self):
        return adjoint_action(self.model)

    def start_vector(self, n):
        if n is None:
            n = (0,) * self.space.d
        return self.space.basis_vector(n)


def task_kossakowski(ctx, options):
    K = ctx.kossakowski
    B = kraus_factor(ctx.model.V, ctx.model.U)
    residual = float(np.max(np.abs(K.K - B @ B.conj().T)))
    result = K.to_json()
    result.update({"factor_residual": residual, "m": ctx.model.m, "passed": residual <= 1e-12})
    return result


def task_minimality(ctx, options):
    minimal = check_minimality(ctx.model.V, ctx.model.U)
    rank = ctx.kossakowski.rank
    return {"minimal": minimal, "rank": rank, "m": ctx.model.m, "passed": minimal == (rank == ctx.model.m)}


def task_bogoliubov(ctx, options):
    count = options.get("count", 5)
    seed = options.get("seed", ctx.seed)
    K = ctx.kossakowski
    worst_constraint, worst_mixing, preserved = 0.0, 0.0, True
    rng = np.random.default_rng(seed)
    for i in range(count):
        pair = generate_bogoliubov(ctx.model.d, seed + i, rotation=options.get("rotation", 1.0),
                                   squeeze=options.get("squeeze", 0.5))
        worst_constraint = max(worst_constraint, *pair.residuals())
        transformed = build_kossakowski(*_kraus(bogoliubov_transform(ctx.model, pair)))
        preserved = preserved and transformed.strictly_positive == K.strictly_positive
        mixed = mix_kraus(ctx.model, random_unitary(rng, ctx.model.m))
        worst_mixing = max(worst_mixing, float(np.max(np.abs(build_kossakowski(*_kraus(mixed)).K - K.K))))
    return {
        "count": count,
        "constraint_residual": worst_constraint,
        "mixing_residual": worst_mixing,
        "positivity_preserved": preserved,
        "passed": worst_constraint <= settings.UNITARY_TOL and worst_mixing <= 1e-10 and preserved,
    }


def _kraus(model):
    return model.V, model.U


def task_lemma1(ctx, options):
    report = check_lemma1(ctx.ops, ctx.kossakowski, options.get("samples"), options.get("seed", ctx.seed))
    result = report.to_json()
    result["eps0"] = ctx.kossakowski.eps0
    result["passed"] = report.passed and report.identity_residual <= 1e-10
    return result


def task_theorem2(ctx, options):
    g0, g = check_theorem2(ctx.ops, options.get("samples"), options.get("seed", ctx.seed), options.get("c_grid"))
    return {"g0": g0.to_json(), "g": g.to_json(), "c0": g0.constant, "c": g.constant,
            "passed": g0.constant is not None and g.constant is not None}


def task_evolve(ctx, options, output_dir, prefix):
    psi = ctx.start_vector(options.get("psi"))
    result = evolve_density(ctx.schrodinger, pure_state(psi), options.get("times", [0.0, 0.5, 1.0]),
                            method=options.get("method", "auto"), step=options.get("step"))
    observables = [tuple(n) for n in options.get("observables", [])]
    write_timeseries_csv(result, os.path.join(output_dir, f"{prefix}_timeseries.csv"),
                         space=ctx.space, observables=observables)
    series = [{"psi_index": 0, "t": s["t"], "support_rank": s["support_rank"], "min_eig": s["min_eig"]}
              for s in result.stats]
    max_trace = max(s["trace_err"] for s in result.stats)
    min_eig = min(s["min_eig"] for s in result.stats)
    return {
        "method": result.method,
        "max_trace_err": max_trace,
        "min_eig": min_eig,
        "final_support_rank": result.stats[-1]["support_rank"],
        "passed": max_trace <= 1e-8 and min_eig >= -1e-8,
        "_series": series,
    }


def task_support(ctx, options):
    t = options.get("t", 0.1)
    psi = ctx.start_vector(options.get("psi"))
    span = support_span(ctx.ops, ctx.action, psi, t, max_order=options.get("max_order", 2),
                        max_word=options.get("max_word"))
    oracle = validate_action_oracle(ctx.model, ctx.space, ctx.action, ops=ctx.ops)
    rho = evolve_density(ctx.schrodinger, pure_state(psi), [t]).state_at(t).rho
    eigen_rank = relative_rank(np.linalg.eigvalsh(ctx.space.compress(0.5 * (rho + rho.conj().T))),
                               settings.SUPPORT_EIG_RELATIVE_TOL)
    result = span.to_json()
    result.update({
        "interior_dim": ctx.space.interior_dim,
        "full": span.rank == ctx.space.interior_dim,
        "eigen_rank": eigen_rank,
        "rank_matches": span.rank == eigen_rank,
        "oracle_error": oracle,
        "passed": oracle <= 1e-9,
    })
    return result


def task_improve(ctx, options):
    starts = options.get("starts") or [None]
    psis = [ctx.start_vector(n) for n in starts]
    times = options.get("times", [0.05, 0.1])
    reports = positivity_improving_probe(ctx.schrodinger, psis, times, method=options.get("method", "auto"))
    full = all(r.full for r in reports)
    series = [{"psi_index": r.psi_index, "t": r.t, "support_rank": r.rank, "min_eig": r.min_interior_eig}
              for r in reports]
    return {
        "reports": [r.to_json() for r in reports],
        "full": full,
        "min_rank": min(r.rank for r in reports),
        "min_interior_eig": min(r.min_interior_eig for r in reports),
        "interior_dim": ctx.space.interior_dim,
        "passed": full,
        "_series": series,
    }


def task_invariant(ctx, options):
    starts = options.get("starts")
    vectors = None if starts is None else [ctx.start_vector(n) for n in starts]
    report = invariant_subspace_search(ctx.ops, options.get("n_seeds", 5), options.get("seed", ctx.seed),
                                       start_vectors=vectors)
    result = report.to_json()
    result["passed"] = report.irreducible
    return result


def task_sector(ctx, options):
    estimate = sector_estimate(ctx.ops, options.get("samples"), options.get("seed", ctx.seed),
                               options.get("shift_grid"), operator=options.get("operator", "G"))
    result = estimate.to_json()
    result["operator"] = options.get("operator", "G")
    result["passed"] = estimate.theta_hat < math.pi / 2
    result["_points"] = [{"re": float(z.real), "im": float(z.imag)} for z in estimate.points]
    return result


def task_fd_probe(ctx, options):
    value = fd_positivity_probe(ctx.model, options.get("t_grid", [0.01, 0.1, 1.0]), options.get("samples"),
                                options.get("seed", ctx.seed))
    positive = value > settings.FD_POSITIVE_FLOOR
    return {"min_value": value, "positive": positive, "passed": positive}


def task_fd_derivative(ctx, options):
    rng = np.random.default_rng(options.get("seed", ctx.seed))
    count = options.get("samples", 100)
    worst, cases = 0.0, []
    for u, v in zip(random_unit_vectors(rng, count, ctx.model.n), random_unit_vectors(rng, count, ctx.model.n)):
        v = v - u * np.vdot(u, v)
        v = v / np.linalg.norm(v)
        analytic, numeric = initial_derivative(ctx.model, u, v)
        worst = max(worst, abs(analytic - numeric) / (1.0 + abs(analytic)))
    if "u" in options and "v" in options:
        analytic, numeric = initial_derivative(ctx.model, as_complex_array(options["u"], 1, "u"),
                                               as_complex_array(options["v"], 1, "v"))
        cases.append({"analytic": analytic, "numeric": numeric})
        worst = max(worst, abs(analytic - numeric) / (1.0 + abs(analytic)))
    return {"samples": count, "max_rel_err": worst, "cases": cases, "passed": worst <= 1e-5}


TASKS = {
    "kossakowski": task_kossakowski,
    "minimality": task_minimality,
    "bogoliubov": task_bogoliubov,
    "lemma1": task_lemma1,
    "theorem2": task_theorem2,
    "evolve": task_evolve,
    "support": task_support,
    "improve": task_improve,
    "invariant": task_invariant,
    "sector": task_sector,
    "fd-probe": task_fd_probe,
    "fd-derivative": task_fd_derivative,
}


def emit_plotdata(result, kind, path):
    '''Plot-ready CSV (UTF-8, LF) for one task result.'''
    if kind not in PLOT_KINDS:
        raise ValueError(f"unknown plot kind {kind!r}, expected one of {', '.join(PLOT_KINDS)}")
    if kind == "numerical-range-scatter":
        header = ["re", "im"]
        rows = [[repr(p["re"]), repr(p["im"])] for p in result.get("_points", [])]
    else:
        column = "support_rank" if kind == "support-rank-vs-t" else "min_eig"
        header = ["psi_index", "t", column]
        rows = [[s["psi_index"], repr(float(s["t"])), s[column] if column == "support_rank" else repr(float(s[column]))]
                for s in result.get("_series", [])]
    if not rows:
        raise ValueError(f"result carries no data for {kind}")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _matches(actual, expected):
    if isinstance(expected, bool) or isinstance(actual, bool):
        return actual is expected or actual == expected
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        return math.isclose(actual, expected, rel_tol=1e-9, abs_tol=1e-12)
    return actual == expected


def run_task(ctx, index, options, output_dir):
    name = options["task"]
    prefix = f"{index:02d}_{name}"
    logger.info(f"task {index}: {name}")
    try:
        if name == "evolve":
            result = task_evolve(ctx, options, output_dir, prefix)
        else:
            result = TASKS[name](ctx, options)
    except (QMSError, ValueError, KeyError) as e:
        logger.error(f"task {index} ({name}) failed: {e}")
        result = {"error": str(e), "passed": False}

    plot_files = []
    kinds = ["support-rank-vs-t", "min-eig-vs-t"] if "_series" in result else []
    if "_points" in result:
        kinds = ["numerical-range-scatter"]
    for kind in kinds:
        plot_files.append(os.path.basename(emit_plotdata(result, kind, os.path.join(output_dir, f"{prefix}_{kind}.csv"))))

    expect = options.get("expect")
    if expect is not None:
        verdict = all(key in result and _matches(result[key], value) for key, value in expect.items())
    else:
        verdict = bool(result["passed"])
    public = {k: v for k, v in result.items() if not k.startswith("_")}
    logger.info(f"task {index}: {name} {'passed' if verdict else 'FAILED'}")
    return {"index": index, "task": name, "verdict": verdict, "expect": expect,
            "result": to_jsonable(public), "plot_files": plot_files}


def run_scenario(config, output_dir):
    '''Run every task in order, write report.json and the CSVs, and return the exit code.'''
    ctx = ScenarioContext(config)
    os.makedirs(output_dir, exist_ok=True)
    started = time.time()
    entries, durations = [], []
    for index, options in enumerate(config["tasks"]):
        tick = time.perf_counter()
        entries.append(run_task(ctx, index, options, output_dir))
        durations.append(time.perf_counter() - tick)

    passed = all(entry["verdict"] for entry in entries)
    exit_code = EXIT_OK if passed else EXIT_ASSERTION_FAILED
    report = {
        "scenario": config["name"],
        "seed": config["seed"],
        "config_hash": config_hash(config),
        "config": config,
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__},
        "tasks": entries,
        "passed": passed,
        "exit_code": exit_code,
        "timestamps": {"started": started, "finished": time.time(), "task_seconds": durations},
    }
    with open(os.path.join(output_dir, "report.json"), "w", encoding="utf-8", newline="\n") as handle:
        json.dump(report, handle, sort_keys=True, indent=2)
        handle.write("\n")

    ledger = RunLedger(os.path.join(output_dir, "runs.db"))
    ledger.insert_run(config["name"], config["seed"], report["config_hash"], exit_code,
                      {f"{e['index']:02d}_{e['task']}": e["verdict"] for e in entries})
    ledger.close_connection()
    return exit_code


def parse_args(argv=None):
    parser = argparse.ArgumentParser(prog="qms_tool", description="Gaussian QMS toolkit: run or validate a scenario.")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, text in (("run", "run every task of a scenario"), ("validate", "check a scenario file")):
        sub = subparsers.add_parser(command, help=text)
        sub.add_argument("--config", required=True, help="path to the scenario JSON file")
        sub.add_argument("--verbose", action="store_true", help="debug logging")
        if command == "run":
            sub.add_argument("--output-dir", default=None, help="report directory (default: scenario output_dir or ./output)")
    return parser.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)
        logger.setLevel(logging.DEBUG)

    try:
        config = load_scenario(args.config)
        if args.command == "validate":
            ScenarioContext(config)
            print(f"[validate] OK {args.config}")
            return EXIT_OK
        output_dir = args.output_dir or config.get("output_dir") or "output"
        return run_scenario(config, output_dir)
    except ConfigError as e:
        logger.error(f"invalid scenario {args.config}")
        for pointer, message in e.problems:
            print(f"[error] {pointer or '/'}: {message}")
        return EXIT_INPUT_ERROR
    except QMSError as e:
        print(f"[error] {e}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
