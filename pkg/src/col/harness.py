"""Experiment orchestration: config parsing, sweeps, CSV persistence.

A config is a single human-readable YAML tree with an explicit ``version``
key.  One experiment expands into (algorithm x seed) cells; each cell owns
an RNG stream derived from (master seed, config seed entry), so results do
not depend on scheduling, and re-running a persisted config reproduces
byte-identical trace CSVs.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import yaml

from .algorithms import Schedule, run
from .core import FeedbackSpec, ProblemError
from .geometry import geometry_by_name, set_from_config
from .imitation import make_il_problem, random_mdp, random_policy, TabularMDP
from .metrics import RunTrace, check_theorem_bounds, read_trace_csv, regret_slope
from .problems import (PredictableSequence, expansive_tracking_1d,
                       linear_vi_bifunction, make_quadratic_tracking,
                       matrix_game_bifunction, rotation_tracking)


class ConfigError(ProblemError):
    pass


CONFIG_VERSION = 1


def load_config(path) -> dict:
    with open(path) as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    return cfg


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply dotted-path key=value overrides (used by --set and sweeps)."""
    for key, value in overrides:
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = yaml.safe_load(value) if isinstance(value, str) else value
    return cfg


def validate_config(cfg: dict) -> dict:
    if cfg.get("version") != CONFIG_VERSION:
        raise ConfigError(f"config version must be {CONFIG_VERSION}")
    for key in ("problem", "algorithms", "horizon", "seeds"):
        if key not in cfg:
            raise ConfigError(f"missing config key {key!r}")
    if not cfg["seeds"]:
        raise ConfigError("seeds list must be non-empty")
    if int(cfg["horizon"]) < 1:
        raise ConfigError("horizon must be >= 1")
    if not cfg["algorithms"]:
        raise ConfigError("algorithms list must be non-empty")
    # master seed: env override, else config, else 0
    env = os.environ.get("COL_SEED")
    if env is not None:
        cfg["master_seed"] = int(env)
    else:
        cfg.setdefault("master_seed", 0)
    # fail fast on problem/algorithm construction
    problem = problem_from_config(cfg["problem"])
    for entry in cfg["algorithms"]:
        _cell_plan(cfg, entry, problem)
    return cfg


def problem_from_config(node: dict):
    family = node.get("family")
    if family == "quadratic_tracking":
        dset = set_from_config(node["set"])
        problem = make_quadratic_tracking(float(node["alpha"]),
                                          float(node["lambda"]),
                                          node.get("c", [0.0] * dset.dim), dset)
    elif family == "rotation":
        dset = set_from_config(node["set"])
        problem = rotation_tracking(float(node["alpha"]),
                                    float(node["angle_deg"]), dset)
    elif family == "expansive_1d":
        problem = expansive_tracking_1d()
    elif family == "matrix_game":
        problem = matrix_game_bifunction(node["payoff"])
    elif family == "linear_vi":
        dset = set_from_config(node["set"])
        problem = linear_vi_bifunction(node["matrix"],
                                       node.get("q", [0.0] * dset.dim), dset)
    elif family == "imitation":
        if "mdp_file" in node:
            mdp = TabularMDP.from_file(node["mdp_file"])
        else:
            mdp = random_mdp(int(node["states"]), int(node["actions"]),
                             int(node["mdp_horizon"]), seed=int(node.get("mdp_seed", 0)))
        expert = random_policy(mdp.n_states, mdp.n_actions,
                               seed=int(node.get("expert_seed", 0)))
        problem = make_il_problem(mdp, expert, float(node["mu_reg"]),
                                  seed=int(node.get("beta_seed", 0)))
    else:
        raise ConfigError(f"unknown problem family {family!r}")
    drift = node.get("drift")
    if drift:
        problem = PredictableSequence(problem, drift["schedule"],
                                      int(drift.get("seed", 0)))
    return problem


def _cell_plan(cfg: dict, entry: dict, problem) -> dict:
    kind = entry.get("kind")
    geometry = geometry_by_name(entry.get("geometry", "euclidean"))
    schedule = None
    if "schedule" in entry:
        schedule = Schedule.from_config(entry["schedule"])
    fb_node = entry.get("feedback", cfg.get("feedback", {"mode": "deterministic"}))
    feedback = FeedbackSpec(
        mode=fb_node.get("mode", "deterministic"),
        sigma=float(fb_node.get("sigma", 0.0)),
        noise_seed=int(fb_node.get("noise_seed", 0)),
        bias_schedule=fb_node.get("bias_schedule", "zero"),
        kappa=float(fb_node.get("kappa", 0.0)))
    label = entry.get("label") or kind
    return {
        "kind": kind, "geometry": geometry, "schedule": schedule,
        "feedback": feedback, "label": label,
        "trap_lambda": entry.get("trap_lambda"),
        "x1": cfg.get("x1"), "x_star": cfg.get("x_star", "auto"),
    }


def derive_seed(master: int, entry: int) -> int:
    """Per-cell RNG seed from (master seed, config seed entry)."""
    ss = np.random.SeedSequence([int(master), int(entry)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] % (2 ** 62))


def _run_cell(cfg: dict, alg_index: int, seed_entry: int):
    problem = problem_from_config(cfg["problem"])
    plan = _cell_plan(cfg, cfg["algorithms"][alg_index], problem)
    trace = run(plan["kind"], problem,
                feedback=plan["feedback"],
                n_rounds=int(cfg["horizon"]),
                seed=derive_seed(cfg["master_seed"], seed_entry),
                geometry=plan["geometry"], schedule=plan["schedule"],
                x1=plan["x1"], trap_lambda=plan["trap_lambda"],
                x_star=plan["x_star"])
    trace.meta["label"] = plan["label"]
    trace.meta["seed_entry"] = seed_entry
    return trace


def _summary_row(cfg, plan, seed_entry, trace, problem):
    n = trace.n_rounds
    slope = regret_slope(trace.dynamic_regret_cum, max(1, n // 10), n)
    row = {
        "label": plan["label"], "algorithm": trace.algorithm_id,
        "seed": seed_entry, "n": n,
        "dynamic_regret": float(trace.dynamic_regret_cum[-1]),
        "static_regret_vs_star": float(trace.static_regret_cum[-1]),
        "slope_last_decade": slope,
        "theorem4_upper_slack": float("nan"),
        "theorem4_lower_slack": float("nan"),
    }
    if trace.x_star is not None and plan["feedback"].mode == "deterministic" \
            and trace.drift is None:
        try:
            row["theorem4_upper_slack"] = check_theorem_bounds(
                trace, problem, "dynamic_upper").min_slack
            row["theorem4_lower_slack"] = check_theorem_bounds(
                trace, problem, "dynamic_lower").min_slack
        except Exception:
            pass
    return row


SUMMARY_COLUMNS = ("label", "algorithm", "seed", "n", "dynamic_regret",
                   "static_regret_vs_star", "slope_last_decade",
                   "theorem4_upper_slack", "theorem4_lower_slack")


def _write_summary(path, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            out = []
            for col in SUMMARY_COLUMNS:
                v = r[col]
                out.append(str(v) if isinstance(v, (int, str)) else repr(float(v)))
            fh.write(",".join(out) + "\n")


def trace_filename(label: str, seed_entry: int) -> str:
    return f"trace_{label}_s{seed_entry}.csv"


def run_experiment(cfg: dict, out_dir, workers: int = 1) -> dict:
    """Run all (algorithm, seed) cells; returns {cell filename: RunTrace}.

    Writes one trace CSV per cell, a summary CSV, and the resolved config
    for replay.  Oracle failures in a cell are recorded without aborting
    the sweep.
    """
    cfg = validate_config(dict(cfg))
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.yaml"), "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)

    cells = [(ai, se) for ai in range(len(cfg["algorithms"]))
             for se in cfg["seeds"]]
    problem = problem_from_config(cfg["problem"])
    traces, rows, failures = {}, [], []

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {(ai, se): pool.submit(_run_cell, cfg, ai, se)
                       for ai, se in cells}
            results = {key: f.result() for key, f in futures.items()}
    else:
        results = {}
        for ai, se in cells:
            try:
                results[(ai, se)] = _run_cell(cfg, ai, se)
            except Exception as exc:  # record, keep sweeping
                failures.append({"cell": (ai, se), "error": str(exc)})
                results[(ai, se)] = None

    for ai, se in cells:
        trace = results[(ai, se)]
        if trace is None:
            continue
        plan = _cell_plan(cfg, cfg["algorithms"][ai], problem)
        fname = trace_filename(plan["label"], se)
        trace.to_csv(os.path.join(out_dir, fname))
        rows.append(_summary_row(cfg, plan, se, trace, problem))
        traces[fname] = trace
    _write_summary(os.path.join(out_dir, "summary.csv"), rows)
    if failures:
        with open(os.path.join(out_dir, "failures.txt"), "w") as fh:
            for f in failures:
                fh.write(f"{f['cell']}: {f['error']}\n")
    return traces


def summarize_dir(out_dir) -> list[dict]:
    """Recompute per-trace summaries offline from the persisted CSVs."""
    rows = []
    for name in sorted(os.listdir(out_dir)):
        if not (name.startswith("trace_") and name.endswith(".csv")):
            continue
        data = read_trace_csv(os.path.join(out_dir, name))
        cum = data["dynamic_regret_cum"]
        n = len(cum)
        rows.append({
            "trace": name, "n": n,
            "dynamic_regret": float(cum[-1]),
            "static_regret_vs_star": float(data["static_regret_cum"][-1]),
            "slope_last_decade": regret_slope(cum, max(1, n // 10), n),
        })
    return rows


def sweep(cfg: dict, grid_key: str, values, out_dir, workers: int = 1) -> list:
    """Run one experiment per grid value of a dotted config key."""
    results = []
    for v in values:
        sub = yaml.safe_load(yaml.safe_dump(cfg))  # deep copy via yaml round trip
        apply_overrides(sub, [(grid_key, v)])
        sub_dir = os.path.join(out_dir, f"{grid_key.replace('.', '_')}={v}")
        results.append((v, run_experiment(sub, sub_dir, workers=workers)))
    return results
