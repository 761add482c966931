"""Experiment runner: named recipes, deterministic seeding, replayable outputs.

Verbs:

    projens run <config.json>      execute a recipe, write results + manifest
    projens replay <manifest.json> re-execute from a manifest and compare bytes
    projens validate <config.json> check a config without running it

A config is a single JSON document::

    {
      "recipe": "design-sweep",          # one of RECIPES
      "master_seed": 1,                  # optional, default 0
      "jobs": 4,                         # optional parallelism degree
      "output": "runs/my-sweep",         # optional output directory
      "params": { ... }                  # recipe-specific grid, see DEFAULTS
    }

Omitted params take the recipe defaults below. Outputs land in one
directory per run: ``manifest.json`` plus per-table CSV/JSON files with
comma delimiters and floats at 17 significant digits. Every grid point is
flushed to ``points/<id>.json`` as soon as it completes, and a rerun over
the same directory skips completed points, so interrupted runs resume.

Determinism: all randomness derives from (master_seed, point path) via
dedicated streams, and final tables are assembled in a fixed grid order,
so outputs are byte-identical for any ``jobs`` value. ``replay`` re-runs
the manifest's config into a sibling directory and compares every result
file byte for byte (the manifest itself is excluded: it records wall
time). Exit status: 0 success, 1 usage/config errors, 2 violation of an
exactly-evaluated theorem bound (or a failed replay comparison).
"""

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import analysis
from . import circuit as circuitmod
from . import ensemble as ensemblemod
from . import gates as gatesmod
from . import purification as purifmod
from . import rng as rngmod

OUTPUT_ROOT_ENV = "PROJENS_OUTPUT_ROOT"
RECIPES = ("design-sweep", "purify-sweep", "bound-check", "kim-check", "swap-null")
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

DEFAULTS = {
    "design-sweep": {
        "N_A": 1,
        "N_B_list": [4, 6, 8, 10, 12],
        "t_list": [1, 2, 3, 4],
        "k_list": [1, 2, 3],
        "epsilon": 0.05,
        "instances": 3,
        "family": {"kind": "haar_du"},
    },
    "purify-sweep": {
        "t_list": [6, 8, 10, 12],
        "mu_list": [0.25, 0.5, 0.75, 1.0],
        "J_list": [1.0],
        "r_max": None,  # null = adaptive horizon per depth
        "trajectories": 500,
        "normalize_by_t": False,
    },
    "bound-check": {
        "N_A": 2,
        "N_B": 6,
        "t": 2,
        "mu_list": [0.0, 0.5, 1.0],
        "instances": 5,
        "k_max": 3,
        "atol": 1e-9,
        "family": {"kind": "haar_du"},
    },
    "kim-check": {
        "N_list": [4, 6],
        "t_list": [1, 2, 3],
        "g_count": 3,
        "g_list": None,  # explicit values override g_count random draws
        "atol": 1e-8,
    },
    "swap-null": {
        "N_A": 1,
        "N_B": 5,
        "t_list": [1, 2, 3, 4],
        "k_list": [1, 2],
    },
}


@dataclass
class ExperimentConfig:
    recipe: str
    params: dict = field(default_factory=dict)
    master_seed: int = 0
    jobs: int = 1
    output: str = None

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            doc = json.load(fh)
        known = {"recipe", "params", "master_seed", "jobs", "output"}
        for key in doc:
            if key not in known:
                raise ValueError(f"{key}: unknown config field")
        return cls(
            recipe=doc.get("recipe"),
            params=doc.get("params", {}),
            master_seed=doc.get("master_seed", 0),
            jobs=doc.get("jobs", 1),
            output=doc.get("output"),
        )

    def validate(self):
        """Full parameter check; raises ValueError naming the bad field."""
        if self.recipe not in RECIPES:
            raise ValueError(f"recipe: expected one of {RECIPES}, got {self.recipe!r}")
        if not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ValueError(f"master_seed: need a nonnegative integer, got {self.master_seed!r}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ValueError(f"jobs: need a positive integer, got {self.jobs!r}")
        defaults = DEFAULTS[self.recipe]
        for key in self.params:
            if key not in defaults:
                raise ValueError(f"params.{key}: unknown field for recipe {self.recipe}")
        merged = self.merged_params()
        _validate_params(self.recipe, merged)
        return self

    def merged_params(self):
        merged = dict(DEFAULTS[self.recipe])
        merged.update(self.params)
        return merged

    def to_dict(self):
        return {
            "recipe": self.recipe,
            "params": self.merged_params(),
            "master_seed": self.master_seed,
            "jobs": self.jobs,
            "output": self.output,
        }


def _validate_params(recipe, p):
    def need_pos_ints(key, allow_zero=False):
        vals = p[key]
        low = 0 if allow_zero else 1
        if not isinstance(vals, list) or not vals or any(
            not isinstance(v, int) or v < low for v in vals
        ):
            raise ValueError(f"params.{key}: need a nonempty list of integers >= {low}")

    if recipe == "design-sweep":
        need_pos_ints("N_B_list")
        need_pos_ints("t_list")
        need_pos_ints("k_list")
        if not isinstance(p["N_A"], int) or p["N_A"] < 1:
            raise ValueError("params.N_A: need a positive integer")
        if max(p["N_B_list"]) > ensemblemod.DENSE_QUBIT_GUARD:
            raise ValueError(
                f"params.N_B_list: exact enumeration is guarded to "
                f"{ensemblemod.DENSE_QUBIT_GUARD} bath qubits"
            )
        if p["N_A"] * max(p["k_list"]) > ensemblemod.DENSE_QUBIT_GUARD:
            raise ValueError("params.k_list: k * N_A exceeds the dense moment guard")
        if not 0.0 < p["epsilon"] < 1.0:
            raise ValueError("params.epsilon: need a threshold in (0, 1)")
        if not isinstance(p["instances"], int) or p["instances"] < 1:
            raise ValueError("params.instances: need a positive integer")
        gatesmod.family_from_spec(**p["family"])
    elif recipe == "purify-sweep":
        need_pos_ints("t_list")
        for key in ("mu_list", "J_list"):
            vals = p[key]
            if not isinstance(vals, list) or not vals or any(
                not 0.0 <= float(v) <= 1.0 for v in vals
            ):
                raise ValueError(f"params.{key}: need a nonempty list of values in [0, 1]")
        if max(p["t_list"]) + 2 > purifmod.QUBIT_CAP:
            raise ValueError(f"params.t_list: t + 2 exceeds the {purifmod.QUBIT_CAP}-qubit cap")
        if p["r_max"] is not None and (not isinstance(p["r_max"], int) or p["r_max"] < 1):
            raise ValueError("params.r_max: need a positive integer or null")
        if not isinstance(p["trajectories"], int) or p["trajectories"] < 1:
            raise ValueError("params.trajectories: need a positive integer")
    elif recipe == "bound-check":
        for key in ("N_A", "N_B", "t", "instances", "k_max"):
            if not isinstance(p[key], int) or p[key] < 1:
                raise ValueError(f"params.{key}: need a positive integer")
        if p["N_B"] > ensemblemod.DENSE_QUBIT_GUARD:
            raise ValueError("params.N_B: exceeds the exact-enumeration guard")
        if p["N_A"] * p["k_max"] > ensemblemod.DENSE_QUBIT_GUARD:
            raise ValueError("params.k_max: k_max * N_A exceeds the dense moment guard")
        if any(not 0.0 <= float(m) <= 1.0 for m in p["mu_list"]):
            raise ValueError("params.mu_list: need values in [0, 1]")
        gatesmod.family_from_spec(**p["family"])
    elif recipe == "kim-check":
        need_pos_ints("N_list")
        need_pos_ints("t_list")
        if max(p["N_list"]) > circuitmod.KIM_DENSE_GUARD:
            raise ValueError(f"params.N_list: dense guard is {circuitmod.KIM_DENSE_GUARD} qubits")
        if p["g_list"] is None:
            if not isinstance(p["g_count"], int) or p["g_count"] < 1:
                raise ValueError("params.g_count: need a positive integer")
        elif not isinstance(p["g_list"], list) or not p["g_list"]:
            raise ValueError("params.g_list: need a nonempty list or null")
    elif recipe == "swap-null":
        need_pos_ints("t_list")
        need_pos_ints("k_list")
        for key in ("N_A", "N_B"):
            if not isinstance(p[key], int) or p[key] < 1:
                raise ValueError(f"params.{key}: need a positive integer")
        if p["N_A"] * max(p["k_list"]) > ensemblemod.DENSE_QUBIT_GUARD:
            raise ValueError("params.k_list: k * N_A exceeds the dense moment guard")


# --- formatting -------------------------------------------------------------

def _fmt(value):
    """CSV cell: floats at 17 significant digits, everything else verbatim."""
    if isinstance(value, (bool, int, str)):
        return str(value)
    return format(float(value), ".17g")


def _write_csv(path, header, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def _write_json(path, doc):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# --- grid points ------------------------------------------------------------

def _grid_points(recipe, params, master_seed):
    """Deterministically ordered (point_id, point) pairs for the recipe."""
    pts = []
    if recipe == "design-sweep":
        for n_b in params["N_B_list"]:
            for inst in range(params["instances"]):
                pts.append((f"NB{n_b}_i{inst}", {"N_B": n_b, "instance": inst}))
    elif recipe == "purify-sweep":
        for t in params["t_list"]:
            for mu in params["mu_list"]:
                for j in params["J_list"]:
                    pid = f"t{t}_mu{_fmt(mu)}_J{_fmt(j)}"
                    pts.append((pid, {"t": t, "mu": float(mu), "J_frac": float(j)}))
    elif recipe == "bound-check":
        for mu in params["mu_list"]:
            for inst in range(params["instances"]):
                pts.append((f"mu{_fmt(mu)}_i{inst}", {"mu": float(mu), "instance": inst}))
    elif recipe == "kim-check":
        if params["g_list"] is not None:
            gs = [float(g) for g in params["g_list"]]
        else:
            rng = rngmod.stream(master_seed, rngmod.SCAN)
            gs = [float(g) for g in rng.uniform(0.0, 2.0 * np.pi, params["g_count"])]
        for n in params["N_list"]:
            for t in params["t_list"]:
                for gi, g in enumerate(gs):
                    pts.append((f"N{n}_t{t}_g{gi}", {"N": n, "t": t, "g": g}))
    elif recipe == "swap-null":
        for t in params["t_list"]:
            pts.append((f"t{t}", {"t": t}))
    return pts


def _run_point(recipe, params, master_seed, point, jobs=1):
    """Compute one grid point; pure function of its arguments.

    ``jobs`` only parallelizes within the point (trajectory bundles);
    results are identical for any value.
    """
    if recipe == "design-sweep":
        return _design_point(params, master_seed, point)
    if recipe == "purify-sweep":
        return _purify_point(params, master_seed, point, jobs=jobs)
    if recipe == "bound-check":
        return _bound_point(params, master_seed, point)
    if recipe == "kim-check":
        return _kim_point(params, point)
    if recipe == "swap-null":
        return _swap_point(params, master_seed, point)
    raise ValueError(f"unknown recipe {recipe!r}")


def _design_point(params, master_seed, point):
    n_a, n_b = params["N_A"], point["N_B"]
    seed = rngmod.derive_seed(master_seed, rngmod.INSTANCE, point["instance"])
    family = gatesmod.family_from_spec(**params["family"])
    basis = circuitmod.MeasurementBasis(circuitmod.BELL)
    rows = []
    scans = {k: {} for k in params["k_list"]}
    for t in sorted(params["t_list"]):
        circ = circuitmod.build_circuit(n_a + n_b, t, family, seed)
        psi = circuitmod.evolve(circ, circuitmod.BELL_PAIRS)
        units = circuitmod.measurement_units(
            n_a + n_b, n_a, t, basis, allow_boundary=(n_a % 2 == t % 2)
        )
        ens = ensemblemod.project(psi, range(n_a), basis, units=units).validate()
        for k in params["k_list"]:
            f = ensemblemod.frame_potential(ens, k)
            f_h = ensemblemod.haar_frame_potential(n_a, k)
            delta = ensemblemod.design_distance(ens, k, alpha=2).value
            scans[k][t] = delta
            rows.append(
                {"t": t, "k": k, "frame_potential": f, "haar_frame_potential": f_h,
                 "delta2": delta}
            )
    times = {
        str(k): ensemblemod.design_time(scans[k], params["epsilon"])
        for k in params["k_list"]
    }
    return {"seed": seed, "rows": rows, "design_times": times}


def _purify_point(params, master_seed, point, jobs=1):
    t = point["t"]
    config = purifmod.PurificationConfig(
        t=t,
        r_max=params["r_max"],
        mu=point["mu"],
        J_frac=point["J_frac"],
        trajectories=params["trajectories"],
        master_seed=rngmod.derive_seed(
            master_seed, rngmod.INSTANCE, t, int(round(point["mu"] * 10**6)),
            int(round(point["J_frac"] * 10**6)),
        ),
    )
    trace = purifmod.run_purification(config, jobs=jobs)
    return {
        "master_seed": config.master_seed,
        "s2": [float(v) for v in trace.s2],
        "stderr": [float(v) for v in trace.stderr],
        "n_traj": trace.n_traj,
    }


def _bound_point(params, master_seed, point):
    n_a, n_b, t = params["N_A"], params["N_B"], params["t"]
    seed = rngmod.derive_seed(master_seed, rngmod.INSTANCE, point["instance"])
    family = gatesmod.family_from_spec(**params["family"])
    basis = circuitmod.MeasurementBasis(circuitmod.MU_INTERPOLATED, point["mu"])
    circ = circuitmod.build_circuit(n_a + n_b, t, family, seed)
    psi = circuitmod.evolve(circ, circuitmod.BELL_PAIRS)
    units = circuitmod.measurement_units(
        n_a + n_b, n_a, t, basis, allow_boundary=(n_a % 2 == t % 2)
    )
    violations = []
    try:
        report = purifmod.verify_purity_bound(
            psi, range(n_a), basis, units=units, k_max=params["k_max"],
            atol=params["atol"],
        )
    except AssertionError as exc:
        return {"seed": seed, "violations": [str(exc)], "entries": []}
    ens = ensemblemod.project(psi, range(n_a), basis, units=units)
    rho1 = ensemblemod.moment(ens, 1).entries
    f_vals = np.einsum("zi,ij,zj->z", ens.states.conj(), rho1, ens.states).real
    holder_ok = all(
        purifmod.verify_holder(ens.probabilities, f_vals, k)
        for k in range(1, params["k_max"] + 1)
    )
    if not holder_ok:
        violations.append("Hoelder step failed on conditional purities")
    bound = analysis.check_design_bounds(
        n_a,
        frame_potentials={int(k): v for k, v in report.frame_potentials.items()},
        entropy_by_r=report.entropy_by_r(),
        atol=params["atol"],
    )
    violations.extend(bound.violations)
    return {
        "seed": seed,
        "violations": violations,
        "entries": report.entries,
        "tightest_r": {str(k): list(v) for k, v in report.tightest_r.items()},
        "entropy_by_r": {str(r): s for r, s in report.entropy_by_r().items()},
        "log_bound": bound.log_bound,
    }


def _kim_point(params, point):
    n, t, g = point["N"], point["t"], point["g"]
    dist = gatesmod.phase_distance(
        circuitmod.kim_brickwork_operator(n, t, g),
        np.linalg.matrix_power(circuitmod.kicked_ising_floquet(n, g), t),
    )
    ok = dist <= params["atol"]
    violations = [] if ok else [
        f"kicked-Ising brickwork off by {dist:.3e} at N={n}, t={t}, g={g}"
    ]
    return {"distance": float(dist), "ok": ok, "violations": violations}


def _swap_point(params, master_seed, point):
    n_a, n_b, t = params["N_A"], params["N_B"], point["t"]
    family = gatesmod.FixedGate.of(gatesmod.SWAP)
    basis = circuitmod.MeasurementBasis(circuitmod.COMPUTATIONAL)
    circ = circuitmod.build_circuit(n_a + n_b, t, family, master_seed)
    psi = circuitmod.evolve(circ, circuitmod.BELL_PAIRS)
    ens = ensemblemod.project(psi, range(n_a), basis).validate()
    return {
        "deltas": {
            str(k): ensemblemod.design_distance(ens, k, alpha=2).value
            for k in params["k_list"]
        }
    }


# --- assembly ---------------------------------------------------------------

def _assemble(recipe, params, master_seed, points, results, outdir):
    """Write final tables from per-point results; returns (files, violations)."""
    files = []
    violations = []
    if recipe == "design-sweep":
        rows = []
        times = []
        for pid, point in points:
            res = results[pid]
            for r in res["rows"]:
                rows.append(
                    (params["N_A"], point["N_B"], r["t"], r["k"], point["instance"],
                     res["seed"], r["frame_potential"], r["haar_frame_potential"],
                     r["delta2"])
                )
            for k, t_k in sorted(res["design_times"].items(), key=lambda kv: int(kv[0])):
                times.append(
                    {"N_A": params["N_A"], "N_B": point["N_B"],
                     "instance": point["instance"], "k": int(k), "t_k": t_k}
                )
        _write_csv(
            os.path.join(outdir, "design_sweep.csv"),
            ["N_A", "N_B", "t", "k", "instance", "seed", "frame_potential",
             "haar_frame_potential", "delta2"],
            rows,
        )
        _write_json(os.path.join(outdir, "design_times.json"), times)
        files = ["design_sweep.csv", "design_times.json"]
    elif recipe == "purify-sweep":
        rows = []
        fits = {"xi_p": [], "v_p": []}
        by_group = {}
        for pid, point in points:
            res = results[pid]
            for r, (s2, se) in enumerate(zip(res["s2"], res["stderr"])):
                rows.append(
                    (point["t"], point["mu"], point["J_frac"], r, s2, se,
                     res["n_traj"], res["master_seed"])
                )
            by_group.setdefault((point["mu"], point["J_frac"]), {})[point["t"]] = res
        _write_csv(
            os.path.join(outdir, "trace.csv"),
            ["t", "mu", "J_frac", "r", "S2_annealed", "stderr", "n_traj", "master_seed"],
            rows,
        )
        for (mu, j), group in sorted(by_group.items()):
            xi_by_t = {}
            for t, res in sorted(group.items()):
                series = (np.arange(len(res["s2"])), np.array(res["s2"]),
                          np.array(res["stderr"]))
                try:
                    fit = analysis.fit_xi_p(series)
                except ValueError as exc:
                    fits["xi_p"].append(
                        {"t": t, "mu": mu, "J_frac": j, "xi_p": None, "r2": None,
                         "window": None, "error": str(exc)}
                    )
                    continue
                fits["xi_p"].append(
                    {"t": t, "mu": mu, "J_frac": j, "xi_p": fit.xi_p,
                     "r2": fit.goodness, "window": list(fit.window),
                     "no_purification": fit.no_purification}
                )
                if not fit.no_purification:
                    xi_by_t[t] = fit
            try:
                v_p, stderr = analysis.fit_v_p(
                    xi_by_t, normalize_by_t=params["normalize_by_t"]
                )
                fits["v_p"].append(
                    {"mu": mu, "J_frac": j, "v_p": v_p, "stderr": stderr,
                     "normalized": params["normalize_by_t"]}
                )
            except ValueError as exc:
                fits["v_p"].append(
                    {"mu": mu, "J_frac": j, "v_p": None, "stderr": None,
                     "normalized": params["normalize_by_t"], "error": str(exc)}
                )
        _write_json(os.path.join(outdir, "fits.json"), fits)
        files = ["trace.csv", "fits.json"]
    elif recipe == "bound-check":
        rows = []
        doc = []
        for pid, point in points:
            res = results[pid]
            violations.extend(res["violations"])
            for e in res["entries"]:
                rows.append(
                    (point["mu"], point["instance"], e["k"], e["r"], e["lhs"],
                     e["rhs"], e["slack"])
                )
            doc.append({"point": pid, **{k: v for k, v in res.items() if k != "entries"}})
        _write_csv(
            os.path.join(outdir, "bound_check.csv"),
            ["mu", "instance", "k", "r", "frame_potential", "bound", "slack"],
            rows,
        )
        _write_json(os.path.join(outdir, "bound_check.json"), doc)
        files = ["bound_check.csv", "bound_check.json"]
    elif recipe == "kim-check":
        rows = []
        for pid, point in points:
            res = results[pid]
            violations.extend(res["violations"])
            rows.append(
                (point["N"], point["t"], point["g"], res["distance"],
                 params["atol"], res["ok"])
            )
        _write_csv(
            os.path.join(outdir, "kim_check.csv"),
            ["N", "t", "g", "distance", "atol", "ok"],
            rows,
        )
        files = ["kim_check.csv"]
    elif recipe == "swap-null":
        rows = []
        for pid, point in points:
            for k, delta in sorted(results[pid]["deltas"].items(), key=lambda kv: int(kv[0])):
                rows.append((params["N_A"], params["N_B"], point["t"], int(k), delta))
        _write_csv(
            os.path.join(outdir, "swap_null.csv"),
            ["N_A", "N_B", "t", "k", "delta2"],
            rows,
        )
        files = ["swap_null.csv"]
    return files, violations


# --- run / replay / validate ------------------------------------------------

def _resolve_outdir(config, cli_out):
    out = cli_out or config.output or os.path.join("runs", config.recipe)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not os.path.isabs(out):
        out = os.path.join(root, out)
    return out


def _worker(recipe, params, master_seed, point, jobs=1):
    return _run_point(recipe, params, master_seed, point, jobs=jobs)


def run(config, outdir, jobs=None):
    """Execute the recipe; returns (exit_status, outdir)."""
    config.validate()
    jobs = jobs or config.jobs
    params = config.merged_params()
    os.makedirs(os.path.join(outdir, "points"), exist_ok=True)
    points = _grid_points(config.recipe, params, config.master_seed)
    started = time.monotonic()
    results = {}
    pending = []
    for pid, point in points:
        path = os.path.join(outdir, "points", pid + ".json")
        if os.path.exists(path):
            with open(path) as fh:
                results[pid] = json.load(fh)
        else:
            pending.append((pid, point))
    # purify-sweep points differ wildly in cost (the horizon grows with t),
    # so the parallelism goes inside each point (over trajectory bundles)
    # rather than across points; either split is deterministic.
    inner_jobs = jobs if config.recipe == "purify-sweep" else 1
    if pending and jobs > 1 and inner_jobs == 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pid: pool.submit(_worker, config.recipe, params, config.master_seed, point)
                for pid, point in pending
            }
            for pid, fut in futures.items():
                results[pid] = fut.result()
                _write_json(os.path.join(outdir, "points", pid + ".json"), results[pid])
    else:
        for pid, point in pending:
            results[pid] = _worker(
                config.recipe, params, config.master_seed, point, jobs=inner_jobs
            )
            _write_json(os.path.join(outdir, "points", pid + ".json"), results[pid])
    files, violations = _assemble(
        config.recipe, params, config.master_seed, points, results, outdir
    )
    manifest = {
        "recipe": config.recipe,
        "params": params,
        "master_seed": config.master_seed,
        "versions": {
            "projens": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "files": files,
        "points": [pid for pid, _ in points],
        "wall_time_s": time.monotonic() - started,
        "violations": violations,
    }
    _write_json(os.path.join(outdir, "manifest.json"), manifest)
    for v in violations:
        print(f"VIOLATION: {v}", file=sys.stderr)
    return (EXIT_VIOLATION if violations else EXIT_OK), outdir


def replay(manifest_path, out=None, jobs=None, master_seed=None):
    """Re-run a manifest's config and compare result files byte for byte."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    missing = {"recipe", "params", "master_seed", "files", "versions"} - set(manifest)
    if missing:
        raise ValueError(f"manifest is missing fields: {sorted(missing)}")
    if manifest["versions"].get("projens") != __version__:
        raise ValueError(
            f"manifest was written by projens {manifest['versions'].get('projens')}, "
            f"this build is {__version__}"
        )
    config = ExperimentConfig(
        recipe=manifest["recipe"],
        params=manifest["params"],
        master_seed=master_seed if master_seed is not None else manifest["master_seed"],
        jobs=jobs or 1,
    )
    origdir = os.path.dirname(os.path.abspath(manifest_path))
    outdir = out or origdir.rstrip(os.sep) + "-replay"
    status, _ = run(config, outdir, jobs=jobs)
    mismatched = []
    for name in manifest["files"]:
        orig, new = os.path.join(origdir, name), os.path.join(outdir, name)
        if not os.path.exists(new):
            mismatched.append(name)
            continue
        with open(orig, "rb") as fa, open(new, "rb") as fb:
            if fa.read() != fb.read():
                mismatched.append(name)
    if mismatched:
        print(f"non-replay: files differ: {mismatched}", file=sys.stderr)
        return EXIT_VIOLATION, outdir
    print(f"replay OK: {len(manifest['files'])} files byte-identical")
    return status, outdir


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="projens", description="projected-ensemble experiment runner"
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in ("run", "replay", "validate"):
        sp = sub.add_parser(verb)
        sp.add_argument("path", help="config file (run/validate) or manifest (replay)")
        sp.add_argument("--seed", type=int, default=None, help="override master_seed")
        sp.add_argument("--jobs", type=int, default=None, help="parallelism degree")
        sp.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        if args.verb == "replay":
            status, _ = replay(
                args.path, out=args.out, jobs=args.jobs, master_seed=args.seed
            )
            return status
        config = ExperimentConfig.from_file(args.path)
        if args.seed is not None:
            config.master_seed = args.seed
        if args.jobs is not None:
            config.jobs = args.jobs
        config.validate()
        if args.verb == "validate":
            print(f"OK: {config.recipe} with {len(_grid_points(config.recipe, config.merged_params(), config.master_seed))} grid points")
            return EXIT_OK
        status, outdir = run(config, _resolve_outdir(config, args.out), jobs=args.jobs)
        print(f"wrote {outdir}")
        return status
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
