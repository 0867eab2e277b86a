"""Simulation experiment runner: empirical size and power over scenario grids.

An experiment is a list of cells, each pairing a scenario with a replication
count and one or more decision methods ("composite" for the radii test,
"squared" for the squared-radii contrast; both methods in one cell share the
same data draws).  Replication r of cell c draws its data from the substream
keyed by (master seed, c, r), and the Monte-Carlo rejection band of cell c is
keyed by (master seed, c), so results are independent of how the work is
partitioned across threads.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import rng
from .errors import HdnormError
from .generators import CovSpec, Scenario, sample_scenario
from .montecarlo import McSettings, composite_from_summary
from .radii import radial_summary

VALID_METHODS = ("composite", "squared")

_CI_Z = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class CellSpec:
    scenario: Scenario
    replications: int
    methods: Tuple[str, ...] = ("composite",)


@dataclass(frozen=True)
class Experiment:
    name: str
    seed: int
    alpha: float
    mc_replications: int
    cells: Tuple[CellSpec, ...]


@dataclass(frozen=True)
class CellResult:
    cell_index: int
    scenario: Scenario
    method: str
    replications: int
    rejections: int
    failures: int
    rate: float
    ci_low: float
    ci_high: float
    wall_time: float


def default_threads() -> int:
    """Worker count: the HDNORM_THREADS environment variable, else cpu count."""
    raw = os.environ.get("HDNORM_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def binomial_ci(count: int, total: int) -> Tuple[float, float]:
    """Normal-approximation 95% interval with a continuity guard at 0 and 1."""
    if total < 1:
        raise ValueError("need at least one trial")
    p = count / total
    p_var = p if 0 < count < total else (count + 0.5) / (total + 1.0)
    half = _CI_Z * math.sqrt(p_var * (1.0 - p_var) / total)
    return (max(0.0, p - half), min(1.0, p + half))


def _cell_settings(exp: Experiment, cell_index: int) -> McSettings:
    return McSettings(
        replications=exp.mc_replications,
        seed=rng.derive_seed(exp.seed, rng.DOMAIN_NULL_RANGE, cell_index),
        alpha=exp.alpha,
    )


def _run_unit(exp: Experiment, cell_index: int, lo: int, hi: int):
    """Run replications [lo, hi) of one cell; returns per-method tallies."""
    cell = exp.cells[cell_index]
    settings = _cell_settings(exp, cell_index)
    rejections = {m: 0 for m in cell.methods}
    failures = {m: 0 for m in cell.methods}
    start = time.perf_counter()
    for r in range(lo, hi):
        gen = rng.substream(exp.seed, rng.DOMAIN_DATA, cell_index, r)
        try:
            X = sample_scenario(cell.scenario, gen)
            rs = radial_summary(X)
        except HdnormError:
            for m in cell.methods:
                failures[m] += 1
            continue
        for m in cell.methods:
            try:
                report = composite_from_summary(rs, settings, squared=(m == "squared"))
            except HdnormError:
                failures[m] += 1
                continue
            if report.composite_reject:
                rejections[m] += 1
    return cell_index, rejections, failures, time.perf_counter() - start


def run_experiment(exp: Experiment, threads: Optional[int] = None) -> List[CellResult]:
    """Run every cell; deterministic given the experiment seed.

    Per-replication errors are tallied as failures rather than aborting the
    sweep; the empirical rate is taken over the completed replications.
    """
    if threads is None:
        threads = default_threads()
    units = []
    for ci, cell in enumerate(exp.cells):
        if cell.replications < 1:
            raise ValueError(f"cell {ci} has no replications")
        chunk = max(1, min(64, -(-cell.replications // (threads * 4))))
        for lo in range(0, cell.replications, chunk):
            units.append((ci, lo, min(lo + chunk, cell.replications)))

    rejections: Dict[int, Dict[str, int]] = {}
    failures: Dict[int, Dict[str, int]] = {}
    elapsed: Dict[int, float] = {}
    if threads == 1:
        outcomes = [_run_unit(exp, *u) for u in units]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda u: _run_unit(exp, *u), units))
    for ci, rej, fail, dt in outcomes:
        cell_rej = rejections.setdefault(ci, {m: 0 for m in exp.cells[ci].methods})
        cell_fail = failures.setdefault(ci, {m: 0 for m in exp.cells[ci].methods})
        for m, v in rej.items():
            cell_rej[m] += v
        for m, v in fail.items():
            cell_fail[m] += v
        elapsed[ci] = elapsed.get(ci, 0.0) + dt

    results: List[CellResult] = []
    for ci, cell in enumerate(exp.cells):
        for m in cell.methods:
            done = cell.replications - failures[ci][m]
            rate = rejections[ci][m] / done if done > 0 else float("nan")
            lo, hi = binomial_ci(rejections[ci][m], done) if done > 0 else (float("nan"),) * 2
            results.append(CellResult(
                cell_index=ci,
                scenario=cell.scenario,
                method=m,
                replications=cell.replications,
                rejections=rejections[ci][m],
                failures=failures[ci][m],
                rate=rate,
                ci_low=lo,
                ci_high=hi,
                wall_time=elapsed[ci],
            ))
    return results


def _fmt(x: float) -> str:
    return format(x, ".17g")


def summarize(results: Sequence[CellResult]) -> str:
    """CSV summary keyed by (family, covariance, n, d, method), sorted.

    Wall times are deliberately not included so that reruns with different
    thread counts produce byte-identical files.
    """
    if not results:
        raise ValueError("no results to summarize")
    header = "family,cov,n,d,method,replications,rejections,failures,rate,ci_low,ci_high"
    ordered = sorted(results, key=lambda r: (
        r.scenario.family, r.scenario.cov.kind, r.scenario.n, r.scenario.d, r.method))
    lines = [header]
    for r in ordered:
        lines.append(",".join([
            r.scenario.family,
            r.scenario.cov.kind,
            str(r.scenario.n),
            str(r.scenario.d),
            r.method,
            str(r.replications),
            str(r.rejections),
            str(r.failures),
            _fmt(r.rate),
            _fmt(r.ci_low),
            _fmt(r.ci_high),
        ]))
    return "\n".join(lines) + "\n"


def results_jsonl(results: Sequence[CellResult]) -> str:
    """One JSON object per cell result, including scenario echo and wall time."""
    lines = []
    for r in results:
        lines.append(json.dumps({
            "cell_index": r.cell_index,
            "scenario": scenario_to_json(r.scenario),
            "method": r.method,
            "replications": r.replications,
            "rejections": r.rejections,
            "failures": r.failures,
            "rate": r.rate,
            "ci_low": r.ci_low,
            "ci_high": r.ci_high,
            "wall_time": r.wall_time,
        }, sort_keys=True))
    return "\n".join(lines) + "\n"


# --- JSON (de)serialization of experiment specifications -------------------

def cov_from_json(doc: Mapping) -> CovSpec:
    kind = doc.get("kind")
    d = doc.get("d")
    if not isinstance(kind, str) or not isinstance(d, int):
        raise ValueError(f"covariance spec needs a string 'kind' and integer 'd': {doc}")
    kwargs = {}
    for key in ("rho", "density", "jitter", "rate"):
        if key in doc:
            kwargs[key] = float(doc[key])
    if "seed" in doc:
        kwargs["seed"] = int(doc["seed"])
    if kind == "sparse_random":
        kwargs.setdefault("density", 0.02)
        kwargs.setdefault("jitter", 0.05)
    if kind == "geom_decay":
        kwargs.setdefault("rate", 0.93)
    return CovSpec(kind=kind, d=d, **kwargs)


def cov_to_json(spec: CovSpec) -> dict:
    doc = {"kind": spec.kind, "d": spec.d}
    for key in ("rho", "density", "jitter", "rate"):
        value = getattr(spec, key)
        if value is not None:
            doc[key] = value
    if spec.seed:
        doc["seed"] = spec.seed
    return doc


def scenario_from_json(doc: Mapping) -> Scenario:
    for key in ("family", "n", "d", "cov"):
        if key not in doc:
            raise ValueError(f"scenario is missing {key!r}: {doc}")
    params = doc.get("params", {})
    if not isinstance(params, Mapping):
        raise ValueError(f"scenario params must be an object, got {params!r}")
    params = dict(params)
    if "weights" in params:
        params["weights"] = tuple(float(w) for w in params["weights"])
    return Scenario(
        family=str(doc["family"]),
        n=int(doc["n"]),
        d=int(doc["d"]),
        cov=cov_from_json(doc["cov"]),
        params=params,
    )


def scenario_to_json(s: Scenario) -> dict:
    doc = {"family": s.family, "n": s.n, "d": s.d, "cov": cov_to_json(s.cov)}
    if s.params:
        params = dict(s.params)
        if "weights" in params:
            params["weights"] = list(params["weights"])
        doc["params"] = params
    return doc


def experiment_from_json(doc: Mapping) -> Experiment:
    cells_doc = doc.get("cells")
    if not cells_doc:
        raise ValueError("empty grid: experiment needs at least one cell")
    default_reps = int(doc.get("replications", 1000))
    cells = []
    for cell_doc in cells_doc:
        methods = tuple(cell_doc.get("methods", ("composite",)))
        for m in methods:
            if m not in VALID_METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {VALID_METHODS}")
        cells.append(CellSpec(
            scenario=scenario_from_json(cell_doc["scenario"]),
            replications=int(cell_doc.get("replications", default_reps)),
            methods=methods,
        ))
    return Experiment(
        name=str(doc.get("name", "experiment")),
        seed=int(doc.get("seed", 0)),
        alpha=float(doc.get("alpha", 0.05)),
        mc_replications=int(doc.get("mc_replications", 10000)),
        cells=tuple(cells),
    )
