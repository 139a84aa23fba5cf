"""Config-driven experiments: parsing, validation, execution and artifact writing.

A config is a YAML document. ``scenario`` selects a preset from
:mod:`sparse_diffusion.presets`; every other key overrides the preset. See
the README for the full schema.
"""

from __future__ import annotations

import csv
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import presets
from .analysis import build_moments, msd_predict, step_size_bounds
from .engine import (COOPERATION, GAMMA_SCOPES, MODES, AdaptiveGamma, EngineConfig, FixedGamma,
                     MonteCarloResult, effective_matrices, run_monte_carlo_many)
from .metrics import differential_msd, steady_state, to_db
from .regularizer import RegularizerSpec
from .signal_model import GroundTruthSchedule, NodeProfile, nested_sparse_schedule, profile_arrays, substream_rng
from .topology import (CombinationMatrices, Topology, build_uniform_combiners, load_edge_list,
                       random_geometric_topology, validate_combiners)

log = logging.getLogger(__name__)

OUTPUT_ENV = "SPARSE_DIFFUSION_OUTPUT_DIR"

# auxiliary substreams of the master seed; data streams use index 0
_TRUTH_STREAM, _TOPOLOGY_STREAM, _PROFILE_STREAM = 1, 2, 3

_TOP_KEYS = {"scenario", "seed", "runs", "horizon", "window", "workers", "output_dir", "dimension", "topology",
             "profiles", "truth", "algorithms", "sweep", "eta_sensitivity"}
_ALGO_KEYS = {"label", "mode", "cooperation", "regularizer", "epsilon", "gamma", "adaptive"}


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        where = f" (line {line})" if line else ""
        super().__init__(f"{field}{where}: {message}")


@dataclass
class ValidationReport:
    errors: list[ConfigError] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    config: "ExperimentConfig | None" = None

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self):
        lines = [f"error: {e}" for e in self.errors] + [f"warning: {w}" for w in self.warnings]
        if self.ok:
            lines.append("config OK")
        return "\n".join(lines)


@dataclass
class ExperimentConfig:
    """Fully resolved experiment: network, data model and algorithm list."""

    scenario: str
    seed: int
    runs: int
    horizon: int
    window: int
    workers: int
    output_dir: Path
    dimension: int
    topology: Topology
    mats: CombinationMatrices
    profiles: list[NodeProfile]
    truth: GroundTruthSchedule
    algorithms: list[EngineConfig]
    raw: dict
    sweep: dict = field(default_factory=dict)
    eta_factors: list[float] = field(default_factory=list)


def _line_index(text: str) -> dict[str, int]:
    """Map dotted config paths to 1-based source lines, for diagnostics."""
    index: dict[str, int] = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return index

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = f"{path}.{k.value}" if path else str(k.value)
                index[p] = k.start_mark.line + 1
                walk(v, p)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                p = f"{path}[{i}]"
                index[p] = v.start_mark.line + 1
                walk(v, p)

    if root is not None:
        walk(root, "")
    return index


def _lookup_line(index, path):
    while path:
        if path in index:
            return index[path]
        cut = max(path.rfind("."), path.rfind("["))
        path = path[:cut] if cut > 0 else ""
    return None


class _Checker:
    def __init__(self, lines):
        self.lines = lines
        self.errors: list[ConfigError] = []

    def fail(self, path, message):
        self.errors.append(ConfigError(path, message, _lookup_line(self.lines, path)))

    def integer(self, d, key, path, minimum=None, default=None):
        v = d.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, f"expected an integer, got {v!r}")
            return None
        if minimum is not None and v < minimum:
            self.fail(path, f"must be >= {minimum}, got {v}")
            return None
        return v

    def number(self, v, path, minimum=None, strict=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {v!r}")
            return None
        v = float(v)
        if minimum is not None and (v <= minimum if strict else v < minimum):
            self.fail(path, f"must be {'>' if strict else '>='} {minimum}, got {v}")
            return None
        return v

    def pair(self, v, path):
        if not (isinstance(v, (list, tuple)) and len(v) == 2):
            self.fail(path, f"expected [low, high], got {v!r}")
            return None
        lo, hi = (self.number(x, path, 0.0) for x in v)
        if lo is None or hi is None:
            return None
        if hi < lo:
            self.fail(path, f"low {lo} exceeds high {hi}")
            return None
        return lo, hi


def _parse_algorithm(chk: _Checker, entry, path, horizon) -> EngineConfig | None:
    if not isinstance(entry, dict):
        chk.fail(path, f"expected a mapping, got {entry!r}")
        return None
    for key in entry:
        if key not in _ALGO_KEYS:
            chk.fail(f"{path}.{key}", f"unknown key; expected one of {sorted(_ALGO_KEYS)}")
    mode = str(entry.get("mode", "ATC")).upper()
    if mode not in MODES:
        chk.fail(f"{path}.mode", f"expected one of {MODES}, got {entry.get('mode')!r}")
        return None
    coop = entry.get("cooperation", "full")
    if coop not in COOPERATION:
        chk.fail(f"{path}.cooperation", f"expected one of {COOPERATION}, got {coop!r}")
        return None
    name = str(entry.get("regularizer", "none"))
    if name.lower() not in ("none", "za", "rza"):
        chk.fail(f"{path}.regularizer", f"expected none, za or rza, got {name!r}")
        return None
    eps = entry.get("epsilon")
    if name.lower() == "rza":
        if eps is None:
            chk.fail(f"{path}.epsilon", "required for rza")
            return None
        eps = chk.number(eps, f"{path}.epsilon", 0.0, strict=True)
        if eps is None:
            return None
    spec = RegularizerSpec.from_name(name, eps)
    if "adaptive" in entry and "gamma" in entry:
        chk.fail(path, "give either gamma or adaptive, not both")
        return None
    if "adaptive" in entry:
        ad = entry["adaptive"] or {}
        if not isinstance(ad, dict):
            chk.fail(f"{path}.adaptive", f"expected a mapping, got {ad!r}")
            return None
        for key in ad:
            if key not in ("eta", "eta_scale", "scope"):
                chk.fail(f"{path}.adaptive.{key}", "unknown key; expected eta, eta_scale or scope")
        eta = ad.get("eta")
        if eta is not None:
            eta = chk.number(eta, f"{path}.adaptive.eta", 0.0)
            if eta is None:
                return None
        scale = chk.number(ad.get("eta_scale", 1.0), f"{path}.adaptive.eta_scale", 0.0)
        scope = ad.get("scope", "local")
        if scope not in GAMMA_SCOPES:
            chk.fail(f"{path}.adaptive.scope", f"expected one of {GAMMA_SCOPES}, got {scope!r}")
            return None
        if scale is None:
            return None
        gamma = AdaptiveGamma(eta, scale, scope)
    else:
        g = chk.number(entry.get("gamma", 0.0), f"{path}.gamma", 0.0)
        if g is None:
            return None
        gamma = FixedGamma(g)
    label = str(entry.get("label", "") or "")
    return EngineConfig(mode, coop, spec, gamma, horizon, label)


def _build_topology(chk, top, seed, base_dir):
    if not isinstance(top, dict):
        chk.fail("topology", f"expected a mapping, got {top!r}")
        return None
    kind = top.get("kind", "random_geometric")
    if kind == "edge_list":
        if "path" not in top:
            chk.fail("topology.path", "required for kind edge_list")
            return None
        path = Path(top["path"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            chk.fail("topology.path", f"file not found: {path}")
            return None
        try:
            return load_edge_list(path)
        except ValueError as exc:
            chk.fail("topology.path", str(exc))
            return None
    if kind != "random_geometric":
        chk.fail("topology.kind", f"expected random_geometric or edge_list, got {kind!r}")
        return None
    n = chk.integer(top, "num_nodes", "topology.num_nodes", 1)
    radius = chk.number(top.get("radius"), "topology.radius", 0.0, strict=True)
    if n is None or radius is None:
        return None
    try:
        return random_geometric_topology(n, radius, substream_rng(seed, _TOPOLOGY_STREAM))
    except RuntimeError as exc:
        chk.fail("topology.radius", str(exc))
        return None


def _build_profiles(chk, prof, N, seed):
    if not isinstance(prof, dict):
        chk.fail("profiles", f"expected a mapping, got {prof!r}")
        return None
    rng = substream_rng(seed, _PROFILE_STREAM)
    step = prof.get("step_size", 0.1)
    steps = step if isinstance(step, list) else [step] * N
    columns = {}
    for key, range_key in (("regressor_variance", "regressor_range"), ("noise_variance", "noise_range")):
        if key in prof:
            vals = prof[key]
            if not isinstance(vals, list) or len(vals) != N:
                chk.fail(f"profiles.{key}", f"expected a list of {N} values")
                return None
            columns[key] = vals
        else:
            rng_pair = chk.pair(prof.get(range_key), f"profiles.{range_key}")
            if rng_pair is None:
                return None
            columns[key] = rng.uniform(*rng_pair, size=N).tolist()
    if len(steps) != N:
        chk.fail("profiles.step_size", f"expected a scalar or a list of {N} values")
        return None
    out = []
    for k in range(N):
        su = chk.number(columns["regressor_variance"][k], f"profiles.regressor_variance[{k}]", 0.0, strict=True)
        sv = chk.number(columns["noise_variance"][k], f"profiles.noise_variance[{k}]", 0.0)
        mu = chk.number(steps[k], "profiles.step_size", 0.0, strict=True)
        if None in (su, sv, mu):
            return None
        out.append(NodeProfile(su, sv, mu))
    return out


def _build_truth(chk, truth, M, seed, horizon):
    if not isinstance(truth, dict):
        chk.fail("truth", f"expected a mapping, got {truth!r}")
        return None
    rng = substream_rng(seed, _TRUTH_STREAM)
    if "segments" in truth:
        segs = []
        for j, seg in enumerate(truth["segments"]):
            p = f"truth.segments[{j}]"
            if not isinstance(seg, dict) or "start" not in seg or "w_o" not in seg:
                chk.fail(p, "expected {start, w_o}")
                return None
            if len(seg["w_o"]) != M:
                chk.fail(f"{p}.w_o", f"expected {M} entries, got {len(seg['w_o'])}")
                return None
            segs.append((seg["start"], seg["w_o"]))
        try:
            return GroundTruthSchedule(M, tuple(segs))
        except ValueError as exc:
            chk.fail("truth.segments", str(exc))
            return None
    phases = truth.get("phases")
    if not isinstance(phases, list) or not phases:
        chk.fail("truth.phases", "expected a list of [start_iteration, support_size]")
        return None
    value = chk.number(truth.get("value", 1.0), "truth.value")
    if value is None:
        return None
    for j, ph in enumerate(phases):
        if not (isinstance(ph, list) and len(ph) == 2 and all(isinstance(x, int) for x in ph)):
            chk.fail(f"truth.phases[{j}]", f"expected [start, support_size] integers, got {ph!r}")
            return None
        if not 0 <= ph[1] <= M:
            chk.fail(f"truth.phases[{j}]", f"support size {ph[1]} outside [0, {M}]")
            return None
        if ph[0] >= horizon:
            chk.fail(f"truth.phases[{j}]", f"starts at {ph[0]}, beyond horizon {horizon}")
            return None
    try:
        if truth.get("nested", True) and all(a[1] <= b[1] for a, b in zip(phases, phases[1:])):
            return nested_sparse_schedule(M, [tuple(p) for p in phases], rng, value)
        segs = []
        for start, size in phases:
            w = np.zeros(M)
            w[rng.choice(M, size=size, replace=False)] = value
            segs.append((start, w))
        return GroundTruthSchedule(M, tuple(segs))
    except ValueError as exc:
        chk.fail("truth.phases", str(exc))
        return None


def parse_config(raw: dict, base_dir: Path = Path("."), lines=None, output_override: str | None = None) -> ValidationReport:
    """Resolve a config mapping against its preset and build all objects."""
    report = ValidationReport()
    chk = _Checker(lines or {})
    if not isinstance(raw, dict):
        report.errors.append(ConfigError("<root>", "the document must be a mapping"))
        return report
    for key in raw:
        if key not in _TOP_KEYS:
            chk.fail(key, f"unknown key; expected one of {sorted(_TOP_KEYS)}")
    try:
        cfg = presets.resolve(raw)
    except KeyError:
        chk.fail("scenario", f"unknown scenario {raw.get('scenario')!r}; expected one of {presets.SCENARIOS}")
        report.errors = chk.errors
        return report
    seed = chk.integer(cfg, "seed", "seed", 0)
    runs = chk.integer(cfg, "runs", "runs", 1)
    horizon = chk.integer(cfg, "horizon", "horizon", 1)
    window = chk.integer(cfg, "window", "window", 1)
    workers = chk.integer(cfg, "workers", "workers", 1, default=1)
    M = chk.integer(cfg, "dimension", "dimension", 1)
    if None in (seed, runs, horizon, window, workers, M):
        report.errors = chk.errors
        return report
    if window > horizon:
        chk.fail("window", f"window {window} exceeds horizon {horizon}")
    topology = _build_topology(chk, cfg.get("topology"), seed, base_dir)
    if topology is None:
        report.errors = chk.errors
        return report
    N = topology.num_nodes
    if not topology.connected:
        report.warnings.append(f"topology is not connected ({N} nodes)")
    top_cfg = cfg.get("topology", {})
    weights = top_cfg.get("exchange_weights", "sender")
    if weights not in ("sender", "receiver"):
        chk.fail("topology.exchange_weights", f"expected sender or receiver, got {weights!r}")
        weights = "sender"
    mats = build_uniform_combiners(topology, bool(top_cfg.get("exchange_data", False)), weights)
    vr = validate_combiners(mats, topology)
    for c in vr.failures():
        chk.fail("topology", f"combination matrices fail '{c.name}' (max violation {c.max_violation:.3e})")
    profiles = _build_profiles(chk, cfg.get("profiles"), N, seed)
    truth = _build_truth(chk, cfg.get("truth"), M, seed, horizon)
    algos_raw = cfg.get("algorithms")
    algorithms = []
    if not isinstance(algos_raw, list) or not algos_raw:
        chk.fail("algorithms", "expected a non-empty list")
    else:
        for j, entry in enumerate(algos_raw):
            a = _parse_algorithm(chk, entry, f"algorithms[{j}]", horizon)
            if a is not None:
                algorithms.append(a)
        labels = [a.label for a in algorithms]
        for lab in sorted({x for x in labels if labels.count(x) > 1}):
            chk.fail("algorithms", f"duplicate label {lab!r}")
        for a in algorithms:
            if a.adaptive and a.regularizer.kind == "none":
                report.warnings.append(f"algorithm {a.label!r}: adaptive gamma has no effect without a regularizer")
    sweep = cfg.get("sweep", {}) if cfg["scenario"] == "gamma_sweep" else {}
    if sweep:
        for key in ("sparsity_levels", "gammas_za", "gammas_rza"):
            vals = sweep.get(key)
            if not isinstance(vals, list) or not vals:
                chk.fail(f"sweep.{key}", "expected a non-empty list")
        for s in sweep.get("sparsity_levels") or []:
            if not (isinstance(s, int) and 0 <= s <= M):
                chk.fail("sweep.sparsity_levels", f"support size {s!r} outside [0, {M}]")
        for key in ("gammas_za", "gammas_rza"):
            for g in sweep.get(key) or []:
                chk.number(g, f"sweep.{key}", 0.0)
        if chk.number(sweep.get("epsilon"), "sweep.epsilon", 0.0, strict=True) is None:
            pass
    eta_factors = []
    if cfg["scenario"] == "eta_sensitivity":
        eta_factors = (cfg.get("eta_sensitivity") or {}).get("factors") or []
        if not eta_factors:
            chk.fail("eta_sensitivity.factors", "expected a non-empty list")
        for f in eta_factors:
            chk.number(f, "eta_sensitivity.factors", 0.0)
    report.errors = chk.errors
    if report.errors or profiles is None or truth is None:
        return report
    report.warnings.extend(_stability_warnings(topology, mats, profiles, M, algorithms))
    out_dir = output_override or os.environ.get(OUTPUT_ENV) or cfg.get("output_dir") or f"results/{cfg['scenario']}"
    report.config = ExperimentConfig(cfg["scenario"], seed, runs, horizon, window, workers, Path(out_dir), M,
                                     topology, mats, profiles, truth, algorithms, cfg, sweep,
                                     [float(f) for f in eta_factors])
    return report


def _stability_warnings(topology, mats, profiles, M, algorithms) -> list[str]:
    out = []
    su, _, mu = profile_arrays(profiles)
    coops = {a.cooperation for a in algorithms} or {"full"}
    for coop in sorted(coops):
        eff = effective_matrices(EngineConfig(cooperation=coop), mats)
        bounds = step_size_bounds(build_moments(topology, eff, profiles, M))
        for k in np.flatnonzero(mu >= bounds):
            out.append(f"node {k}: step size {mu[k]:g} is not below the mean-stability bound {bounds[k]:.6g} "
                       f"({coop} cooperation)")
    if "non_cooperative" in coops:
        # Gaussian regressors: stand-alone LMS is mean-square stable iff mu sigma_u^2 (M + 2) < 2
        load = mu * su * (M + 2)
        for k in np.flatnonzero(load >= 2.0):
            out.append(f"node {k}: non-cooperative LMS is not mean-square stable "
                       f"(mu*sigma_u^2*(M+2) = {load[k]:.3g} >= 2); expect divergence")
    return out


def load_config_text(path) -> tuple[dict, dict]:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError("<yaml>", f"parse error: {getattr(exc, 'problem', exc)}", line) from None
    return (raw if raw is not None else {}), _line_index(text)


def validate_config(path, output_override: str | None = None) -> ValidationReport:
    """Static validation of a config file; never raises for bad content."""
    try:
        raw, lines = load_config_text(path)
    except ConfigError as exc:
        return ValidationReport([exc])
    except OSError as exc:
        return ValidationReport([ConfigError("<file>", str(exc))])
    return parse_config(raw, Path(path).parent, lines, output_override)


# ---------------------------------------------------------------- execution


def _fmt(x) -> str:
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "-inf" if x < 0 else "inf"
    return repr(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([c if isinstance(c, str) else _fmt(c) if isinstance(c, (float, np.floating)) else str(c)
                        for c in row])


@dataclass
class ExperimentResult:
    output_dir: Path
    files: list[Path]
    results: dict = field(default_factory=dict)
    summary: list[dict] = field(default_factory=list)


def _phase_names(truth: GroundTruthSchedule, horizon: int) -> list[tuple[str, int, int]]:
    out = []
    for start, stop in truth.phase_bounds(horizon):
        w = truth.segments[truth.starts.index(start)][1]
        out.append((f"support={int(np.count_nonzero(w))}", start, stop))
    return out


def _run_algorithms(cfg: ExperimentConfig, algorithms, truth=None, record_window=None):
    truth = cfg.truth if truth is None else truth
    t0 = time.perf_counter()
    res = run_monte_carlo_many(algorithms, cfg.topology, cfg.mats, cfg.profiles, truth, cfg.runs, cfg.seed,
                               workers=cfg.workers, record_window=record_window)
    log.info("%d algorithms x %d runs in %.1f s", len(algorithms), cfg.runs, time.perf_counter() - t0)
    return res


def _write_tracking(cfg: ExperimentConfig, out: Path, results: list[MonteCarloResult], files, summary):
    from . import plotting

    T = cfg.horizon
    labels = [r.label for r in results]
    write_csv(out / "curves.csv", ["iteration"] + labels,
              ([i] + [r.msd[i] for r in results] for i in range(T)))
    files.append(out / "curves.csv")
    rows = []
    for r in results:
        for name, start, stop in _phase_names(cfg.truth, T):
            st = steady_state(r.msd, min(cfg.window, stop - start), stop)
            rows.append([r.label, name, st.window_start, stop, st.mean_msd_linear, st.mean_msd_db, r.num_diverged])
            summary.append({"algorithm": r.label, "phase": name, "msd_linear": st.mean_msd_linear,
                            "msd_db": st.mean_msd_db, "diverged": r.num_diverged})
    write_csv(out / "summary.csv",
              ["algorithm", "phase", "window_start", "window_stop", "msd_linear", "msd_db", "diverged_runs"], rows)
    files.append(out / "summary.csv")
    files.append(plotting.line_plot(out / "learning_curves.svg", np.arange(T), {r.label: to_db(r.msd) for r in results},
                                    "iteration", "network MSD (dB)", "Network learning curves"))
    if any(a.adaptive for a in cfg.algorithms):
        write_csv(out / "gamma_trace.csv", ["iteration"] + labels,
                  ([i] + [r.gamma[i] for r in results] for i in range(T)))
        files.append(out / "gamma_trace.csv")
        adaptive = {r.label: r.gamma for r, a in zip(results, cfg.algorithms) if a.adaptive}
        files.append(plotting.line_plot(out / "gamma_trace.svg", np.arange(T), adaptive, "iteration",
                                        "mean regularization weight", "Adaptive regularization weight",
                                        log_y=False))


def _run_tracking(cfg, out, files, summary):
    results = _run_algorithms(cfg, cfg.algorithms)
    _write_tracking(cfg, out, results, files, summary)
    return {r.label: r for r in results}


def _run_theory(cfg, out, files, summary):
    results = _run_algorithms(cfg, cfg.algorithms)
    _write_tracking(cfg, out, results, files, summary)
    rows = []
    T, L = cfg.horizon, cfg.window
    for a, r in zip(cfg.algorithms, results):
        gamma_free = a.regularizer.kind == "none" or (not a.adaptive and a.gamma.value == 0)
        if a.mode != "ATC" or not gamma_free:
            log.warning("no closed-form prediction for %s (needs ATC with gamma = 0)", a.label)
            continue
        eff = effective_matrices(a, cfg.mats)
        pred = msd_predict(build_moments(cfg.topology, eff, cfg.profiles, cfg.dimension), eff)
        emp_node = r.node_msd[T - L:T].mean(axis=0)
        emp_net = float(r.msd[T - L:T].mean())
        for k in range(cfg.topology.num_nodes):
            rows.append([a.label, f"node{k}", pred.msd_node[k], to_db(pred.msd_node[k]), emp_node[k],
                         to_db(emp_node[k]), to_db(emp_node[k]) - to_db(pred.msd_node[k])])
        rows.append([a.label, "network", pred.msd_network, to_db(pred.msd_network), emp_net, to_db(emp_net),
                     to_db(emp_net) - to_db(pred.msd_network)])
    write_csv(out / "prediction.csv", ["algorithm", "scope", "predicted_linear", "predicted_db", "empirical_linear",
                                       "empirical_db", "difference_db"], rows)
    files.append(out / "prediction.csv")
    return {r.label: r for r in results}


def _constant_truth(cfg, support):
    # same nested support order for every level so sparser truths are subsets of denser ones
    sched = nested_sparse_schedule(cfg.dimension, [(0, support)], substream_rng(cfg.seed, _TRUTH_STREAM),
                                   float(cfg.raw.get("truth", {}).get("value", 1.0)))
    return sched


def _run_gamma_sweep(cfg, out, files, summary):
    from . import plotting

    sw = cfg.sweep
    eps = float(sw.get("epsilon", 0.1))
    levels = sw["sparsity_levels"]
    base = [a for a in cfg.algorithms if a.regularizer.kind == "none"][:1] or [EngineConfig(horizon=cfg.horizon)]
    base = base[0]
    T, L = cfg.horizon, cfg.window
    rows, results = [], {}
    for kind, key in (("za", "gammas_za"), ("rza", "gammas_rza")):
        spec = RegularizerSpec.from_name(kind, eps)
        gammas = [float(g) for g in sw[key]]
        table = np.empty((len(gammas), len(levels)))
        for j, s in enumerate(levels):
            truth = _constant_truth(cfg, s)
            algs = [base] + [EngineConfig(base.mode, base.cooperation, spec, FixedGamma(g), T,
                                          f"{kind.upper()}-{base.mode} gamma={g:g}") for g in gammas]
            res = _run_algorithms(cfg, algs, truth)
            results[(kind, s)] = res
            ref = steady_state(res[0].msd, L)
            for i, (g, r) in enumerate(zip(gammas, res[1:])):
                table[i, j] = differential_msd(r.msd, res[0].msd, L)
                st = steady_state(r.msd, L)
                rows.append([kind, s, g, st.mean_msd_linear, st.mean_msd_db, ref.mean_msd_db, table[i, j],
                             r.num_diverged])
                summary.append({"regularizer": kind, "support": s, "gamma": g, "dmsd_db": table[i, j]})
        name = f"dmsd_{kind}"
        write_csv(out / f"{name}.csv", ["gamma"] + [f"support={s}" for s in levels],
                  ([g] + list(table[i]) for i, g in enumerate(gammas)))
        files.append(out / f"{name}.csv")
        files.append(plotting.line_plot(out / f"{name}.svg", np.array(gammas),
                                        {f"support={s}": table[:, j] for j, s in enumerate(levels)},
                                        "gamma", "differential MSD (dB)", f"{kind.upper()} vs unregularized",
                                        log_x=True, log_y=False, zero_line=True))
    write_csv(out / "summary.csv", ["regularizer", "support", "gamma", "msd_linear", "msd_db", "baseline_db",
                                    "dmsd_db", "diverged_runs"], rows)
    files.append(out / "summary.csv")
    return results


def _run_eta(cfg, out, files, summary):
    from . import plotting

    T, L = cfg.horizon, cfg.window
    adaptive = [a for a in cfg.algorithms if a.adaptive]
    fixed = [a for a in cfg.algorithms if not a.adaptive]
    algs = list(fixed)
    for f in cfg.eta_factors:
        for a in adaptive:
            g = a.gamma
            algs.append(EngineConfig(a.mode, a.cooperation, a.regularizer,
                                     AdaptiveGamma(g.eta, g.eta_scale * f, g.scope), T, f"{a.label} eta x{f:g}"))
    res = _run_algorithms(cfg, algs)
    by_label = {r.label: r for r in res}
    header = ["eta_factor"] + [a.label for a in adaptive] + [a.label for a in fixed]
    table, rows = [], []
    for f in cfg.eta_factors:
        line = [f]
        for a in adaptive:
            r = by_label[f"{a.label} eta x{f:g}"]
            st = steady_state(r.msd, L)
            line.append(st.mean_msd_db)
            rows.append([a.label, f, st.mean_msd_linear, st.mean_msd_db, r.num_diverged])
            summary.append({"algorithm": a.label, "eta_factor": f, "msd_db": st.mean_msd_db})
        line += [steady_state(by_label[a.label].msd, L).mean_msd_db for a in fixed]
        table.append(line)
    for a in fixed:
        st = steady_state(by_label[a.label].msd, L)
        rows.append([a.label, "", st.mean_msd_linear, st.mean_msd_db, by_label[a.label].num_diverged])
    write_csv(out / "eta_sensitivity.csv", header, table)
    write_csv(out / "summary.csv", ["algorithm", "eta_factor", "msd_linear", "msd_db", "diverged_runs"], rows)
    files += [out / "eta_sensitivity.csv", out / "summary.csv"]
    arr = np.array(table, dtype=float)
    series = {lab: arr[:, j + 1] for j, lab in enumerate(header[1:])}
    files.append(plotting.line_plot(out / "eta_sensitivity.svg", arr[:, 0], series, "eta factor",
                                    "steady-state network MSD (dB)", "Sensitivity to the trigger", log_x=True,
                                    log_y=False))
    return by_label


_RUNNERS = {
    "tracking_example1": _run_tracking,
    "tracking_example2": _run_tracking,
    "custom": _run_tracking,
    "theory_vs_sim": _run_theory,
    "gamma_sweep": _run_gamma_sweep,
    "eta_sensitivity": _run_eta,
}


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Execute the configured scenario and write its CSV and SVG artifacts."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    summary: list[dict] = []
    cfg_dump = dict(cfg.raw)
    cfg_dump.pop("output_dir", None)
    (out / "config_resolved.yaml").write_text(yaml.safe_dump(cfg_dump, sort_keys=True))
    files.append(out / "config_resolved.yaml")
    results = _RUNNERS[cfg.scenario](cfg, out, files, summary)
    return ExperimentResult(out, files, results, summary)
