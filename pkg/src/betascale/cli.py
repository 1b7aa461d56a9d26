"""Command-line experiment pipeline: gen -> run -> analyze -> fit,
plus `analytic` (closed-form curves) and `selftest`.

One master seed fixes every artifact byte-for-byte.  Every output embeds
the config hash and tool version.  Exit codes: 0 success, 2 config error,
3 numerical-consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analytic import (
    grover_anneal_gibbs_weight,
    indep_spins_beta_of_p0,
    indep_spins_thermo,
    qubit_anneal_gibbs_weight,
    write_anneal_curve,
)
from .estimators import (
    beta_star_from_ladder,
    block_thermalization_test,
    estimates_from_dos,
    estimates_from_samples,
    estimates_to_json,
    histogram_from_dos,
    reweight_histogram,
)
from .exact import enumerate_dos, thermo_from_dos
from .fits import compare_models, fit_log_law, fit_power_law
from .instances import Instance, build_chimera, generate_bimodal, generate_planted, generate_xorsat3
from .ptmc import ConsistencyError, Ladder, PtSchedule, geometric_ladder, pt_run
from .seeds import split_seed

DELTA_RULES = ("zero", "const", "sqrt", "linear")


class ConfigError(ValueError):
    """Bad experiment configuration; maps to exit code 2."""


def delta_of(rule: str, n: int, const_delta: float = 8.0) -> float:
    """Target offset above the ground state: E_T = E0 + delta(N)."""
    if rule == "zero":
        return 0.0
    if rule == "const":
        return float(const_delta)
    if rule == "sqrt":
        return float(round(math.sqrt(n / 2.0)))
    if rule == "linear":
        return 4.0 + n / 32.0
    raise ConfigError(f"unknown delta rule {rule!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 1
    outdir: str = "runs/exp"
    instance_class: str = "planted"
    sizes: tuple = (32, 72, 128)
    count: int = 20
    loops_per_spin: float = 0.25
    loop_length_cap: int = 100
    beta_min: float = 0.1
    beta_max: float = 20.0
    n_rungs: int = 64
    warmup_swaps: int = 500_000
    sweeps_per_swap: int = 10
    sample_stride_swaps: int = 50
    n_samples: int = 10_000
    delta_rules: tuple = ("zero",)
    const_delta: float = 8.0
    q_values: tuple = (0.1,)
    oracle_cap: int = 24
    workers: int = 1
    write_samples: bool = True
    drop_smallest: int = 0
    max_total_swaps: int = 10_000_000

    def __post_init__(self):
        if self.instance_class not in ("planted", "bimodal", "xorsat3"):
            raise ConfigError(f"unknown instance class {self.instance_class!r}")
        if not self.sizes or any(n < 4 for n in self.sizes):
            raise ConfigError("sizes must be nonempty with every N >= 4")
        if self.instance_class in ("planted", "bimodal"):
            for n in self.sizes:
                lattice = round(math.sqrt(n / 8.0))
                if 8 * lattice * lattice != n:
                    raise ConfigError(
                        f"size {n} is not a Chimera size (need N = 8 L^2)"
                    )
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        if not (0 < self.beta_min < self.beta_max):
            raise ConfigError("need 0 < beta_min < beta_max")
        if self.n_rungs < 2:
            raise ConfigError("need at least two rungs")
        for q in self.q_values:
            if not (0 < q < 1):
                raise ConfigError("q values must lie strictly in (0, 1)")
        for rule in self.delta_rules:
            if rule not in DELTA_RULES:
                raise ConfigError(f"unknown delta rule {rule!r}")
        if self.n_samples % 8 != 0:
            raise ConfigError("n_samples must be divisible by 8 (block test)")

    # -- derived helpers ---------------------------------------------------
    def ladder(self) -> Ladder:
        return geometric_ladder(self.beta_min, self.beta_max, self.n_rungs)

    def instance_seed(self, n: int, k: int) -> int:
        return split_seed(split_seed(self.seed, n), 2 * k)

    def pt_seed(self, n: int, k: int) -> int:
        return split_seed(split_seed(self.seed, n), 2 * k + 1)

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def stamp(self) -> dict:
        return {"config_hash": self.config_hash(), "version": __version__}

    @staticmethod
    def from_dict(doc: dict) -> "ExperimentConfig":
        known = {f for f in ExperimentConfig.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        doc = dict(doc)
        for key in ("sizes", "delta_rules", "q_values"):
            if key in doc:
                doc[key] = tuple(doc[key])
        try:
            return ExperimentConfig(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @staticmethod
    def from_file(path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return ExperimentConfig.from_dict(doc)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp_", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, sort_keys=True, indent=1))


def _write_csv(path: Path, header_comment: str, columns, rows) -> None:
    lines = [f"# {header_comment}"]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _instance_paths(cfg: ExperimentConfig):
    base = Path(cfg.outdir) / "instances"
    out = []
    for n in cfg.sizes:
        for k in range(cfg.count):
            out.append((n, k, base / f"{cfg.instance_class}_N{n:05d}_i{k:03d}.json"))
    return out


def _generate_one(cfg: ExperimentConfig, n: int, k: int) -> Instance:
    seed = cfg.instance_seed(n, k)
    if cfg.instance_class == "planted":
        lattice = round(math.sqrt(n / 8.0))
        return generate_planted(
            build_chimera(lattice, lattice), cfg.loops_per_spin,
            cfg.loop_length_cap, seed,
        )
    if cfg.instance_class == "bimodal":
        lattice = round(math.sqrt(n / 8.0))
        return generate_bimodal(build_chimera(lattice, lattice), seed)
    return generate_xorsat3(n, seed)


def cmd_gen(cfg: ExperimentConfig) -> list:
    """Write the requested instance files; returns their paths."""
    paths = []
    for n, k, path in _instance_paths(cfg):
        inst = _generate_one(cfg, n, k)
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(path, json.dumps(inst.to_json_dict(), sort_keys=True, indent=1))
        paths.append(path)
    manifest = {
        **cfg.stamp(),
        "files": [p.name for p in paths],
        "class": cfg.instance_class,
        "sizes": list(cfg.sizes),
        "count": cfg.count,
    }
    _write_json(Path(cfg.outdir) / "instances" / "manifest.json", manifest)
    return paths


def _run_one(cfg: ExperimentConfig, n: int, k: int, inst_path: Path) -> dict:
    inst = Instance.load(inst_path)
    ladder = cfg.ladder()
    run_dir = Path(cfg.outdir) / "runs"
    stem = inst_path.stem
    targets = {rule: delta_of(rule, n, cfg.const_delta) for rule in cfg.delta_rules}

    if n <= cfg.oracle_cap:
        dos = enumerate_dos(inst)
        e0, e0_source = dos.e0, "exact"
        dos.save(run_dir / f"{stem}.dos.json")
        ests = [estimates_from_dos(dos, b, e0, e0=e0) for b in ladder.betas]
        p_le = {
            rule: [thermo_from_dos(dos, b, e0 + d).p_le_target for b in ladder.betas]
            for rule, d in targets.items()
        }
        block_pass = None
        method = "exact"
    else:
        schedule = PtSchedule(
            warmup_swaps=cfg.warmup_swaps,
            sweeps_per_swap=cfg.sweeps_per_swap,
            sample_stride_swaps=cfg.sample_stride_swaps,
            n_samples=cfg.n_samples,
            seed=cfg.pt_seed(n, k),
        )
        series = pt_run(inst, ladder, schedule, max_total_swaps=cfg.max_total_swaps)
        if inst.known_e0 is not None:
            e0, e0_source = inst.known_e0, "known"
        else:
            e0, e0_source = float(series.samples.min()), "min_sample"
        if cfg.write_samples:
            series.save(run_dir / f"{stem}.samples.csv")
        ests = [
            estimates_from_samples(series.samples[r], n, float(ladder.betas[r]), e0, e0=e0)
            for r in range(len(ladder))
        ]
        p_le = {
            rule: [float(np.mean(series.samples[r] <= e0 + d + 1e-9))
                   for r in range(len(ladder))]
            for rule, d in targets.items()
        }
        verdicts = [block_thermalization_test(series.samples[r], n).passed
                    for r in range(len(ladder))]
        block_pass = bool(all(verdicts))
        _write_json(run_dir / f"{stem}.blocktest.json",
                    {**cfg.stamp(), "per_rung_pass": verdicts, "all_pass": block_pass})
        method = "pt"

    run_dir.mkdir(parents=True, exist_ok=True)
    estimates_to_json(
        ests, run_dir / f"{stem}.estimates.json",
        header={
            **cfg.stamp(),
            "method": method,
            "instance": inst_path.name,
            "instance_hash": inst.content_hash(),
            "n_spins": n,
            "e0": e0,
            "e0_source": e0_source,
            "p_le_by_rule": p_le,
            "targets": targets,
            "block_test_pass": block_pass,
        },
    )
    return {"n": n, "k": k, "method": method}


def _run_worker(args):
    cfg_doc, n, k, inst_path = args
    cfg = ExperimentConfig.from_dict(cfg_doc)
    return _run_one(cfg, n, k, Path(inst_path))


def cmd_run(cfg: ExperimentConfig) -> list:
    """Sample every generated instance: exact enumeration when N is at or
    under the oracle cap, parallel tempering otherwise."""
    jobs = [(n, k, path) for n, k, path in _instance_paths(cfg)]
    for _, _, path in jobs:
        if not path.exists():
            raise ConfigError(f"missing instance file {path}; run `gen` first")
    if cfg.workers > 1:
        payload = [(json.loads(cfg.canonical_json()), n, k, str(p)) for n, k, p in jobs]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_worker, payload))
    else:
        results = [_run_one(cfg, n, k, p) for n, k, p in jobs]
    return results


def _q_tag(q: float) -> str:
    return f"{q:.0e}".replace("e-0", "e-").replace("e+0", "e+")


def cmd_analyze(cfg: ExperimentConfig) -> dict:
    """Aggregate per-instance estimates into medians per size:
    beta* tables for each (delta rule, q) and median specific-heat curves."""
    run_dir = Path(cfg.outdir) / "runs"
    out_dir = Path(cfg.outdir) / "analysis"
    ladder = cfg.ladder()
    betas = ladder.betas

    per_size = {n: [] for n in cfg.sizes}
    for n, k, inst_path in _instance_paths(cfg):
        est_path = run_dir / f"{inst_path.stem}.estimates.json"
        if not est_path.exists():
            raise ConfigError(f"missing estimates {est_path}; run `run` first")
        per_size[n].append(json.loads(est_path.read_text()))

    tables = {}
    for rule in cfg.delta_rules:
        for q in cfg.q_values:
            rows = []
            for n in cfg.sizes:
                stars = []
                for doc in per_size[n]:
                    p = np.asarray(doc["p_le_by_rule"][rule])
                    hit = np.nonzero(p >= q)[0]
                    if len(hit) == 0:
                        continue
                    r = int(hit[0])
                    stars.append((float(betas[r]), ladder.spacing_below(r)))
                if not stars:
                    continue
                values = np.array([s[0] for s in stars])
                spacing = float(np.median([s[1] for s in stars]))
                med = float(np.median(values))
                # quantization as uniform noise plus the spread of the median
                err = float(np.hypot(spacing / math.sqrt(12.0),
                                     1.2533 * values.std(ddof=1) / math.sqrt(len(values))
                                     if len(values) > 1 else 0.0))
                rows.append({"n": n, "beta_star": med, "err": err,
                             "n_instances": len(values)})
            name = f"beta_star_{rule}_q{_q_tag(q)}"
            _write_json(out_dir / f"{name}.json", {**cfg.stamp(), "rule": rule, "q": q, "rows": rows})
            _write_csv(
                out_dir / f"{name}.csv",
                f"config_hash={cfg.config_hash()} version={__version__} rule={rule} q={q}",
                ["n", "beta_star_median", "err", "n_instances"],
                [(r["n"], r["beta_star"], r["err"], r["n_instances"]) for r in rows],
            )
            tables[(rule, q)] = rows

    # median specific heat per rung, per size
    curve_rows = []
    for n in cfg.sizes:
        c_all = np.array([[rung["c_beta"] for rung in doc["rungs"]] for doc in per_size[n]])
        med_c = np.median(c_all, axis=0)
        for b, c in zip(betas, med_c):
            curve_rows.append((n, float(b), float(c)))
    _write_csv(
        out_dir / "median_cbeta.csv",
        f"config_hash={cfg.config_hash()} version={__version__}",
        ["n", "beta", "median_c_beta"],
        curve_rows,
    )
    return {f"{rule}_q{_q_tag(q)}": rows for (rule, q), rows in tables.items()}


def cmd_fit(cfg: ExperimentConfig) -> dict:
    """Fit beta*(N) tables with both scaling laws and write reports."""
    ana_dir = Path(cfg.outdir) / "analysis"
    fit_dir = Path(cfg.outdir) / "fits"
    reports = {}
    for rule in cfg.delta_rules:
        for q in cfg.q_values:
            name = f"beta_star_{rule}_q{_q_tag(q)}"
            path = ana_dir / f"{name}.json"
            if not path.exists():
                raise ConfigError(f"missing analysis table {path}; run `analyze` first")
            rows = json.loads(path.read_text())["rows"]
            rows = sorted(rows, key=lambda r: r["n"])[cfg.drop_smallest:]
            if len(rows) < 3:
                raise ConfigError(f"not enough sizes to fit in {path}")
            points = [(r["n"], r["beta_star"], r["err"] if r["err"] > 0 else None)
                      for r in rows]
            log_fit = fit_log_law(points)
            power_fit = fit_power_law(points)
            comparison = compare_models(log_fit, power_fit)
            doc = {
                **cfg.stamp(),
                "rule": rule,
                "q": q,
                "log_law": log_fit.report(),
                "power_law": power_fit.report(),
                "comparison": comparison.report(),
            }
            _write_json(fit_dir / f"fit_{name}.json", doc)
            ns = np.array([r["n"] for r in rows], dtype=np.float64)
            _write_csv(
                fit_dir / f"fit_{name}.csv",
                f"config_hash={cfg.config_hash()} version={__version__} "
                f"columns: size, measured median beta*, error, log-law fit, power-law fit",
                ["n", "beta_star", "err", "log_fit", "power_fit"],
                [
                    (int(n), float(y), float(e), float(lf), float(pf))
                    for n, y, e, lf, pf in zip(
                        ns,
                        [r["beta_star"] for r in rows],
                        [r["err"] for r in rows],
                        log_fit.predict(ns),
                        power_fit.predict(ns),
                    )
                ],
            )
            reports[name] = doc
    return reports


def cmd_analytic(cfg: ExperimentConfig, betas=(0.1, 1.0, 10.0),
                 qubit_sizes=(1, 10, 100), grover_sizes=(4, 8, 12),
                 grid_points: int = 99) -> list:
    """Emit the closed-form interpolation curves as plot-ready CSV."""
    out_dir = Path(cfg.outdir) / "analytic"
    out_dir.mkdir(parents=True, exist_ok=True)
    s_grid = np.linspace(0.0, 1.0, grid_points)
    written = []
    comment = f"config_hash={cfg.config_hash()} version={__version__}"
    for beta in betas:
        for n in qubit_sizes:
            pts = qubit_anneal_gibbs_weight(n, beta, s_grid)
            path = out_dir / f"qubits_n{n}_beta{beta:g}.csv"
            write_anneal_curve(pts, path, comment)
            written.append(path)
        for n in grover_sizes:
            pts = grover_anneal_gibbs_weight(n, beta, s_grid)
            path = out_dir / f"grover_n{n}_beta{beta:g}.csv"
            write_anneal_curve(pts, path, comment)
            written.append(path)
    return written


def cmd_selftest(cfg: ExperimentConfig) -> bool:
    """Quick oracle-vs-sampler consistency battery.

    Exercises the PT sampler against exact enumeration on small seeded
    instances, the reweighting identity, and the closed-form round trips.
    Returns True when everything holds.
    """
    ok = True

    def check(label, condition):
        nonlocal ok
        print(f"  [{'ok' if condition else 'FAIL'}] {label}")
        ok = ok and condition

    graph = build_chimera(1, 2)
    ladder = geometric_ladder(0.3, 2.0, 6)
    for seed in (1, 2, 3):
        inst = generate_bimodal(graph, seed)
        dos = enumerate_dos(inst)
        schedule = PtSchedule(warmup_swaps=1000, sweeps_per_swap=10,
                              sample_stride_swaps=5, n_samples=1600,
                              seed=split_seed(cfg.seed, seed))
        series = pt_run(inst, ladder, schedule, target_e=dos.e0)
        for r, beta in enumerate(ladder.betas):
            exact = thermo_from_dos(dos, float(beta), dos.e0)
            est = estimates_from_samples(series.samples[r], inst.n_spins,
                                         float(beta), dos.e0)
            tol = 4.0 * max(est.mean_e_err, 1e-12)
            check(f"bimodal seed {seed} rung {r}: <e> within 4 sigma",
                  abs(est.mean_e - exact.mean_e) <= tol)

    inst = generate_planted(graph, 0.25, 100, 7)
    dos = enumerate_dos(inst)
    h1 = histogram_from_dos(dos, 1.0)
    h2 = reweight_histogram(h1, 0.5)
    h_ref = histogram_from_dos(dos, 1.5)
    rel = np.max(np.abs(h2.counts - h_ref.counts) / np.maximum(h_ref.counts, 1e-300))
    check("reweighting identity at delta_beta=0.5 (rel 1e-10)", rel < 1e-10)

    beta_exact, _ = indep_spins_beta_of_p0(50, 0.1)
    _, _, p0 = indep_spins_thermo(50, beta_exact)
    check("independent-spins round trip", abs(p0 - 0.1) < 1e-10)
    return ok


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betascale",
        description="Spin-glass Boltzmann sampling and temperature-scaling pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("gen", "generate instance files"),
        ("run", "sample instances (exact oracle or parallel tempering)"),
        ("analyze", "aggregate estimates into beta* tables and median curves"),
        ("fit", "fit scaling laws to beta*(N) tables"),
        ("analytic", "emit closed-form interpolation curves"),
        ("selftest", "run the oracle-vs-sampler consistency battery"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--outdir", type=str, default=None)
        p.add_argument("--instance-class", type=str, default=None,
                       choices=["planted", "bimodal", "xorsat3"])
        p.add_argument("--sizes", type=str, default=None, help="comma-separated N list")
        p.add_argument("--count", type=int, default=None, help="instances per size")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--beta-min", type=float, default=None)
        p.add_argument("--beta-max", type=float, default=None)
        p.add_argument("--rungs", type=int, default=None, dest="n_rungs")
        p.add_argument("--warmup", type=int, default=None, dest="warmup_swaps")
        p.add_argument("--sweeps", type=int, default=None, dest="sweeps_per_swap")
        p.add_argument("--stride", type=int, default=None, dest="sample_stride_swaps")
        p.add_argument("--samples", type=int, default=None, dest="n_samples")
        p.add_argument("--q", type=str, default=None, help="comma-separated q list")
        p.add_argument("--delta-rules", type=str, default=None,
                       help="comma-separated subset of zero,const,sqrt,linear")
        p.add_argument("--oracle-cap", type=int, default=None, dest="oracle_cap")
        p.add_argument("--drop-smallest", type=int, default=None, dest="drop_smallest")
        p.add_argument("--no-samples", action="store_true",
                       help="skip writing per-sample CSV files")
        p.add_argument("--max-swaps", type=int, default=None, dest="max_total_swaps")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Precedence: built-in defaults < config file < command-line flags."""
    doc = {}
    if args.config:
        doc.update(json.loads(Path(args.config).read_text())
                   if Path(args.config).exists() else _die_config(args.config))
    overrides = {
        "seed": args.seed,
        "outdir": args.outdir,
        "instance_class": args.instance_class,
        "count": args.count,
        "workers": args.workers,
        "beta_min": args.beta_min,
        "beta_max": args.beta_max,
        "n_rungs": args.n_rungs,
        "warmup_swaps": args.warmup_swaps,
        "sweeps_per_swap": args.sweeps_per_swap,
        "sample_stride_swaps": args.sample_stride_swaps,
        "n_samples": args.n_samples,
        "oracle_cap": args.oracle_cap,
        "drop_smallest": args.drop_smallest,
        "max_total_swaps": args.max_total_swaps,
    }
    for key, value in overrides.items():
        if value is not None:
            doc[key] = value
    if args.sizes is not None:
        doc["sizes"] = [int(s) for s in args.sizes.split(",") if s]
    if args.q is not None:
        doc["q_values"] = [float(s) for s in args.q.split(",") if s]
    if args.delta_rules is not None:
        doc["delta_rules"] = [s for s in args.delta_rules.split(",") if s]
    if args.no_samples:
        doc["write_samples"] = False
    return ExperimentConfig.from_dict(doc)


def _die_config(path):
    raise ConfigError(f"config file {path} does not exist")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (ConfigError, json.JSONDecodeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "gen":
            paths = cmd_gen(cfg)
            print(f"wrote {len(paths)} instance files under {cfg.outdir}/instances")
        elif args.command == "run":
            results = cmd_run(cfg)
            n_exact = sum(1 for r in results if r["method"] == "exact")
            print(f"ran {len(results)} instances ({n_exact} exact, "
                  f"{len(results) - n_exact} PT)")
        elif args.command == "analyze":
            tables = cmd_analyze(cfg)
            print(f"wrote {len(tables)} beta* tables under {cfg.outdir}/analysis")
        elif args.command == "fit":
            reports = cmd_fit(cfg)
            for name, doc in reports.items():
                comp = doc["comparison"]
                print(f"{name}: b={doc['log_law']['params']['b']:.4f}, "
                      f"alpha={doc['power_law']['params']['alpha']:.4f}, "
                      f"indistinguishable={comp['indistinguishable']}")
        elif args.command == "analytic":
            written = cmd_analytic(cfg)
            print(f"wrote {len(written)} curve files under {cfg.outdir}/analytic")
        elif args.command == "selftest":
            print("selftest:")
            if not cmd_selftest(cfg):
                print("selftest FAILED", file=sys.stderr)
                return 3
            print("selftest passed")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"numerical consistency failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
