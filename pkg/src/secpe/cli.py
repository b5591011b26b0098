"""Command-line front end.

Exit codes: 0 success, 1 I/O or file-format problem, 2 validation or budget
error, 3 generator/embedder backend failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .accounting import BudgetError, SecretBudget
from .backends import BackendError, HashingEmbedder, HttpChatGenerator, IdentityEmbedder, MockGenerator
from .calibration import MODES, SecretIndex, secret_noise
from .clustering import kmeans, secret_clustering
from .data import (
    DataFormatError,
    Record,
    detect_secrets_catalog,
    detect_secrets_frequency,
    load_catalog,
    load_jsonl,
    read_embeddings,
    save_catalog,
    write_embeddings,
    write_jsonl,
)
from .evolution import PipelineConfig, run_pipeline
from .experiments import SimulationSpec, bench_vote, noise_ratio_simulation
from .geometry import EmbeddingSet
from .metrics import fit_gaussian, frechet_distance

log = logging.getLogger("secpe")

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_BACKEND = 0, 1, 2, 3

GDP_BASELINE_NOTE = (
    "sigma_gdp: full-participation Gaussian baseline, sensitivity = largest secret group |D_j|, "
    "sigma_gdp = max_j |D_j| * sqrt(T) / mu with mu coupled to (p, r)"
)

_PIPELINE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "N_syn": {"type": "integer", "minimum": 1},
        "L": {"type": "integer", "minimum": 1},
        "T": {"type": "integer", "minimum": 1},
        "K": {"type": "integer", "minimum": 1},
        "R": {"type": "number", "exclusiveMinimum": 0},
        "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "r": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "distance": {"enum": ["euclidean", "cosine"]},
        "calibration_mode": {"enum": list(MODES)},
        "worst_case": {"type": "boolean"},
        "rho_rule": {"enum": ["scaled", "max-normalized"]},
    },
}

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "output_dir": {"type": "string"},
        "private": {"type": "string"},
        "public": {"type": "string"},
        "private_records": {"type": "string"},
        "catalog": {"type": "string"},
        "pipeline": _PIPELINE_SCHEMA,
        "embedder": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["identity", "hashing", "sentence-transformer"]},
                "dim": {"type": "integer", "minimum": 1},
                "model": {"type": "string"},
            },
        },
        "backend": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["mock", "http"]},
                "s0": {"type": "number", "exclusiveMinimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
                "base_url": {"type": "string"},
                "model": {"type": "string"},
                "random_prompt": {"type": "string"},
                "variation_prompt": {"type": "string"},
                "temperature": {"type": "number", "minimum": 0},
                "max_tokens": {"type": "integer", "minimum": 1},
                "timeout": {"type": "number", "exclusiveMinimum": 0},
                "retries": {"type": "integer", "minimum": 0},
            },
        },
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "m": {"type": "integer", "minimum": 1},
                "q": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "ratios": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 1}},
                "T": {"type": "integer", "minimum": 1},
            },
        },
    },
}

_PATH_KEYS = ("private", "public", "private_records", "catalog", "output_dir")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    pipeline: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    output_dir: Path = Path("secpe-out")
    private: Path | None = None
    public: Path | None = None
    private_records: Path | None = None
    catalog: Path | None = None
    embedder: dict = field(default_factory=lambda: {"kind": "hashing"})
    backend: dict = field(default_factory=lambda: {"kind": "mock"})
    simulation: dict = field(default_factory=dict)

    def pipeline_config(self) -> PipelineConfig:
        defaults = {"N_syn": 32, "L": 8, "T": 10, "K": 8}
        return PipelineConfig(**{**defaults, **self.pipeline, "seed": self.seed})


def load_config(path) -> RunConfig:
    """Parse and validate a JSON run config; relative paths resolve against its directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(raw, base=path.parent)


def config_from_dict(raw: dict, base: Path = Path(".")) -> RunConfig:
    try:
        jsonschema.validate(raw, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {where}: {exc.message}") from None
    kw = dict(raw)
    for key in _PATH_KEYS:
        if key in kw:
            p = Path(kw[key])
            kw[key] = p if p.is_absolute() else base / p
    cfg = RunConfig(**kw)
    cfg.pipeline_config()  # cross-field checks
    return cfg


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def print_table(header, rows, out=None) -> None:
    out = out or sys.stdout
    cells = [[str(h) for h in header]] + [[f"{v:.6g}" if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    for k, r in enumerate(cells):
        print("  ".join(c.rjust(w) for c, w in zip(r, widths)), file=out)
        if k == 0:
            print("  ".join("-" * w for w in widths), file=out)


def _is_embedding_file(path: Path) -> bool:
    return path.suffix.lower() in (".emb", ".bin")


def _make_embedder(cfg: RunConfig, radius: float):
    spec = cfg.embedder
    kind = spec.get("kind", "hashing")
    if kind == "identity":
        return IdentityEmbedder(radius)
    if kind == "hashing":
        return HashingEmbedder(spec.get("dim", 256), radius)
    from .backends import SentenceTransformerEmbedder

    return SentenceTransformerEmbedder(spec.get("model", "all-MiniLM-L6-v2"), radius)


def _load_records(cfg: RunConfig, path: Path | None, what: str):
    """Records (or None for embedding files) plus the items the pipeline consumes."""
    if path is None:
        raise ConfigError(f"no {what} dataset configured")
    if _is_embedding_file(path):
        return None, read_embeddings(path, cfg.pipeline_config().radius)
    return load_jsonl(path), None


def _annotate(cfg: RunConfig, records: list[Record]):
    """Apply the catalog if configured; returns (records, per-secret budget overrides)."""
    overrides = {}
    if cfg.catalog is not None:
        catalog = load_catalog(cfg.catalog)
        records = detect_secrets_catalog(records, catalog)
        overrides = {sid: (e.p, e.r) for sid, e in catalog.entries.items()}
    return records, overrides


def _secret_setup(cfg: RunConfig, records: list[Record] | None, n: int):
    """SecretIndex and SecretBudget for the private set."""
    pc = cfg.pipeline_config()
    if records is None and cfg.private_records is not None:
        records = load_jsonl(cfg.private_records)
        if len(records) != n:
            raise ConfigError(f"private_records has {len(records)} rows, private embeddings have {n}")
    if records is None:
        return SecretIndex(n, ()), SecretBudget.uniform(0, pc.p, pc.r)
    records, overrides = _annotate(cfg, records)
    index = SecretIndex.from_record_secrets([r.secrets for r in records])
    p = np.full(index.n_secrets, pc.p)
    r = np.full(index.n_secrets, pc.r)
    for j, sid in enumerate(index.ids):
        op, orr = overrides.get(sid, (None, None))
        if op is not None:
            p[j] = op
        if orr is not None:
            r[j] = orr
    for j, sid in enumerate(index.ids):
        if p[j] >= r[j]:
            raise BudgetError(f"secret {sid!r}: p={p[j]!r} >= r={r[j]!r} leaves no capacity")
    return index, SecretBudget(p, r)


def _calibrate(cfg: RunConfig, index, budget, T: int):
    pc = cfg.pipeline_config()
    return secret_noise(
        index, budget, T=T, mode=pc.calibration_mode,
        worst_case=pc.worst_case, rho_rule=pc.rho_rule, threads=cfg.threads,
    )


def _output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_calibrate(cfg: RunConfig, args) -> int:
    records, emb = _load_records(cfg, cfg.private, "private")
    n = len(records) if records is not None else emb.n
    index, budget = _secret_setup(cfg, records, n)
    pc = cfg.pipeline_config()
    T = args.rounds or pc.T
    calib = _calibrate(cfg, index, budget, T)
    rho = calib.sampling_probs
    report = {
        "sigma": calib.sigma,
        "mode": calib.mode,
        "rounds": calib.rounds,
        "n_records": index.n_records,
        "rho": {"min": float(rho.min()), "mean": float(rho.mean()), "max": float(rho.max())} if rho.size else None,
        "weight_total": float(calib.weights.sum()),
        "secrets": [
            {
                "id": str(sid),
                "p": float(budget.p[j]),
                "r": float(budget.r[j]),
                "eta": float(calib.etas[j]),
                "sigma": float(calib.secret_sigmas[j]),
                "holders": int(len(index.membership[j])),
                "binding": bool(calib.binding[j]),
            }
            for j, sid in enumerate(index.ids)
        ],
    }
    out = _output_dir(cfg)
    write_json(out / "calibration.json", report)
    print(f"sigma = {calib.sigma:.6g}  (mode {calib.mode}, T = {calib.rounds}, {index.n_secrets} secrets)")
    if rho.size:
        print(f"rho: min {rho.min():.6g}  mean {rho.mean():.6g}  max {rho.max():.6g}")
    rows = [(s["id"], s["holders"], s["eta"], s["sigma"], "yes" if s["binding"] else "no") for s in report["secrets"]]
    limit = 20
    if rows:
        print_table(("secret", "holders", "eta", "sigma_j", "binding"), rows[:limit])
        if len(rows) > limit:
            print(f"... {len(rows) - limit} more secrets in calibration.json")
    return EXIT_OK


def cmd_detect_secrets(cfg: RunConfig, args) -> int:
    path = Path(args.data) if args.data else cfg.private
    if path is None:
        raise ConfigError("no dataset given (--data or config 'private')")
    records = load_jsonl(path)
    out = _output_dir(cfg)
    catalog_path = Path(args.catalog) if args.catalog else cfg.catalog
    if catalog_path is not None and not args.frequency:
        catalog = load_catalog(catalog_path)
        annotated = detect_secrets_catalog(records, catalog)
    else:
        catalog, annotated = detect_secrets_frequency(records, args.quantile, args.window)
    write_jsonl(annotated, out / "annotated.jsonl")
    save_catalog(catalog, out / "catalog.json")
    hits = sum(1 for r in annotated if r.secrets)
    print(f"{len(catalog)} secrets, {hits} of {len(annotated)} records hold at least one")
    for sid in catalog.ids:
        count = sum(1 for r in annotated if sid in r.secrets)
        print(f"  {sid}: {count}")
    return EXIT_OK


def _embed_dataset(cfg: RunConfig, path: Path | None, what: str):
    records, emb = _load_records(cfg, path, what)
    if emb is None:
        pc = cfg.pipeline_config()
        emb = _make_embedder(cfg, pc.radius).embed([r.text for r in records])
    return records, emb


def cmd_cluster(cfg: RunConfig, args) -> int:
    pc = cfg.pipeline_config()
    priv_records, private = _embed_dataset(cfg, cfg.private, "private")
    _, public = _embed_dataset(cfg, cfg.public, "public")
    if private.d != public.d:
        raise ConfigError(f"private dimension {private.d} differs from public dimension {public.d}")
    index, budget = _secret_setup(cfg, priv_records, private.n)
    calib = _calibrate(cfg, index, budget, pc.T)
    clip = (lambda e: e.normalized()) if pc.distance == "cosine" else (lambda e: EmbeddingSet(e.vectors, pc.radius).clipped())
    private, public = clip(private), clip(public)
    km_seq, rel_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    clusters = kmeans(public, pc.K, km_seq)
    noisy = secret_clustering(clusters, private, calib.sampling_probs, calib.sigma, seed=rel_seq)
    out = _output_dir(cfg)
    header = ["cluster", "public_size", "noisy_size"] + [f"c{i}" for i in range(noisy.centers.shape[1])]
    rows = [[k, int(clusters.sizes[k]), float(noisy.sizes[k]), *map(float, noisy.centers[k])] for k in range(noisy.K)]
    write_csv(out / "clusters.csv", header, rows)
    write_embeddings(noisy.centers, out / "centers.emb")
    print(f"released {noisy.K} noisy clusters with sigma = {noisy.sigma:.6g}")
    print_table(("cluster", "public_size", "noisy_size"), [r[:3] for r in rows])
    return EXIT_OK


def _make_generator(cfg: RunConfig, dim: int, radius: float):
    spec = cfg.backend
    if spec.get("kind", "mock") == "mock":
        return MockGenerator(dim, radius, cfg.seed, s0=spec.get("s0"), gamma=spec.get("gamma", 0.8))
    missing = [k for k in ("base_url", "model", "random_prompt", "variation_prompt") if k not in spec]
    if missing:
        raise ConfigError(f"http backend needs {', '.join(missing)}")
    return HttpChatGenerator(
        spec["base_url"], spec["model"],
        random_prompt=spec["random_prompt"], variation_prompt=spec["variation_prompt"],
        temperature=spec.get("temperature", 1.2), max_tokens=spec.get("max_tokens", 448),
        timeout=spec.get("timeout", 120.0), retries=spec.get("retries", 3), threads=cfg.threads,
    )


def cmd_evolve(cfg: RunConfig, args) -> int:
    from .plotting import line_plot

    pc = cfg.pipeline_config()
    mock = cfg.backend.get("kind", "mock") == "mock"
    if mock:
        # the mock generator lives in embedding space: embed the datasets once, then work on vectors
        priv_records, private = _embed_dataset(cfg, cfg.private, "private")
        _, public = _embed_dataset(cfg, cfg.public, "public")
        if private.d != public.d:
            raise ConfigError(f"private dimension {private.d} differs from public dimension {public.d}")
        private_items, public_items = private.vectors, public.vectors
        embedder = IdentityEmbedder(pc.radius)
        generator = _make_generator(cfg, private.d, pc.radius)
        n_private = private.n
    else:
        priv_records, _ = _load_records(cfg, cfg.private, "private")
        pub_records, _ = _load_records(cfg, cfg.public, "public")
        if priv_records is None or pub_records is None:
            raise ConfigError("the http backend needs JSONL text datasets")
        private_items = [r.text for r in priv_records]
        public_items = [r.text for r in pub_records]
        embedder = _make_embedder(cfg, pc.radius)
        generator = _make_generator(cfg, 0, pc.radius)
        n_private = len(priv_records)

    index, budget = _secret_setup(cfg, priv_records, n_private)
    result = run_pipeline(pc, public_items, private_items, generator, embedder, index, budget, threads=cfg.threads)

    out = _output_dir(cfg)
    if mock:
        write_embeddings(result.embeddings, out / "synthetic.emb")
    else:
        write_jsonl([Record(f"syn-{i}", text) for i, text in enumerate(result.synthetic)], out / "synthetic.jsonl")
        write_embeddings(result.embeddings, out / "synthetic.emb")
    rep = result.report
    write_csv(
        out / "convergence.csv",
        ["round", "coverage_distance", "mis_selection", "vote_distance_evals", "pool_size"],
        [(row["round"], row["coverage_distance"], row["mis_selection"], row["vote_distance_evals"], size)
         for row, size in zip(rep.rows(), result.pool_sizes)],
    )
    rounds = list(range(1, rep.rounds + 1))
    line_plot(out / "convergence.svg", rounds, {"coverage distance": rep.coverage},
              xlabel="round", ylabel="max private-to-synthetic distance")
    write_json(out / "run.json", {
        "sigma": result.sigma,
        "pipeline": {k: getattr(pc, k) for k in ("N_syn", "L", "T", "K", "R", "p", "r", "seed", "distance",
                                                  "calibration_mode", "worst_case", "rho_rule")},
        "backend": cfg.backend.get("kind", "mock"),
        "final_coverage_distance": rep.coverage[-1],
        "n_synthetic": int(result.embeddings.n),
    })
    print(f"sigma = {result.sigma:.6g}; coverage distance {rep.coverage[0]:.4g} -> {rep.coverage[-1]:.4g} over {rep.rounds} rounds")
    return EXIT_OK


def _simulation_spec(cfg: RunConfig, args) -> SimulationSpec:
    spec = dict(cfg.simulation)
    for key in ("N", "m", "q", "p", "T"):
        v = getattr(args, f"sim_{key}")
        if v is not None:
            spec[key] = v
    if args.ratios:
        spec["ratios"] = args.ratios
    return SimulationSpec(**spec, seed=cfg.seed)


def cmd_simulate(cfg: RunConfig, args) -> int:
    from .plotting import line_plot

    spec = _simulation_spec(cfg, args)
    rows = noise_ratio_simulation(spec)
    out = _output_dir(cfg)
    write_csv(out / "noise_ratio.csv", ["ratio", "sigma_gdp", "sigma_secret", "noise_ratio"],
              [(r.ratio, r.sigma_gdp, r.sigma_secret, r.noise_ratio) for r in rows])
    write_json(out / "noise_ratio.json", {
        "baseline": GDP_BASELINE_NOTE,
        "spec": {"N": spec.N, "m": spec.m, "q": spec.q, "p": spec.p, "T": spec.T, "seed": spec.seed},
        "rows": [{"ratio": r.ratio, "sigma_gdp": r.sigma_gdp, "sigma_secret": r.sigma_secret,
                  "noise_ratio": r.noise_ratio} for r in rows],
    })
    line_plot(out / "noise_ratio.svg", [r.ratio for r in rows], {"sigma_GDP / sigma_secret": [r.noise_ratio for r in rows]},
              xlabel="r / p", ylabel="noise ratio", logx=True, logy=True, hline=1.0)
    print(GDP_BASELINE_NOTE)
    print_table(("r/p", "sigma_gdp", "sigma_secret", "ratio"), [(r.ratio, r.sigma_gdp, r.sigma_secret, r.noise_ratio) for r in rows])
    return EXIT_OK


def cmd_fid(cfg: RunConfig, args) -> int:
    a = read_embeddings(args.a)
    b = read_embeddings(args.b)
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    fid = frechet_distance(fit_gaussian(a), fit_gaussian(b))
    payload = {"fid": fid, "a": str(args.a), "b": str(args.b), "n_a": a.n, "n_b": b.n, "d": a.d}
    print(repr(fid))
    print(json.dumps(payload, sort_keys=True))
    if args.out:
        write_json(_output_dir(cfg) / "fid.json", payload)
    return EXIT_OK


def cmd_bench_vote(cfg: RunConfig, args) -> int:
    rows, hists = bench_vote(args.M, args.K, args.N_syn, args.d, cfg.seed, repeats=args.repeats)
    out = _output_dir(cfg)
    write_csv(out / "bench_vote.csv", ["engine", "seconds", "distance_evals"],
              [(r.engine, r.seconds, r.distance_evals) for r in rows])
    print_table(("engine", "seconds", "distance_evals"), [(r.engine, r.seconds, r.distance_evals) for r in rows])
    p, r = rows
    print(f"distance-count ratio {p.distance_evals / r.distance_evals:.6g}, speedup {p.seconds / max(r.seconds, 1e-12):.1f}x")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flags from clobbering ones given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, help="seed overriding the config (unsigned 64-bit)")
    common.add_argument("--threads", type=int, help="parallelism bound")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="secpe", description="Secret-protected synthetic data tools", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", parents=[common], help="noise scale and sampling probabilities")
    p.add_argument("--rounds", type=int, help="rounds to budget for (default: pipeline T)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("detect-secrets", parents=[common], help="annotate records with secrets")
    p.add_argument("--data", help="JSONL dataset (default: config 'private')")
    p.add_argument("--catalog", help="keyword catalog JSON")
    p.add_argument("--frequency", action="store_true", help="ignore any catalog and use frequency detection")
    p.add_argument("--quantile", type=float, default=0.2)
    p.add_argument("--window", type=int, default=1)
    p.set_defaults(func=cmd_detect_secrets)

    p = sub.add_parser("cluster", parents=[common], help="one noisy release of shifted public clusters")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evolve", parents=[common], help="run the evolution pipeline")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("simulate", parents=[common], help="noise-ratio simulation against a Gaussian baseline")
    p.add_argument("--N", dest="sim_N", type=int)
    p.add_argument("--m", dest="sim_m", type=int)
    p.add_argument("--q", dest="sim_q", type=float)
    p.add_argument("--p", dest="sim_p", type=float)
    p.add_argument("--T", dest="sim_T", type=int)
    p.add_argument("--ratios", type=float, nargs="+")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fid", parents=[common], help="Frechet distance between two embedding files")
    p.add_argument("a", type=Path)
    p.add_argument("b", type=Path)
    p.set_defaults(func=cmd_fid)

    p = sub.add_parser("bench-vote", parents=[common], help="pointwise vs representative voting cost")
    p.add_argument("--M", type=int, default=100_000)
    p.add_argument("--K", type=int, default=500)
    p.add_argument("--N-syn", dest="N_syn", type=int, default=5000)
    p.add_argument("--d", type=int, default=64)
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_bench_vote)
    return parser


def _resolve(args) -> RunConfig:
    for name in ("config", "seed", "threads", "out"):
        if not hasattr(args, name):
            setattr(args, name, None)
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg.threads = args.threads
    if args.out is not None:
        cfg.output_dir = args.out
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        return args.func(cfg, args)
    except BackendError as exc:
        where = f" in round {exc.round_index}" if exc.round_index is not None else ""
        print(f"error: backend failure{where}: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BudgetError, ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
