"""Command-line entry point wiring corpora, providers, and reports.

Configuration precedence is flags over environment over config file over
defaults. Endpoints live under config key "endpoints" per capability (chat,
embed, score, nlp) with {base_url, api_key, model_id}; the matching
environment overrides are TRACE_PROFILER_<CAP>_{BASE_URL,API_KEY,MODEL}.
Offline mode swaps every capability for the deterministic stubs and refuses
endpoint configuration outright, so an offline run provably cannot touch
the network.

Artifacts land under output_dir/{profiles,fvcu,sample,eval,correlation,
report}. Every artifact write is canonical (sorted keys, fixed separators,
no timestamps), so identical config, inputs, and cache state give
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from . import corpus as corpus_mod
from . import correlation, evaluation, fvcu, metrics, sampling
from .errors import ConfigError, ProfileFailure, TraceProfilerError
from .providers import (
    CachedChat,
    CachedEmbedder,
    HttpChatProvider,
    HttpEmbeddingProvider,
    HttpScoreProvider,
    ProviderSet,
    ResponseCache,
    SidecarClient,
    SidecarEmbedder,
    SidecarSegmenter,
    SidecarSyntax,
    canonical_json,
    offline_provider_set,
    set_parallelism,
)

CAPABILITIES = ("chat", "embed", "score", "nlp")

ENV_PREFIX = "TRACE_PROFILER"


@dataclass
class Endpoint:
    base_url: str
    api_key: str = ""
    model_id: str = ""
    max_chars: int | None = None


@dataclass
class RunConfig:
    offline: bool = False
    seed: int = 0
    fvcu_n: int = 1000
    eval_n: int = 900
    token_limit: int = 32768
    length_quantiles: int = 4
    parallelism: int = 8
    vocab_size: int = 1000
    output_dir: Path = Path("artifacts")
    cache_dir: Path | None = None
    corpora: dict[str, Path] = field(default_factory=dict)
    endpoints: dict[str, Endpoint] = field(default_factory=dict)

    def validate(self) -> None:
        if self.fvcu_n < 1 or self.eval_n < 1:
            raise ConfigError("sample sizes must be >= 1")
        if self.token_limit < 1:
            raise ConfigError("token_limit must be >= 1")
        if self.offline and self.endpoints:
            names = ", ".join(sorted(self.endpoints))
            raise ConfigError(
                f"offline=true forbids network endpoints (configured: {names})"
            )


def _parse_endpoint(name: str, raw: Mapping) -> Endpoint:
    if not isinstance(raw, Mapping) or "base_url" not in raw:
        raise ConfigError(f"endpoint {name!r} needs a base_url")
    max_chars = raw.get("max_chars")
    if max_chars is not None:
        max_chars = int(max_chars)
    return Endpoint(
        base_url=str(raw["base_url"]),
        api_key=str(raw.get("api_key", "")),
        model_id=str(raw.get("model_id", "")),
        max_chars=max_chars,
    )


def load_config(
    config_path: str | Path | None,
    env: Mapping[str, str],
    overrides: Mapping[str, object],
) -> RunConfig:
    """Merge defaults, config file, environment, and flag overrides."""
    cfg = RunConfig()
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        for key in (
            "offline",
            "seed",
            "fvcu_n",
            "eval_n",
            "token_limit",
            "length_quantiles",
            "parallelism",
            "vocab_size",
        ):
            if key in data:
                setattr(cfg, key, type(getattr(cfg, key))(data[key]))
        if "output_dir" in data:
            cfg.output_dir = Path(str(data["output_dir"]))
        if "cache_dir" in data:
            cfg.cache_dir = Path(str(data["cache_dir"]))
        for name, value in (data.get("corpora") or {}).items():
            cfg.corpora[str(name)] = Path(str(value))
        for name, value in (data.get("endpoints") or {}).items():
            if name not in CAPABILITIES:
                raise ConfigError(
                    f"unknown endpoint capability {name!r}; "
                    f"expected one of {CAPABILITIES}"
                )
            cfg.endpoints[name] = _parse_endpoint(name, value)

    for capability in CAPABILITIES:
        prefix = f"{ENV_PREFIX}_{capability.upper()}_"
        base_url = env.get(prefix + "BASE_URL")
        if base_url:
            current = cfg.endpoints.get(capability) or Endpoint(base_url="")
            current.base_url = base_url
            cfg.endpoints[capability] = current
        if capability in cfg.endpoints:
            api_key = env.get(prefix + "API_KEY")
            model = env.get(prefix + "MODEL")
            if api_key:
                cfg.endpoints[capability].api_key = api_key
            if model:
                cfg.endpoints[capability].model_id = model

    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("output_dir", "cache_dir"):
            setattr(cfg, key, Path(str(value)))
        else:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def _require_endpoint(cfg: RunConfig, capability: str, why: str) -> Endpoint:
    endpoint = cfg.endpoints.get(capability)
    if endpoint is None or not endpoint.base_url:
        raise ConfigError(
            f"{why} needs a {capability!r} endpoint and offline mode is off; "
            f"configure endpoints.{capability}.base_url or pass --offline"
        )
    return endpoint


def build_provider_set(cfg: RunConfig, need: frozenset[str]) -> ProviderSet:
    """Resolve the capabilities a command needs; unneeded slots stay None.

    Offline mode returns the stub set seeded from the run seed. Otherwise
    chat and embeddings may be wrapped in the response cache; segmentation
    and parse depth come from the NLP sidecar endpoint, and embeddings fall
    back to the sidecar when no dedicated embedding endpoint exists.
    """
    if cfg.offline:
        return offline_provider_set(seed=cfg.seed, vocab_size=cfg.vocab_size)

    cache = ResponseCache(cfg.cache_dir) if cfg.cache_dir else None
    chat = embedder = scorer = segmenter = syntax = None
    nlp_client: SidecarClient | None = None

    def sidecar() -> SidecarClient:
        nonlocal nlp_client
        if nlp_client is None:
            endpoint = _require_endpoint(cfg, "nlp", "this command")
            nlp_client = SidecarClient(endpoint.base_url, token=endpoint.api_key)
        return nlp_client

    if "chat" in need:
        endpoint = _require_endpoint(cfg, "chat", "judging")
        chat = HttpChatProvider(
            endpoint.base_url, endpoint.model_id, endpoint.api_key
        )
        if cache is not None:
            chat = CachedChat(chat, cache)
    if "embed" in need:
        endpoint = cfg.endpoints.get("embed")
        if endpoint is not None and endpoint.base_url:
            embedder = HttpEmbeddingProvider(
                endpoint.base_url,
                endpoint.model_id,
                endpoint.api_key,
                max_chars=endpoint.max_chars,
            )
        else:
            embedder = SidecarEmbedder(sidecar())
        if cache is not None:
            embedder = CachedEmbedder(embedder, cache)
    if "score" in need:
        endpoint = _require_endpoint(cfg, "score", "perplexity scoring")
        scorer = HttpScoreProvider(
            endpoint.base_url, endpoint.model_id, endpoint.api_key
        )
    if "nlp" in need:
        segmenter = SidecarSegmenter(sidecar())
        syntax = SidecarSyntax(sidecar())

    return ProviderSet(
        chat=chat, embedder=embedder, scorer=scorer, segmenter=segmenter, syntax=syntax
    )


def _write_text(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")


def _write_json(path: Path, obj: object) -> None:
    _write_text(path, canonical_json(obj) + "\n")


def _corpus_args(pairs: Sequence[str], cfg: RunConfig) -> dict[str, Path]:
    """Resolve NAME=PATH pairs (or bare paths, named by stem); fall back to
    the config's corpora map."""
    if not pairs:
        if not cfg.corpora:
            raise ConfigError("no corpora given: pass --corpus NAME=PATH")
        return dict(cfg.corpora)
    out: dict[str, Path] = {}
    for pair in pairs:
        if "=" in pair:
            name, _, raw = pair.partition("=")
        else:
            name, raw = Path(pair).stem, pair
        if not name or not raw:
            raise ConfigError(f"bad corpus argument {pair!r}; expected NAME=PATH")
        if name in out:
            raise ConfigError(f"corpus name {name!r} given twice")
        out[name] = Path(raw)
    return out


def _load_filtered(
    name: str, path: Path, cfg: RunConfig, schema: str
) -> tuple[corpus_mod.Corpus, list[str]]:
    loaded = corpus_mod.load_corpus(path, schema=schema, name=name)
    tokenizer = corpus_mod.WhitespaceTokenizer()
    return corpus_mod.filter_by_length(loaded, tokenizer, cfg.token_limit)


def cmd_profile(cfg: RunConfig, args: argparse.Namespace) -> int:
    providers = build_provider_set(cfg, frozenset({"embed", "score", "nlp"}))
    out_dir = cfg.output_dir / "profiles"
    for name, path in sorted(_corpus_args(args.corpus, cfg).items()):
        filtered, removed = _load_filtered(name, path, cfg, args.schema)
        rows, failures = metrics.collect_metrics(filtered, providers)
        if len(failures) > 0.1 * len(filtered) or not rows:
            raise ProfileFailure(len(failures), len(filtered), failures)
        profile = metrics.aggregate_profile(rows, n_failed=len(failures))
        _write_text(out_dir / f"{name}.metrics.jsonl", metrics.dump_rows(rows))
        _write_json(
            out_dir / f"{name}.profile.json",
            {"corpus": name, **profile.to_json(), "n_removed_overlong": len(removed)},
        )
        stats = corpus_mod.compute_stats(filtered, corpus_mod.WhitespaceTokenizer())
        _write_json(
            out_dir / f"{name}.stats.json",
            {"corpus": name, **stats.to_json(), "n_removed_overlong": len(removed)},
        )
        if failures:
            _write_json(
                out_dir / f"{name}.failures.json",
                {"corpus": name, "failures": sorted(failures)},
            )
        print(f"profiled {name}: {profile.n_examples} examples")
    return 0


def cmd_fvcu(cfg: RunConfig, args: argparse.Namespace) -> int:
    providers = build_provider_set(cfg, frozenset({"chat", "nlp"}))
    out_dir = cfg.output_dir / "fvcu"
    n_target = args.n or cfg.fvcu_n
    for name, path in sorted(_corpus_args(args.corpus, cfg).items()):
        filtered, _ = _load_filtered(name, path, cfg, args.schema)
        if n_target < len(filtered):
            spec = sampling.StrataSpec(
                length_quantiles=cfg.length_quantiles, seed=cfg.seed
            )
            filtered = sampling.stratify(filtered, n_target, spec)
        result = fvcu.run_pipeline(
            filtered,
            providers.chat,
            providers.segmenter,
            max_workers=cfg.parallelism,
        )
        _write_text(out_dir / f"{name}.verdicts.jsonl", fvcu.rows_to_ndjson(result.rows))
        _write_json(
            out_dir / f"{name}.scores.json",
            {"corpus": name, **result.scores.to_json()},
        )
        print(
            f"judged {name}: {result.scores.n_steps} steps over "
            f"{result.scores.n_examples} examples"
        )
    return 0


def cmd_sample(cfg: RunConfig, args: argparse.Namespace) -> int:
    corpora = _corpus_args(args.corpus, cfg)
    out_dir = cfg.output_dir / "sample"
    for name, path in sorted(corpora.items()):
        filtered, _ = _load_filtered(name, path, cfg, args.schema)
        spec = sampling.StrataSpec(
            length_quantiles=cfg.length_quantiles, seed=cfg.seed
        )
        sampled = sampling.stratify(filtered, args.n, spec)
        out_path = out_dir / f"{name}.sample.jsonl"
        out_path.parent.mkdir(parents=True, exist_ok=True)
        corpus_mod.save_corpus(sampled, out_path)
        _write_json(out_dir / f"{name}.ids.json", sorted(sampled.ids()))
        print(f"sampled {name}: {len(sampled)} of {len(filtered)} examples")
    return 0


def cmd_judge(cfg: RunConfig, args: argparse.Namespace) -> int:
    providers = build_provider_set(cfg, frozenset({"chat"}))
    records = evaluation.load_predictions(args.predictions)
    judgments = evaluation.judge_records(
        records, providers.chat, max_workers=cfg.parallelism
    )
    out_dir = cfg.output_dir / "eval"
    lines = [
        json.dumps(
            {
                "example_id": r.example_id,
                "benchmark": r.benchmark,
                "model_variant": r.model_variant,
                "correct": j,
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )
        for r, j in zip(records, judgments)
    ]
    _write_text(out_dir / "judgments.jsonl", "\n".join(lines) + "\n")
    results = evaluation.score_records(records, judgments)
    _write_text(
        out_dir / "results.csv", evaluation.results_csv(results, baseline=args.baseline)
    )
    if args.corpus:
        domain_of: dict[str, str] = {}
        for name, path in sorted(_corpus_args(args.corpus, cfg).items()):
            loaded = corpus_mod.load_corpus(path, schema=args.schema, name=name)
            for ex in loaded.examples:
                domain_of[ex.id] = ex.domain
        grouped = evaluation.score_grouped(
            records, judgments, evaluation.domain_grouping(domain_of)
        )
        base: dict[str, float] = {}
        if args.baseline:
            base = {
                domain: acc
                for (variant, domain), (acc, _) in grouped.items()
                if variant == args.baseline
            }
        lines = ["model_variant,domain,n,accuracy,relative_change_pct"]
        for (variant, domain), (acc, n) in sorted(grouped.items()):
            if not args.baseline:
                change = ""
            elif domain not in base or base[domain] == 0:
                change = "undefined"
            else:
                change = repr(evaluation.relative_change(base[domain], acc))
            lines.append(f"{variant},{domain},{n},{acc!r},{change}")
        _write_text(out_dir / "results_by_domain.csv", "\n".join(lines) + "\n")
    print(f"judged {len(records)} predictions")
    return 0


def _load_bool_list(path: Path) -> list[bool]:
    text = path.read_text(encoding="utf-8").strip()
    if not text:
        raise ConfigError(f"{path} is empty")
    if text.startswith("["):
        data = json.loads(text)
        if not all(isinstance(x, bool) for x in data):
            raise ConfigError(f"{path} must hold only booleans")
        return list(data)
    out: list[bool] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        row = json.loads(line)
        value = row.get("correct") if isinstance(row, dict) else None
        if not isinstance(value, bool):
            raise ConfigError(f"{path}:{line_no} has no boolean 'correct' field")
        out.append(value)
    return out


def cmd_audit(cfg: RunConfig, args: argparse.Namespace) -> int:
    a = _load_bool_list(Path(args.rater_a))
    b = _load_bool_list(Path(args.rater_b))
    report = evaluation.cohen_kappa(a, b)
    _write_json(cfg.output_dir / "eval" / "audit.json", report.to_json())
    kappa = "undefined" if report.kappa is None else f"{report.kappa:.3f}"
    print(f"agreement {report.agreement:.3f}, kappa {kappa}, n {report.n}")
    return 0


def _assemble_metric_table(
    cfg: RunConfig, variants: Sequence[str]
) -> dict[str, dict[str, float]]:
    """Metric table for correlate --results, read from prior artifacts."""
    table: dict[str, dict[str, float]] = {}
    for variant in variants:
        profile_path = cfg.output_dir / "profiles" / f"{variant}.profile.json"
        if not profile_path.exists():
            raise ConfigError(
                f"no profile artifact for variant {variant!r}: {profile_path}"
            )
        profile = json.loads(profile_path.read_text(encoding="utf-8"))
        for metric in (
            "redundancy_ratio",
            "semantic_alignment",
            "semantic_flow",
            "symbolic_fraction",
            "syntactic_depth",
            "perplexity",
        ):
            value = profile.get(metric)
            if value is None:
                continue
            table.setdefault(metric, {})[variant] = float(value)
        scores_path = cfg.output_dir / "fvcu" / f"{variant}.scores.json"
        if scores_path.exists():
            scores = json.loads(scores_path.read_text(encoding="utf-8"))
            for dimension in fvcu.DIMENSIONS:
                table.setdefault(dimension, {})[variant] = float(
                    scores[f"{dimension}_pct"]
                )
    # A metric missing for some variant (e.g. flow absent) cannot correlate.
    return {
        metric: series
        for metric, series in table.items()
        if set(series) == set(variants)
    }


def cmd_correlate(cfg: RunConfig, args: argparse.Namespace) -> int:
    out_dir = cfg.output_dir / "correlation"
    matrices: list[correlation.CorrelationMatrix] = []
    if args.fixture:
        for raw in args.fixture:
            fixture = correlation.load_fixture(raw)
            matrices.append(
                correlation.fixture_matrix(
                    fixture, include_perplexity=args.include_perplexity
                )
            )
    elif args.results:
        data = json.loads(Path(args.results).read_text(encoding="utf-8"))
        variants = [str(v) for v in data["variants"]]
        performance = {
            str(b): {str(v): float(x) for v, x in series.items()}
            for b, series in data["performance"].items()
        }
        table = _assemble_metric_table(cfg, variants)
        family = args.family or str(data.get("family") or Path(args.results).stem)
        matrices.append(
            correlation.build_matrix(
                table,
                performance,
                family=family,
                include_perplexity=args.include_perplexity,
            )
        )
    else:
        raise ConfigError("correlate needs --fixture or --results")
    for matrix in matrices:
        stem = matrix.family.replace("/", "_").replace(" ", "_") or "matrix"
        _write_text(out_dir / f"{stem}.matrix.csv", matrix.to_csv())
        _write_json(out_dir / f"{stem}.matrix.json", matrix.to_json())
        print(
            f"correlated {matrix.family}: "
            f"{len(matrix.rows())}x{len(matrix.benchmarks)} cells"
        )
    return 0


def cmd_report(cfg: RunConfig, args: argparse.Namespace) -> int:
    profiles: dict[str, dict] = {}
    for path in sorted((cfg.output_dir / "profiles").glob("*.profile.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        profiles[data.get("corpus", path.stem)] = data
    fvcu_scores: dict[str, dict] = {}
    for path in sorted((cfg.output_dir / "fvcu").glob("*.scores.json")):
        data = json.loads(path.read_text(encoding="utf-8"))
        fvcu_scores[data.get("corpus", path.stem)] = data
    matrices = [
        correlation.CorrelationMatrix.from_json(
            json.loads(path.read_text(encoding="utf-8"))
        )
        for path in sorted((cfg.output_dir / "correlation").glob("*.matrix.json"))
    ]
    performance: dict[str, dict[str, dict[str, float]]] = {}
    results_path = cfg.output_dir / "eval" / "results.csv"
    if results_path.exists():
        table: dict[str, dict[str, float]] = {}
        lines = results_path.read_text(encoding="utf-8").splitlines()
        for line in lines[1:]:
            variant, benchmark, _, acc, _ = line.split(",")
            table.setdefault(benchmark, {})[variant] = float(acc)
        if table:
            performance["judged accuracy"] = table
    document = correlation.render_report(
        matrices,
        profiles=profiles or None,
        fvcu=fvcu_scores or None,
        performance=performance or None,
    )
    _write_text(cfg.output_dir / "report" / "report.md", document)
    print(f"report written to {cfg.output_dir / 'report' / 'report.md'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trace-profiler",
        description=(
            "Validate reasoning-supervision datasets: intrinsic metrics, "
            "step-level judging, benchmark scoring, and rank-correlation "
            "reports."
        ),
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--output-dir", help="artifact directory root")
    parser.add_argument("--cache-dir", help="provider response cache directory")
    parser.add_argument("--offline", action="store_true", default=None,
                        help="use deterministic stub providers; forbid endpoints")
    parser.add_argument("--seed", type=int, help="run seed (all randomness)")
    parser.add_argument("--parallelism", type=int, help="max concurrent provider calls")
    sub = parser.add_subparsers(dest="command", required=True)

    def corpus_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--corpus", action="append", default=[],
                       metavar="NAME=PATH", help="corpus file; repeatable")
        p.add_argument("--schema", choices=("structured", "chat"),
                       default="structured")

    p = sub.add_parser("profile", help="six analytical metrics per corpus")
    corpus_flags(p)
    p.set_defaults(fn=cmd_profile)

    p = sub.add_parser("fvcu", help="step-level judge pipeline per corpus")
    corpus_flags(p)
    p.add_argument("--n", type=int, default=None,
                   help="subsample size (default: config fvcu_n)")
    p.set_defaults(fn=cmd_fvcu)

    p = sub.add_parser("sample", help="stratified subsample of a corpus")
    corpus_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("judge", help="score predictions with the judge model")
    p.add_argument("--predictions", required=True)
    p.add_argument("--baseline", help="variant used as relative-change baseline")
    corpus_flags(p)
    p.set_defaults(fn=cmd_judge)

    p = sub.add_parser("audit", help="agreement and kappa between two raters")
    p.add_argument("--rater-a", required=True)
    p.add_argument("--rater-b", required=True)
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("correlate", help="metric-by-benchmark rank correlations")
    p.add_argument("--fixture", action="append", default=[],
                   help="fixture JSON with metrics and performance; repeatable")
    p.add_argument("--results", help="performance JSON; metrics from artifacts")
    p.add_argument("--family", help="matrix name for --results mode")
    p.add_argument("--include-perplexity", action="store_true")
    p.set_defaults(fn=cmd_correlate)

    p = sub.add_parser("report", help="compose artifacts into a Markdown report")
    p.set_defaults(fn=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            env=os.environ,
            overrides={
                "output_dir": args.output_dir,
                "cache_dir": args.cache_dir,
                "offline": args.offline,
                "seed": args.seed,
                "parallelism": args.parallelism,
            },
        )
        set_parallelism(cfg.parallelism)
        return args.fn(cfg, args)
    except TraceProfilerError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    except OSError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
