"""Command-line entry point: ingest -> synth -> gen -> mix -> bench build / bench eval."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

from . import compositor, corpus as corpus_mod, harness, mixer, synthetic, taskgen
from .compositor import ScaleParams, derive_rng
from .corpus import PageRecord, ingest_layout, ingest_natural, iter_json_records
from .errors import AnnotatorError, DataError, InfeasibleError

log = logging.getLogger("docfocus")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_ANNOTATOR = 0, 1, 2, 3
ENV_PREFIX = "DOCFOCUS_"


class UsageError(Exception):
    pass


@dataclass
class PipelineConfig:
    pages: list[str] = field(default_factory=list)
    naturals: list[str] = field(default_factory=list)
    layouts: list[str] = field(default_factory=list)
    out: str = "out"
    seed: int = 0
    scaling: dict = field(default_factory=lambda: asdict(ScaleParams()))
    recipe: Optional[str] = None
    annotator: Optional[dict] = None
    workers: int = 1
    skip_tolerance: float = 0.01
    benchmark: dict = field(default_factory=dict)
    passthrough: dict = field(default_factory=dict)

    def scale_params(self) -> ScaleParams:
        try:
            return ScaleParams(**self.scaling)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"invalid scaling parameters: {exc}") from None

    def bench_config(self) -> harness.BenchmarkConfig:
        try:
            return harness.BenchmarkConfig(**self.benchmark)
        except TypeError as exc:
            raise UsageError(f"invalid benchmark config: {exc}") from None

    def make_annotator(self):
        if not self.annotator:
            return taskgen.OfflineAnnotator()
        a = self.annotator
        return taskgen.CommandAnnotator(a["command"], timeout=a.get("timeout", 60.0),
                                        retries=a.get("retries", 2))


def load_config(path: Optional[str], args: argparse.Namespace) -> PipelineConfig:
    """File values, then DOCFOCUS_* environment variables, then flags."""
    cfg = PipelineConfig()
    base = Path.cwd()
    if path:
        p = Path(path)
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(raw) - set(PipelineConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = replace(cfg, **raw)
        base = p.parent
        if not Path(cfg.out).is_absolute():
            cfg.out = str(base / cfg.out)
    env = os.environ
    if ENV_PREFIX + "SEED" in env:
        cfg.seed = _int(env[ENV_PREFIX + "SEED"], "seed")
    if ENV_PREFIX + "WORKERS" in env:
        cfg.workers = _int(env[ENV_PREFIX + "WORKERS"], "workers")
    if ENV_PREFIX + "OUT" in env:
        cfg.out = env[ENV_PREFIX + "OUT"]
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "workers", None) is not None:
        cfg.workers = args.workers
    if getattr(args, "out", None) is not None:
        cfg.out = args.out

    def rel(x):
        return str(x) if Path(x).is_absolute() else str(base / x)

    cfg.pages = [rel(x) for x in cfg.pages]
    cfg.naturals = [rel(x) for x in cfg.naturals]
    cfg.layouts = [rel(x) for x in cfg.layouts]
    cfg.passthrough = {k: rel(v) for k, v in cfg.passthrough.items()}
    if cfg.recipe:
        cfg.recipe = rel(cfg.recipe)
    if not isinstance(cfg.seed, int):
        raise UsageError("seed must be an integer")
    if cfg.workers < 1:
        raise UsageError("workers must be >= 1")
    cfg.scale_params()
    return cfg


def _int(value: str, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{what} must be an integer, got {value!r}") from None


def _write_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def _out(cfg: PipelineConfig) -> Path:
    return Path(cfg.out)


# -- ingest ------------------------------------------------------------------

def cmd_ingest(cfg: PipelineConfig, args) -> int:
    if not cfg.pages:
        raise UsageError("config lists no page files")
    out = _out(cfg) / "corpus"
    out.mkdir(parents=True, exist_ok=True)
    corpus = corpus_mod.Corpus()
    rejected, images = [], {}
    for path in cfg.pages:
        base = Path(path).parent
        for i, blob in enumerate(iter_json_records(path)):
            try:
                page = corpus.ingest(blob, base_dir=base)
            except (DataError, ValueError) as exc:
                rejected.append(f"{path}#{i}: {exc}")
                continue
            images[page.page_id] = os.path.abspath(corpus_mod.resolve_image(page.image_ref, base))
    seen = len(corpus) + len(rejected)
    pages = []
    for p in corpus.pages():
        blob = corpus_mod.page_to_blob(p)
        blob["image"] = images[p.page_id]
        pages.append(blob)
    mixer.write_jsonl(pages, out / "pages.jsonl")

    naturals, nat_rejected = [], []
    for path in cfg.naturals:
        for i, blob in enumerate(iter_json_records(path)):
            try:
                rec = ingest_natural(blob, base_dir=Path(path).parent)
            except (DataError, ValueError) as exc:
                nat_rejected.append(f"{path}#{i}: {exc}")
                continue
            b = corpus_mod.natural_to_blob(rec)
            b["image"] = os.path.abspath(corpus_mod.resolve_image(rec.image_ref, Path(path).parent))
            naturals.append(b)
    naturals.sort(key=lambda b: b["image_id"])
    mixer.write_jsonl(naturals, out / "naturals.jsonl")

    layouts, lay_rejected = [], []
    for path in cfg.layouts:
        for i, blob in enumerate(iter_json_records(path)):
            pid = blob.get("page_id") if isinstance(blob, dict) else None
            if pid not in corpus:
                lay_rejected.append(f"{path}#{i}: unknown page {pid!r}")
                continue
            try:
                layouts.append(corpus_mod.layout_to_blob(ingest_layout(blob, corpus[pid].size)))
            except (DataError, ValueError) as exc:
                lay_rejected.append(f"{path}#{i}: {exc}")
    layouts.sort(key=lambda b: b["page_id"])
    mixer.write_jsonl(layouts, out / "layouts.jsonl")

    report = {"pages": len(corpus), "naturals": len(naturals), "layouts": len(layouts),
              "rejected_pages": rejected, "rejected_naturals": nat_rejected,
              "rejected_layouts": lay_rejected}
    _write_json(report, out / "ingest_report.json")
    print(f"ingested {len(corpus)} pages ({len(rejected)} rejected), "
          f"{len(naturals)} natural images, {len(layouts)} layouts")
    if seen and len(rejected) / seen > cfg.skip_tolerance:
        log.error("rejected %d of %d pages, above tolerance %.3f", len(rejected), seen, cfg.skip_tolerance)
        return EXIT_DATA
    return EXIT_OK


def _load_corpus(cfg: PipelineConfig) -> list[PageRecord]:
    path = _out(cfg) / "corpus" / "pages.jsonl"
    if not path.is_file():
        raise DataError(f"{path} not found; run `ingest` first")
    return [corpus_mod.ingest_page(b, check_image=False) for b in iter_json_records(path)]


def _load_naturals(cfg: PipelineConfig):
    path = _out(cfg) / "corpus" / "naturals.jsonl"
    if not path.is_file():
        return []
    return [ingest_natural(b, check_image=False) for b in iter_json_records(path)]


def _load_layouts(cfg: PipelineConfig, pages: dict) -> dict:
    path = _out(cfg) / "corpus" / "layouts.jsonl"
    if not path.is_file():
        return {}
    out = {}
    for b in iter_json_records(path):
        if b["page_id"] in pages:
            out[b["page_id"]] = ingest_layout(b, pages[b["page_id"]].size)
    return out


# -- synth -------------------------------------------------------------------

def _synth_one(job):
    kind, page_blob, nat_blob, seed, out_dir, scaling = job
    page = corpus_mod.ingest_page(page_blob, check_image=False)
    out = Path(out_dir)
    png = out / "synth" / kind / f"{page.page_id}.png"
    try:
        if kind == "interleaved":
            nat = ingest_natural(nat_blob, check_image=False)
            hybrid, _ = compositor.synthesize_interleaved(
                page, nat, seed, page.image_ref, nat.image_ref, png, ScaleParams(**scaling))
        else:
            hybrid, _ = compositor.synthesize_color(page, seed, page.image_ref, png)
    except InfeasibleError as exc:
        return page.page_id, None, str(exc)
    hybrid = compositor.HybridPage(hybrid.base, hybrid.placements, hybrid.color_marks,
                                   hybrid.surviving_boxes, png.relative_to(out).as_posix())
    compositor.write_sidecar(hybrid, png.with_suffix(".json"))
    return page.page_id, png.relative_to(out).as_posix(), None


def _run_jobs(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=8))


def cmd_synth(cfg: PipelineConfig, args) -> int:
    pages = _load_corpus(cfg)
    if args.limit is not None:
        pages = pages[:args.limit]
    naturals = _load_naturals(cfg)
    kinds = ["interleaved", "color"] if args.kind == "both" else [args.kind]
    if "interleaved" in kinds and not naturals:
        raise DataError("no natural images ingested; cannot synthesize interleaved pages")
    out = _out(cfg)
    manifest = {"seed": cfg.seed, "kinds": {}}
    status = EXIT_OK
    for kind in kinds:
        jobs = []
        for p in pages:
            nat_blob = None
            if kind == "interleaved":
                nat = derive_rng(cfg.seed, "pair", p.page_id).choice(naturals)
                nat_blob = corpus_mod.natural_to_blob(nat)
            jobs.append((kind, corpus_mod.page_to_blob(p), nat_blob, cfg.seed, str(out), cfg.scaling))
        results = _run_jobs(_synth_one, jobs, cfg.workers)
        skipped = {pid: err for pid, ref, err in results if err}
        manifest["kinds"][kind] = {"pages": len(results), "written": len(results) - len(skipped),
                                   "skipped": dict(sorted(skipped.items()))}
        print(f"{kind}: {len(results) - len(skipped)} written, {len(skipped)} skipped")
        if results and len(skipped) / len(results) > cfg.skip_tolerance:
            log.error("%s: skipped %d of %d pages, above tolerance", kind, len(skipped), len(results))
            status = EXIT_DATA
    _write_json(manifest, out / "synth" / "manifest.json")
    return status


def _load_hybrids(cfg: PipelineConfig, kind: str, pages: dict) -> list:
    d = _out(cfg) / "synth" / kind
    if not d.is_dir():
        raise DataError(f"{d} not found; run `synth --kind {kind}` first")
    out = []
    for path in sorted(d.glob("*.json")):
        blob = json.loads(path.read_text(encoding="utf-8"))
        if blob["page_id"] in pages:
            out.append(compositor.hybrid_from_blob(blob, pages[blob["page_id"]]))
    return out


# -- gen ---------------------------------------------------------------------

def generate_task(task: str, cfg: PipelineConfig, passes: int = 1, bundle_size: int = 8):
    """Yield samples for one task over the ingested corpus, deterministically."""
    pages = _load_corpus(cfg)
    by_id = {p.page_id: p for p in pages}
    seed = cfg.seed
    annotator = cfg.make_annotator() if task in ("region_translation", "region_summary") else None
    hybrids = []
    if task == "color_ocr":
        hybrids = _load_hybrids(cfg, "color", by_id)
    elif task in ("figure_caption", "infigure_chat"):
        hybrids = _load_hybrids(cfg, "interleaved", by_id)
    layouts = _load_layouts(cfg, by_id) if task == "layout" else {}

    for k in range(passes):
        suffix = f"#{k}" if passes > 1 else ""
        if task in ("multipage_region_ocr", "crosspage_vqa"):
            usable = [p for p in pages if p.paragraphs]
            if len(usable) < 2:
                raise DataError("multi-page tasks need at least 2 pages with paragraphs")
            size = min(bundle_size, len(usable))
            for b in range(len(usable)):
                rng = derive_rng(seed, "gen", task, b, k)
                bundle = rng.sample(usable, size)
                sid = f"{task}:{b:06d}{suffix}"
                fn = taskgen.gen_multipage_region_ocr if task == "multipage_region_ocr" else taskgen.gen_crosspage_vqa
                try:
                    yield fn(bundle, rng, sample_id=sid)
                except InfeasibleError:
                    continue
            continue
        units = hybrids if hybrids else pages
        for unit in units:
            page = unit.base if hybrids else unit
            rng = derive_rng(seed, "gen", task, page.page_id, k)
            sid = f"{task}:{page.page_id}{suffix}"
            try:
                if task in ("foreground_ocr", "page_ocr", "page_markdown"):
                    yield taskgen.gen_foreground_ocr(page, task=task, sample_id=sid)
                elif task == "region_ocr":
                    turns = min(len(page.paragraphs), rng.randint(1, 3))
                    yield taskgen.gen_region_ocr(page, rng, turns=max(turns, 1), sample_id=sid)
                elif task == "line_ocr":
                    yield taskgen.gen_line_ocr(page, rng, turns=rng.randint(1, 3), sample_id=sid)
                elif task == "color_ocr":
                    yield taskgen.gen_color_ocr(unit, rng, sample_id=sid)
                elif task in ("region_translation", "region_summary"):
                    kind = "translation" if task == "region_translation" else "summary"
                    yield taskgen.gen_region_annotation(page, annotator, kind, rng, sample_id=sid)
                elif task == "layout":
                    if page.page_id in layouts:
                        yield taskgen.gen_layout(page, layouts[page.page_id], sample_id=sid)
                elif task == "figure_caption":
                    yield taskgen.gen_figure_caption(unit, sample_id=sid)
                elif task == "infigure_chat":
                    yield taskgen.gen_infigure_chat(unit, rng, sample_id=sid)
            except InfeasibleError:
                continue


def cmd_gen(cfg: PipelineConfig, args) -> int:
    tasks = list(taskgen.TASKS) if args.task == "all" else [args.task]
    for task in tasks:
        if task not in taskgen.TASKS:
            raise UsageError(f"unknown task {task!r}")
    out = _out(cfg) / "gen"
    for task in tasks:
        samples = generate_task(task, cfg, passes=args.passes)
        if args.limit is not None:
            samples = (s for i, s in zip(range(args.limit), samples))
        n = 0
        path = out / f"{task}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for s in samples:
                f.write(taskgen.dumps_record(s) + "\n")
                n += 1
        print(f"{task}: {n} samples -> {path}")
    return EXIT_OK


# -- mix ---------------------------------------------------------------------

def _shared_readers(paths: dict) -> dict:
    """One record iterator per distinct file; keys naming the same file share it,
    so they consume disjoint consecutive slices."""
    opened = {}
    streams = {}
    for key in sorted(paths):
        p = str(paths[key])
        if p not in opened:
            opened[p] = iter(mixer.read_jsonl(p))
        streams[key] = opened[p]
    return streams


def cmd_mix(cfg: PipelineConfig, args) -> int:
    recipe_path = args.recipe or cfg.recipe
    recipe = mixer.DatasetRecipe.load(recipe_path) if recipe_path else mixer.DatasetRecipe()
    if args.scale is not None:
        recipe = recipe.scaled(args.scale)
    if args.seed is not None:
        seed = args.seed
    else:
        seed = recipe.seed if recipe_path else cfg.seed
    gen_dir = _out(cfg) / "gen"
    paths = {}
    for key, n in recipe.counts.items():
        if n == 0:
            continue
        if key in cfg.passthrough:
            paths[key] = cfg.passthrough[key]
            continue
        own = gen_dir / f"{key}.jsonl"
        shared = gen_dir / f"{mixer.SOURCE_TASK.get(key, key)}.jsonl"
        if own.is_file():
            paths[key] = own
        elif shared.is_file():
            paths[key] = shared
    streams = _shared_readers(paths)
    out = _out(cfg) / "mix"
    if args.sft:
        variants = dict(mixer.default_variants())
        variants.update(recipe.variants)
        by_task = {}
        for task in taskgen.TASKS:
            p = gen_dir / f"{task}.jsonl"
            if p.is_file():
                by_task[task] = mixer.read_jsonl(p)
        records, manifest = mixer.sft_sample(by_task, k=args.k, variants=variants, seed=seed)
        mixer.write_jsonl(records, out / "sft.jsonl")
        mixer.write_manifest(manifest, out / "sft_manifest.json")
        print(f"sft: {len(records)} samples, digest {manifest.digest}")
        return EXIT_OK
    records, manifest = mixer.mix(streams, recipe, seed=seed)
    mixer.write_jsonl(records, out / "dataset.jsonl")
    mixer.write_manifest(manifest, out / "manifest.json")
    print(f"mix: {len(records)} samples, digest {manifest.digest}")
    return EXIT_OK


# -- bench -------------------------------------------------------------------

def cmd_bench_build(cfg: PipelineConfig, args) -> int:
    pages = _load_corpus(cfg)
    naturals = _load_naturals(cfg)
    bench_dir = _out(cfg) / "bench"
    splits = harness.build_benchmark(pages, naturals, cfg.bench_config(), cfg.seed,
                                     out_dir=bench_dir, annotator=cfg.make_annotator(),
                                     params=cfg.scale_params())
    digests = harness.write_splits(splits, bench_dir)
    for name, d in digests.items():
        print(f"{name}: {len(splits[name].samples)} samples  {d[:16]}")
    return EXIT_OK


def cmd_bench_eval(cfg: PipelineConfig, args) -> int:
    bench_dir = _out(cfg) / "bench"
    names = list(harness.SPLITS) if args.split == "all" else [args.split]
    preds = harness.load_predictions(args.pred)
    reports = {}
    for name in names:
        path = bench_dir / f"{name}.jsonl"
        if not path.is_file():
            raise DataError(f"{path} not found; run `bench build` first")
        split = harness.load_split(path, name)
        if not split.samples:
            continue
        if args.split == "all" and not split.by_id().keys() & preds.keys():
            continue
        reports[name] = harness.evaluate(split, preds)
    if not reports:
        raise DataError("no split has matching predictions")
    md, doc = harness.render_report(reports)
    print(md)
    report_path = Path(args.report) if args.report else bench_dir / "report.json"
    _write_json(doc, report_path)
    return EXIT_OK


# -- stats -------------------------------------------------------------------

def cmd_stats(cfg: PipelineConfig, args) -> int:
    stats: dict = {}
    cpath = _out(cfg) / "corpus" / "pages.jsonl"
    if cpath.is_file():
        pages = _load_corpus(cfg)
        stats["corpus"] = {
            "pages": len(pages),
            "languages": dict(sorted(Counter(p.language for p in pages).items())),
            "paragraphs": sum(len(p.paragraphs) for p in pages),
            "lines": sum(len(p.lines) for p in pages),
            "long_paragraphs": sum(len(taskgen.long_paragraphs(p)) for p in pages),
        }
    gen_dir = _out(cfg) / "gen"
    if gen_dir.is_dir():
        stats["gen"] = {p.stem: sum(1 for _ in open(p, encoding="utf-8"))
                        for p in sorted(gen_dir.glob("*.jsonl"))}
    dpath = Path(args.dataset) if args.dataset else _out(cfg) / "mix" / "dataset.jsonl"
    if dpath.is_file():
        stats["dataset"] = dict(sorted(Counter(r.get("task", "passthrough")
                                               for r in mixer.read_jsonl(dpath)).items()))
    print(json.dumps(stats, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_demo_corpus(cfg: PipelineConfig, args) -> int:
    paths = synthetic.write_corpus(args.dir, n_en=args.en, n_zh=args.zh,
                                   n_naturals=args.naturals, seed=cfg.seed)
    config = {"pages": [paths["pages"].name], "naturals": [paths["naturals"].name],
              "layouts": [paths["layouts"].name], "out": "out", "seed": cfg.seed}
    _write_json(config, Path(args.dir) / "config.json")
    print(f"wrote synthetic corpus and config.json to {args.dir}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="pipeline config (JSON)")
    common.add_argument("--seed", type=int, help="global seed, overrides config and environment")
    common.add_argument("--workers", type=int, help="worker processes")
    common.add_argument("--out", help="output directory")
    common.add_argument("--limit", type=int, help="process at most N pages / samples")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="docfocus", description="Fine-grained document data engine and benchmark")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("ingest", parents=[common], help="validate and index corpus records")
    sp = sub.add_parser("synth", parents=[common], help="render hybrid pages")
    sp.add_argument("--kind", choices=("interleaved", "color", "both"), default="both")
    sp = sub.add_parser("gen", parents=[common], help="generate task samples as JSONL")
    sp.add_argument("--task", required=True, help="task tag or 'all'")
    sp.add_argument("--passes", type=int, default=1, help="passes over the corpus")
    sp = sub.add_parser("mix", parents=[common], help="assemble a dataset from a recipe")
    sp.add_argument("--recipe", help="recipe JSON")
    sp.add_argument("--scale", type=float, help="multiply every recipe count")
    sp.add_argument("--sft", action="store_true", help="build the SFT subset instead")
    sp.add_argument("--k", type=int, default=mixer.SFT_PER_TASK, help="SFT samples per task")
    bp = sub.add_parser("bench", help="benchmark commands")
    bsub = bp.add_subparsers(dest="bench_command", parser_class=_Parser)
    bsub.required = True
    bsub.add_parser("build", parents=[common], help="build evaluation splits")
    ep = bsub.add_parser("eval", parents=[common], help="score a prediction file")
    ep.add_argument("--split", required=True, help="split name or 'all'")
    ep.add_argument("--pred", required=True, help="predictions JSONL")
    ep.add_argument("--report", help="where to write the JSON report")
    sp = sub.add_parser("stats", parents=[common], help="corpus and dataset summaries")
    sp.add_argument("--dataset", help="dataset JSONL to summarize")
    sp = sub.add_parser("demo-corpus", parents=[common], help="write a synthetic corpus")
    sp.add_argument("dir")
    sp.add_argument("--en", type=int, default=120)
    sp.add_argument("--zh", type=int, default=100)
    sp.add_argument("--naturals", type=int, default=200)
    return p


COMMANDS = {
    "ingest": cmd_ingest, "synth": cmd_synth, "gen": cmd_gen, "mix": cmd_mix,
    "stats": cmd_stats, "demo-corpus": cmd_demo_corpus,
    ("bench", "build"): cmd_bench_build, ("bench", "eval"): cmd_bench_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    key = (args.command, args.bench_command) if args.command == "bench" else args.command
    try:
        cfg = load_config(args.config or os.environ.get(ENV_PREFIX + "CONFIG"), args)
        return COMMANDS[key](cfg, args)
    except UsageError as exc:
        print(f"docfocus: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AnnotatorError as exc:
        print(f"docfocus: annotator failure: {exc}", file=sys.stderr)
        return EXIT_ANNOTATOR
    except (DataError, OSError, ValueError, KeyError) as exc:
        print(f"docfocus: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
