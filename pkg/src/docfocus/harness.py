"""Benchmark construction, prediction scoring and table rendering."""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .compositor import (HybridPage, ScaleParams, choose_color_marks, derive_rng, place_figure,
                         synthesize_color, synthesize_interleaved)
from .corpus import NaturalImageRecord, PageRecord
from .errors import DataError, InfeasibleError, SchemaError
from .metrics import MetricReport, score_pairs
from .taskgen import (ConversationSample, OfflineAnnotator, dumps_record, from_record,
                      gen_color_ocr, gen_crosspage_vqa, gen_figure_caption, gen_foreground_ocr,
                      gen_line_ocr, gen_multipage_region_ocr, gen_region_annotation,
                      gen_region_ocr, long_paragraphs)

SPLITS = ("en_page", "zh_page", "color", "region", "line", "translation", "summary",
          "caption", "multipage_ocr", "crosspage_vqa")

SPLIT_SUITE = {
    "en_page": "ocr", "zh_page": "ocr", "color": "ocr", "region": "ocr", "line": "ocr",
    "multipage_ocr": "ocr", "translation": "translation", "summary": "summary",
    "caption": "caption", "crosspage_vqa": "vqa",
}

COLUMN_FIELDS = {
    "Edit Distance": "edit_distance",
    "F1-score": "f1",
    "Precision": "precision",
    "Recall": "recall",
    "BLEU": "bleu",
    "METEOR": "meteor",
    "ROUGE-L R": "rouge_l_r",
    "ROUGE-L P": "rouge_l_p",
    "ROUGE-L F": "rouge_l_f",
    "Accuracy": "accuracy",
}

# column order of each results table; split -> table
TABLE_COLUMNS = {
    "page_ocr": ["Edit Distance", "F1-score", "Precision", "Recall", "BLEU", "METEOR"],
    "translation": ["BLEU", "METEOR"],
    "summary": ["ROUGE-L R", "ROUGE-L P", "ROUGE-L F"],
    "caption": ["METEOR", "ROUGE-L F"],
    "multipage": ["Edit Distance", "F1-score", "BLEU", "METEOR"],
    "vqa": ["Accuracy"],
}
SPLIT_TABLE = {
    "en_page": "page_ocr", "zh_page": "page_ocr", "color": "page_ocr", "region": "page_ocr",
    "line": "page_ocr", "translation": "translation", "summary": "summary",
    "caption": "caption", "multipage_ocr": "multipage", "crosspage_vqa": "vqa",
}
TABLE_ORDER = ("page_ocr", "translation", "summary", "caption", "multipage", "vqa")

BENCH_MIN_WORDS = 1000


class InsufficientCorpusError(DataError):
    pass


@dataclass(frozen=True)
class BenchmarkConfig:
    en_pages: int = 112
    zh_pages: int = 100
    caption_pages: int = 200
    bundles: int = 50
    bundle_size: int = 8
    # only pages with more than this many words are eligible
    min_words: int = BENCH_MIN_WORDS


@dataclass
class BenchmarkSplit:
    name: str
    samples: list[ConversationSample]

    def __post_init__(self):
        if self.name not in SPLITS:
            raise SchemaError(f"unknown split {self.name!r}")

    def digest(self) -> str:
        h = hashlib.sha256()
        for s in self.samples:
            h.update(dumps_record(s).encode("utf-8") + b"\n")
        return h.hexdigest()

    def by_id(self) -> dict[str, ConversationSample]:
        return {s.sample_id: s for s in self.samples}


def word_count(page: PageRecord) -> int:
    """Whitespace words for Latin text; each non-space character for Chinese."""
    boxes = page.paragraphs or page.lines
    if page.language == "zh":
        return sum(1 for t in boxes for ch in t.content if not ch.isspace())
    return sum(len(t.content.split()) for t in boxes)


def _pick(pages: Sequence, n: int, rng: random.Random, what: str) -> list:
    if len(pages) < n:
        raise InsufficientCorpusError(f"need {n} {what}, corpus has {len(pages)}")
    return rng.sample(list(pages), n)


def _rel(path: Path, root: Optional[Path]) -> str:
    return path.relative_to(root).as_posix() if root is not None else path.as_posix()


def build_benchmark(pages: Sequence[PageRecord], naturals: Sequence[NaturalImageRecord],
                    config: BenchmarkConfig = BenchmarkConfig(), seed: int = 0,
                    out_dir=None, annotator=None,
                    params: ScaleParams = ScaleParams()) -> dict[str, BenchmarkSplit]:
    """Assemble every evaluation split from a page corpus and natural images.

    With ``out_dir`` set, color-marked and figure-pasted pages are rendered
    there as PNGs and samples reference them by path relative to ``out_dir``;
    otherwise samples reference the original page images.
    """
    annotator = annotator or OfflineAnnotator()
    root = Path(out_dir) if out_dir is not None else None
    pages = sorted(pages, key=lambda p: p.page_id)
    eligible = [p for p in pages if p.paragraphs and word_count(p) > config.min_words]
    rng = derive_rng(seed, "benchmark")
    en = sorted(_pick([p for p in eligible if p.language == "en"], config.en_pages, rng,
                      "English pages"), key=lambda p: p.page_id)
    zh = sorted(_pick([p for p in eligible if p.language == "zh"], config.zh_pages, rng,
                      "Chinese pages"), key=lambda p: p.page_id)
    bench_pages = en + zh

    splits: dict[str, list[ConversationSample]] = {name: [] for name in SPLITS}
    for name, group in (("en_page", en), ("zh_page", zh)):
        for p in group:
            splits[name].append(gen_foreground_ocr(p, full_page=True, sample_id=f"{name}:{p.page_id}"))

    for p in bench_pages:
        r = derive_rng(seed, "bench-region", p.page_id)
        splits["region"].append(gen_region_ocr(p, r, sample_id=f"region:{p.page_id}"))
        if p.lines:
            r = derive_rng(seed, "bench-line", p.page_id)
            splits["line"].append(gen_line_ocr(p, r, sample_id=f"line:{p.page_id}"))
        if long_paragraphs(p):
            for kind, split in (("translation", "translation"), ("summary", "summary")):
                r = derive_rng(seed, f"bench-{kind}", p.page_id)
                splits[split].append(gen_region_annotation(p, annotator, kind, r,
                                                           sample_id=f"{split}:{p.page_id}"))
        try:
            hybrid = _color_hybrid(p, seed, root)
        except InfeasibleError:
            continue
        r = derive_rng(seed, "bench-color", p.page_id)
        splits["color"].append(gen_color_ocr(hybrid, r, sample_id=f"color:{p.page_id}"))

    cap_pages = sorted(_pick(eligible, config.caption_pages, rng, "caption pages"),
                       key=lambda p: p.page_id)
    nats = _pick(sorted(naturals, key=lambda n: n.image_id), config.caption_pages, rng,
                 "natural images")
    for p, nat in zip(cap_pages, nats):
        hybrid = _interleaved_hybrid(p, nat, seed, root, params)
        splits["caption"].append(gen_figure_caption(hybrid, sample_id=f"caption:{p.page_id}"))

    for b in range(config.bundles):
        bundle = _pick(bench_pages, config.bundle_size, rng, "bundle pages")
        r = derive_rng(seed, "bench-multipage", b)
        splits["multipage_ocr"].append(gen_multipage_region_ocr(bundle, r, sample_id=f"multipage_ocr:{b:05d}"))
        r = derive_rng(seed, "bench-crosspage", b)
        splits["crosspage_vqa"].append(gen_crosspage_vqa(bundle, r, sample_id=f"crosspage_vqa:{b:05d}"))

    return {name: BenchmarkSplit(name, samples) for name, samples in splits.items()}


def _color_hybrid(page: PageRecord, seed: int, root: Optional[Path]) -> HybridPage:
    if root is None:
        marks = choose_color_marks(page, derive_rng(seed, "color", page.page_id))
        return HybridPage(page, (), marks, page.text_boxes, page.image_ref)
    png = root / "images" / "color" / f"{page.page_id}.png"
    hybrid, _ = synthesize_color(page, seed, page.image_ref, png)
    return HybridPage(hybrid.base, hybrid.placements, hybrid.color_marks,
                      hybrid.surviving_boxes, _rel(png, root))


def _interleaved_hybrid(page: PageRecord, nat: NaturalImageRecord, seed: int,
                        root: Optional[Path], params: ScaleParams) -> HybridPage:
    if root is None:
        placement, surviving = place_figure(page, nat, derive_rng(seed, "interleaved", page.page_id), params)
        return HybridPage(page, (placement,), (), surviving, page.image_ref)
    png = root / "images" / "caption" / f"{page.page_id}.png"
    hybrid, _ = synthesize_interleaved(page, nat, seed, page.image_ref, nat.image_ref, png, params)
    return HybridPage(hybrid.base, hybrid.placements, (), hybrid.surviving_boxes, _rel(png, root))


def write_splits(splits: Mapping[str, BenchmarkSplit], out_dir) -> dict[str, str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name in SPLITS:
        if name not in splits:
            continue
        split = splits[name]
        with open(out / f"{name}.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for s in split.samples:
                f.write(dumps_record(s) + "\n")
        digests[name] = split.digest()
    manifest = {"splits": {n: {"samples": len(splits[n].samples), "digest": d}
                           for n, d in digests.items()}}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return digests


def load_split(path, name: Optional[str] = None) -> BenchmarkSplit:
    path = Path(path)
    name = name or path.stem
    with open(path, encoding="utf-8") as f:
        samples = [from_record(json.loads(line)) for line in f if line.strip()]
    return BenchmarkSplit(name, samples)


def load_predictions(path) -> dict[str, str]:
    preds = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                preds[str(row["id"])] = str(row["prediction"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise SchemaError(f"{path}:{lineno}: bad prediction row: {exc}") from None
    return preds


def evaluate(split: BenchmarkSplit, predictions: Mapping[str, str]) -> MetricReport:
    """Score predictions against the split's ground truth.

    Samples without a prediction count as empty answers.
    """
    ids = split.by_id()
    if not ids.keys() & predictions.keys():
        raise SchemaError(f"no prediction ids match split {split.name}")
    pairs = []
    missing = 0
    for sid in sorted(ids):
        pred = predictions.get(sid)
        if pred is None:
            missing += 1
            pred = ""
        pairs.append((pred, ids[sid].ground_truth))
    return score_pairs(pairs, SPLIT_SUITE[split.name], missing=missing)


def _fmt(v) -> str:
    return "-" if v is None else f"{v:.3f}"


def report_json(reports: Mapping[str, MetricReport]) -> dict:
    tables = []
    for table in TABLE_ORDER:
        rows = [{"split": name, "metrics": reports[name].to_dict()}
                for name in SPLITS if name in reports and SPLIT_TABLE[name] == table]
        if rows:
            tables.append({"table": table, "columns": list(TABLE_COLUMNS[table]), "rows": rows})
    return {"tables": tables}


def markdown_from_json(doc: dict) -> str:
    out = []
    for t in doc["tables"]:
        cols = t["columns"]
        out.append("| Split | " + " | ".join(cols) + " | Samples |")
        out.append("|" + "---|" * (len(cols) + 2))
        for row in t["rows"]:
            m = row["metrics"]
            vals = [_fmt(m.get(COLUMN_FIELDS[c])) for c in cols]
            out.append(f"| {row['split']} | " + " | ".join(vals) + f" | {m.get('samples', 0)} |")
        out.append("")
    return "\n".join(out)


def render_report(reports: Mapping[str, MetricReport]) -> tuple[str, dict]:
    """Markdown tables (one per results table, splits as rows) and the JSON they derive from."""
    if not reports:
        raise ValueError("no reports to render")
    doc = report_json(reports)
    return markdown_from_json(doc), doc
