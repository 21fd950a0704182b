"""Recipe-driven dataset assembly for pre-training and SFT."""

from __future__ import annotations

import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from itertools import islice
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .compositor import derive_rng
from .errors import DuplicateIdError, MissingSourceError, SchemaError
from .taskgen import (DEFAULT_PROMPTS, TASKS, ConversationSample, _PLACEHOLDER,
                      dumps_record, fill_prompt, from_record, serialize_conversation,
                      to_record)

log = logging.getLogger(__name__)

N_VARIANTS = 10
SFT_PER_TASK = 10_000

# Per-source sample counts of the pre-training mix. Keys that are task tags
# come from the generators; the rest are external, already formatted streams.
PRETRAIN_COUNTS = {
    "figure_caption_blip558k": 558_000,
    "figure_caption_laion_coco": 1_000_000,
    "infigure_chat": 22_000,
    "foreground_ocr": 1_000_000,
    "region_ocr": 1_000_000,
    "line_ocr": 600_000,
    "color_ocr": 1_000_000,
    "region_translation": 500_000,
    "region_summary": 500_000,
    "multipage_region_ocr": 400_000,
    "crosspage_vqa": 400_000,
    "layout_publaynet": 33_000,
    "layout_paddleocr": 1_000_000,
    "caption_laion_coco": 500_000,
    "nlp_alpaca": 52_000,
    "nlp_baize": 112_000,
    "nlp_sharegpt": 125_000,
    "page_ocr": 1_000_000,
    "page_markdown": 1_000_000,
}

SOURCE_TASK = {
    "figure_caption_blip558k": "figure_caption",
    "figure_caption_laion_coco": "figure_caption",
    "layout_publaynet": "layout",
    "layout_paddleocr": "layout",
    **{t: t for t in TASKS},
}


@dataclass
class DatasetRecipe:
    counts: dict[str, int] = field(default_factory=lambda: dict(PRETRAIN_COUNTS))
    seed: int = 0
    # 0 shuffles the whole index at once; N > 0 streams through an N-slot buffer
    shuffle_buffer: int = 0
    variants: dict[str, list[str]] = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.counts.items():
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise SchemaError(f"recipe count for {k!r} must be a non-negative int, got {v!r}")
        if self.shuffle_buffer < 0:
            raise SchemaError("shuffle_buffer must be >= 0")

    def scaled(self, factor) -> "DatasetRecipe":
        f = Fraction(str(factor)) if isinstance(factor, float) else Fraction(factor)
        return DatasetRecipe({k: int(v * f) for k, v in self.counts.items()}, self.seed,
                             self.shuffle_buffer, dict(self.variants))

    @classmethod
    def from_json(cls, blob) -> "DatasetRecipe":
        if isinstance(blob, (str, bytes)):
            blob = json.loads(blob)
        if not isinstance(blob, dict) or "counts" not in blob:
            raise SchemaError("recipe must be an object with a 'counts' map")
        seed = blob.get("seed", 0)
        if not isinstance(seed, int):
            raise SchemaError("recipe seed must be an int")
        variants = blob.get("variants") or {}
        for task, items in variants.items():
            check_variants(task, items)
        return cls(dict(blob["counts"]), seed, int(blob.get("shuffle_buffer", 0)), dict(variants))

    @classmethod
    def load(cls, path) -> "DatasetRecipe":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass
class MixManifest:
    seed: int
    targets: dict[str, int]
    achieved: dict[str, int]
    digest: str
    shortfalls: dict[str, int] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "targets": dict(sorted(self.targets.items())),
                "achieved": dict(sorted(self.achieved.items())), "digest": self.digest,
                "shortfalls": dict(sorted(self.shortfalls.items())), "notes": list(self.notes)}


def _as_record(item) -> dict:
    if isinstance(item, ConversationSample):
        return to_record(item)
    if not isinstance(item, dict) or "id" not in item:
        raise SchemaError("stream items must be samples or records with an 'id'")
    return item


def stream_digest(records: Iterable[dict]) -> str:
    h = hashlib.sha256()
    for r in records:
        h.update(dumps_record(r).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _buffer_shuffle(items: list, rng: random.Random, size: int) -> list:
    buf, out = [], []
    for it in items:
        buf.append(it)
        if len(buf) >= size:
            out.append(buf.pop(rng.randrange(len(buf))))
    while buf:
        out.append(buf.pop(rng.randrange(len(buf))))
    return out


def mix(sources: Mapping[str, Iterable], recipe: DatasetRecipe,
        seed: Optional[int] = None) -> tuple[list[dict], MixManifest]:
    """Take up to the target count from each source and interleave them in one seeded shuffle.

    Each source is read once (single epoch); a sample id seen twice is an error.
    """
    seed = recipe.seed if seed is None else seed
    missing = [k for k, n in recipe.counts.items() if n > 0 and k not in sources]
    if missing:
        raise MissingSourceError(f"no source for recipe entries: {', '.join(sorted(missing))}")
    taken: list[dict] = []
    achieved, shortfalls = {}, {}
    seen: set[str] = set()
    for key in sorted(recipe.counts):
        target = recipe.counts[key]
        if target == 0:
            continue
        got = 0
        for item in islice(sources[key], target):
            rec = _as_record(item)
            if rec["id"] in seen:
                raise DuplicateIdError(f"sample {rec['id']!r} appears twice in the mix")
            seen.add(rec["id"])
            taken.append(rec)
            got += 1
        achieved[key] = got
        if got < target:
            shortfalls[key] = target - got
            log.warning("source %s short by %d samples", key, target - got)
    rng = random.Random(seed)
    if recipe.shuffle_buffer:
        out = _buffer_shuffle(taken, rng, recipe.shuffle_buffer)
    else:
        order = list(range(len(taken)))
        rng.shuffle(order)  # Fisher-Yates
        out = [taken[i] for i in order]
    manifest = MixManifest(seed, dict(recipe.counts), achieved, stream_digest(out), shortfalls)
    return out, manifest


# -- SFT ---------------------------------------------------------------------

def default_variants() -> dict[str, list[str]]:
    text = resources.files("docfocus").joinpath("data/variants.json").read_text(encoding="utf-8")
    return json.loads(text)


def check_variants(task: str, items) -> None:
    if not isinstance(items, list) or len(items) != N_VARIANTS:
        raise SchemaError(f"task {task!r} needs exactly {N_VARIANTS} prompt variants")
    if task in DEFAULT_PROMPTS:
        want = set(_PLACEHOLDER.findall(DEFAULT_PROMPTS[task]))
        for v in items:
            if not isinstance(v, str) or set(_PLACEHOLDER.findall(v)) != want:
                raise SchemaError(f"variant {v!r} for {task!r} must use placeholders {sorted(want)}")


def reword(record: dict, variants: list[str], rng: random.Random) -> dict:
    """Swap every user prompt for a random variant, keeping its slot values verbatim."""
    slots = record.get("slots") or []
    conv = [dict(t) for t in record["conversation"]]
    users = [t for t in conv if t["role"] == "user"]
    if len(slots) != len(users):
        return dict(record)
    for turn, slot in zip(users, slots):
        turn["text"] = fill_prompt(rng.choice(variants), slot)
    out = dict(record)
    out["conversation"] = conv
    out["rendered"] = serialize_conversation(from_record(out))
    return out


def sft_sample(streams: Mapping[str, Iterable], k: int = SFT_PER_TASK,
               variants: Optional[Mapping[str, list[str]]] = None,
               seed: int = 0) -> tuple[list[dict], MixManifest]:
    """Draw ``k`` samples per task without replacement and diversify their prompts.

    Records whose task has no variant list pass through with their prompt intact.
    """
    variants = default_variants() if variants is None else variants
    for task, items in variants.items():
        check_variants(task, items)
    out = []
    achieved, shortfalls = {}, {}
    notes = []
    for key in sorted(streams):
        pool = [_as_record(x) for x in streams[key]]
        rng = derive_rng(seed, "sft", key)
        picked = rng.sample(pool, min(k, len(pool)))
        task = SOURCE_TASK.get(key, key)
        for rec in picked:
            if task in variants:
                rec = reword(rec, variants[task], rng)
            out.append(rec)
        achieved[key] = len(picked)
        if len(pool) < k:
            shortfalls[key] = k - len(pool)
            notes.append(f"{key}: only {len(pool)} source samples, took all")
    manifest = MixManifest(seed, {key: k for key in streams}, achieved, stream_digest(out),
                           shortfalls, notes)
    return out, manifest


def write_jsonl(records: Iterable[dict], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for r in records:
            f.write(dumps_record(r) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_manifest(manifest: MixManifest, path) -> None:
    Path(path).write_text(json.dumps(manifest.to_dict(), indent=1, sort_keys=True) + "\n",
                          encoding="utf-8")
