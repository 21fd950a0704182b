"""Position-aware instruction samples and their flat-text conversation format."""

from __future__ import annotations

import json
import random
import re
import subprocess
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .compositor import HybridPage
from .corpus import LayoutRecord, PageRecord, TextBox, char_count
from .errors import (AnnotatorError, ConversationFormatError, InfeasibleError,
                     NoContentError)
from .geometry import GRID, NormBox, PixelBox, line_anchor_point, normalize

TASKS = (
    "foreground_ocr",
    "region_ocr",
    "line_ocr",
    "color_ocr",
    "region_translation",
    "region_summary",
    "layout",
    "figure_caption",
    "infigure_chat",
    "multipage_region_ocr",
    "crosspage_vqa",
    "page_ocr",
    "page_markdown",
)

MAX_PAGES = 8
MAX_ATTEMPTS = 100
LONG_TEXT_CHARS = 400
SUMMARY_CHARS = 160
FOREGROUND_MARGIN = 2

# {BOX} (x1,y1,x2,y2), {POINT} (x,y), {COLOR}, {QUESTION}, {PAGES} "Page 1: (...), ..."
DEFAULT_PROMPTS = {
    "foreground_ocr": "Give the OCR results of the box {BOX}",
    "region_ocr": "Give the OCR results of the box {BOX}",
    "line_ocr": "OCR the line {POINT}",
    "color_ocr": "OCR {COLOR} box",
    "region_translation": "Translate the content of the box {BOX}",
    "region_summary": "Summarize the content of the box {BOX}",
    "layout": "Give the layout of the page",
    "figure_caption": "Give a brief description for the region {BOX} of the image",
    "infigure_chat": "{QUESTION} {BOX}",
    "multipage_region_ocr": "OCR boxes on multiple pages. {PAGES}",
    "crosspage_vqa": "Which page's box contains more characters? {PAGES}",
    "page_ocr": "Give the OCR results of the box {BOX}",
    "page_markdown": "Convert the content of the box {BOX} to markdown",
}

IM_START = "<|im_start|>"
IM_END = "<|im_end|>"
IMAGE_TAG = '<img>"<image>"</img>'
RESERVED = (IM_START, IM_END, "<img>", "</img>", "<image>")


@dataclass(frozen=True)
class Turn:
    role: str
    text: str

    def __post_init__(self):
        if self.role not in ("user", "assistant"):
            raise ConversationFormatError(f"unknown role {self.role!r}")
        if not self.text:
            raise ConversationFormatError("empty turn text")


@dataclass(frozen=True)
class ConversationSample:
    sample_id: str
    task: str
    image_refs: tuple[str, ...]
    turns: tuple[Turn, ...]
    ground_truth: str
    # placeholder values behind each user turn, so prompts can be reworded later
    slots: tuple[dict, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConversationFormatError(f"unknown task {self.task!r}")
        if not self.image_refs:
            raise ConversationFormatError("sample needs at least one image")
        if not self.turns or len(self.turns) % 2:
            raise ConversationFormatError("turns must be non-empty user/assistant pairs")
        for i, t in enumerate(self.turns):
            if t.role != ("user" if i % 2 == 0 else "assistant"):
                raise ConversationFormatError("turns must alternate, user first")

    @property
    def user_turns(self) -> list[Turn]:
        return [t for t in self.turns if t.role == "user"]


def _qa(prompts: Sequence[str], answers: Sequence[str]) -> tuple[Turn, ...]:
    turns = []
    for p, a in zip(prompts, answers):
        turns.append(Turn("user", p))
        turns.append(Turn("assistant", a))
    return tuple(turns)


_PLACEHOLDER = re.compile(r"\{([A-Z]+)\}")


def fill_prompt(template: str, slot: dict) -> str:
    # single pass, so slot values containing "{BOX}" are never re-expanded
    return _PLACEHOLDER.sub(lambda m: str(slot.get(m.group(1), m.group(0))), template)


def _sample(task, sample_id, images, slots, answers, ground_truth=None, template=None):
    template = template or DEFAULT_PROMPTS[task]
    prompts = [fill_prompt(template, s) for s in slots]
    gt = "\n".join(answers) if ground_truth is None else ground_truth
    return ConversationSample(sample_id, task, tuple(images), _qa(prompts, answers), gt,
                              tuple(dict(s) for s in slots))


def _image(page: PageRecord, image_ref: Optional[str]) -> str:
    return image_ref if image_ref is not None else page.image_ref


# -- reading order -----------------------------------------------------------

def reading_order(boxes: Sequence[TextBox]) -> list[TextBox]:
    """Column-aware order: boxes whose x ranges overlap (transitively) form a
    column; columns are read left to right, each top to bottom."""
    n = len(boxes)
    col = list(range(n))

    def find(i):
        while col[i] != i:
            col[i] = col[col[i]]
            i = col[i]
        return i

    by_x = sorted(range(n), key=lambda i: boxes[i].box.x1)
    # sweep over x1; an interval set sorted by start merges with the running max end
    reach = None
    current = None
    for i in by_x:
        b = boxes[i].box
        if current is not None and b.x1 < reach:
            col[find(i)] = find(current)
            reach = max(reach, b.x2)
        else:
            current, reach = i, b.x2
    columns: dict[int, list[int]] = {}
    for i in range(n):
        columns.setdefault(find(i), []).append(i)
    ordered_cols = sorted(columns.values(), key=lambda idx: min(boxes[i].box.x1 for i in idx))
    out = []
    for idx in ordered_cols:
        idx.sort(key=lambda i: (boxes[i].box.y1, boxes[i].box.x1))
        out.extend(boxes[i] for i in idx)
    return out


def page_text(page: PageRecord, sep: str = "\n") -> str:
    boxes = page.paragraphs or page.lines
    return sep.join(t.content for t in reading_order(boxes))


# -- single-page generators --------------------------------------------------

def foreground_box(page: PageRecord) -> NormBox:
    """Normalized hull of all text, pulled inside the [2, 998] margin."""
    if not page.text_boxes:
        raise NoContentError(f"page {page.page_id} has no text")
    hull = normalize(PixelBox.union(t.box for t in page.text_boxes), page.size)
    lo, hi = FOREGROUND_MARGIN, GRID - FOREGROUND_MARGIN

    def clamp(a, b):
        a, b = min(max(a, lo), hi), min(max(b, lo), hi)
        if a == b:
            a, b = (a, b + 1) if b < hi else (a - 1, b)
        return a, b

    x1, x2 = clamp(hull.x1, hull.x2)
    y1, y2 = clamp(hull.y1, hull.y2)
    return NormBox(x1, y1, x2, y2)


def gen_foreground_ocr(page: PageRecord, task: str = "foreground_ocr", full_page: bool = False,
                       image_ref: Optional[str] = None, sample_id: Optional[str] = None,
                       template: Optional[str] = None) -> ConversationSample:
    """Whole-page OCR phrased as OCR of the text-covering box.

    ``full_page`` uses the fixed (2,2,998,998) prompt instead of the text hull.
    ``task`` may be ``page_ocr`` or ``page_markdown``; the latter separates
    paragraphs with blank lines.
    """
    if task not in ("foreground_ocr", "page_ocr", "page_markdown"):
        raise ValueError(f"not a foreground task: {task}")
    if not page.text_boxes:
        raise NoContentError(f"page {page.page_id} has no text")
    box = (NormBox(FOREGROUND_MARGIN, FOREGROUND_MARGIN, GRID - FOREGROUND_MARGIN,
                   GRID - FOREGROUND_MARGIN) if full_page else foreground_box(page))
    text = page_text(page, "\n\n" if task == "page_markdown" else "\n")
    return _sample(task, sample_id or f"{task}:{page.page_id}", [_image(page, image_ref)],
                   [{"BOX": str(box)}], [text], template=template)


def gen_region_ocr(page: PageRecord, rng: random.Random, turns: int = 1,
                   image_ref: Optional[str] = None, sample_id: Optional[str] = None) -> ConversationSample:
    if turns < 1 or len(page.paragraphs) < turns:
        raise NoContentError(
            f"page {page.page_id}: {len(page.paragraphs)} paragraphs, {turns} turns requested")
    picked = rng.sample(list(page.paragraphs), turns)
    slots = [{"BOX": str(normalize(t.box, page.size))} for t in picked]
    return _sample("region_ocr", sample_id or f"region_ocr:{page.page_id}",
                   [_image(page, image_ref)], slots, [t.content for t in picked])


def gen_line_ocr(page: PageRecord, rng: random.Random, turns: int = 1,
                 image_ref: Optional[str] = None, sample_id: Optional[str] = None) -> ConversationSample:
    if not page.lines:
        raise NoContentError(f"page {page.page_id} has no lines")
    picked = rng.sample(list(page.lines), min(turns, len(page.lines)))
    slots = [{"POINT": str(line_anchor_point(t.box, page.size))} for t in picked]
    return _sample("line_ocr", sample_id or f"line_ocr:{page.page_id}",
                   [_image(page, image_ref)], slots, [t.content for t in picked])


def gen_color_ocr(hybrid: HybridPage, rng: random.Random,
                  sample_id: Optional[str] = None) -> ConversationSample:
    if len(hybrid.color_marks) != 3:
        raise NoContentError(f"page {hybrid.base.page_id}: expected 3 color marks")
    marks = list(hybrid.color_marks)
    rng.shuffle(marks)
    slots = [{"COLOR": m.color} for m in marks]
    return _sample("color_ocr", sample_id or f"color_ocr:{hybrid.base.page_id}",
                   [hybrid.composited_image_ref or hybrid.base.image_ref], slots,
                   [m.content for m in marks])


# -- annotators --------------------------------------------------------------

Annotator = Callable[[str, str], str]


class OfflineAnnotator:
    """Deterministic stand-in: translation is identity, summary is a prefix."""

    def __call__(self, task: str, text: str) -> str:
        if task == "translate":
            return text
        if task == "summarize":
            return text[:SUMMARY_CHARS]
        raise AnnotatorError(f"unknown annotation task {task!r}")


class CommandAnnotator:
    """Run an external command per request.

    The request ``{"task": ..., "text": ...}`` goes to stdin as JSON; the
    command must print ``{"text": ...}`` on stdout.
    """

    def __init__(self, command: Sequence[str], timeout: float = 60.0, retries: int = 2):
        if not command:
            raise ValueError("annotator command is empty")
        self.command = list(command)
        self.timeout = timeout
        self.retries = retries

    def __call__(self, task: str, text: str) -> str:
        request = json.dumps({"task": task, "text": text}, ensure_ascii=False)
        last = None
        for _ in range(self.retries + 1):
            try:
                proc = subprocess.run(self.command, input=request, capture_output=True,
                                      text=True, timeout=self.timeout, check=False)
            except (OSError, subprocess.TimeoutExpired) as exc:
                last = exc
                continue
            if proc.returncode != 0:
                last = f"exit status {proc.returncode}: {proc.stderr.strip()[:200]}"
                continue
            try:
                out = json.loads(proc.stdout)["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                last = f"bad response: {exc}"
                continue
            if not isinstance(out, str) or not out.strip():
                last = "empty annotation"
                continue
            return out
        raise AnnotatorError(f"annotator {self.command[0]} failed: {last}")


def long_paragraphs(page: PageRecord) -> list[TextBox]:
    return [t for t in page.paragraphs if char_count(t.content) > LONG_TEXT_CHARS]


def gen_region_annotation(page: PageRecord, annotator: Annotator, kind: str, rng: random.Random,
                          image_ref: Optional[str] = None,
                          sample_id: Optional[str] = None) -> ConversationSample:
    if kind not in ("translation", "summary"):
        raise ValueError(f"unknown annotation kind {kind!r}")
    task = "region_translation" if kind == "translation" else "region_summary"
    candidates = long_paragraphs(page)
    if not candidates:
        raise NoContentError(f"page {page.page_id}: no paragraph over {LONG_TEXT_CHARS} chars")
    t = rng.choice(candidates)
    answer = annotator("translate" if kind == "translation" else "summarize", t.content)
    if not isinstance(answer, str) or not answer.strip():
        raise AnnotatorError("annotator returned empty text")
    return _sample(task, sample_id or f"{task}:{page.page_id}", [_image(page, image_ref)],
                   [{"BOX": str(normalize(t.box, page.size))}], [answer])


def gen_layout(page: PageRecord, layout: LayoutRecord, image_ref: Optional[str] = None,
               sample_id: Optional[str] = None) -> ConversationSample:
    if not layout.elements:
        raise NoContentError(f"page {page.page_id}: empty layout")
    items = [(normalize(e.box, page.size), e.label) for e in layout.elements]
    items.sort(key=lambda it: (it[0].y1, it[0].x1))
    answer = "\n".join(f"{label}: {box}" for box, label in items)
    return _sample("layout", sample_id or f"layout:{page.page_id}", [_image(page, image_ref)],
                   [{}], [answer])


# -- figure tasks ------------------------------------------------------------

def _hybrid_image(h: HybridPage) -> str:
    return h.composited_image_ref or h.base.image_ref


def gen_figure_caption(hybrid: HybridPage, sample_id: Optional[str] = None) -> ConversationSample:
    if not hybrid.placements:
        raise NoContentError(f"page {hybrid.base.page_id}: no figure placement")
    p = hybrid.placements[0]
    return _sample("figure_caption", sample_id or f"figure_caption:{hybrid.base.page_id}",
                   [_hybrid_image(hybrid)], [{"BOX": str(normalize(p.target, hybrid.base.size))}],
                   [p.caption])


def remap_box(box: PixelBox, natural_w: int, natural_h: int, target: PixelBox,
              scaled_w: int, scaled_h: int) -> PixelBox:
    """Carry a box from natural-image pixels to page pixels via the paste transform."""
    return PixelBox(target.x1 + box.x1 * scaled_w / natural_w,
                    target.y1 + box.y1 * scaled_h / natural_h,
                    target.x1 + box.x2 * scaled_w / natural_w,
                    target.y1 + box.y2 * scaled_h / natural_h)


def gen_infigure_chat(hybrid: HybridPage, rng: random.Random,
                      sample_id: Optional[str] = None) -> ConversationSample:
    if not hybrid.placements or not hybrid.placements[0].natural.region_dialogs:
        raise NoContentError(f"page {hybrid.base.page_id}: no region dialogs")
    p = hybrid.placements[0]
    dialogs = list(p.natural.region_dialogs)
    rng.shuffle(dialogs)
    slots = []
    for d in dialogs:
        page_box = remap_box(d.box, p.natural.size.width, p.natural.size.height, p.target,
                             p.scaled_size.width, p.scaled_size.height)
        slots.append({"QUESTION": d.question, "BOX": str(normalize(page_box, hybrid.base.size))})
    return _sample("infigure_chat", sample_id or f"infigure_chat:{hybrid.base.page_id}",
                   [_hybrid_image(hybrid)], slots, [d.answer for d in dialogs])


# -- multi-page generators ---------------------------------------------------

def _check_bundle(pages: Sequence[PageRecord]) -> None:
    if not 2 <= len(pages) <= MAX_PAGES:
        raise ValueError(f"multi-page samples take 2..{MAX_PAGES} pages, got {len(pages)}")
    for p in pages:
        if not p.paragraphs:
            raise NoContentError(f"page {p.page_id} has no paragraphs")


def _pages_slot(pages: Sequence[PageRecord], picked: Sequence[TextBox]) -> str:
    return ", ".join(f"Page {k}: {normalize(t.box, p.size)}"
                     for k, (p, t) in enumerate(zip(pages, picked), 1))


def _bundle_id(task: str, pages: Sequence[PageRecord]) -> str:
    return f"{task}:" + "+".join(p.page_id for p in pages)


def gen_multipage_region_ocr(pages: Sequence[PageRecord], rng: random.Random,
                             image_refs: Optional[Sequence[str]] = None,
                             sample_id: Optional[str] = None) -> ConversationSample:
    _check_bundle(pages)
    picked = [rng.choice(p.paragraphs) for p in pages]
    answer = "\n".join(f"Page {k}: {t.content}" for k, t in enumerate(picked, 1))
    images = list(image_refs) if image_refs is not None else [p.image_ref for p in pages]
    return _sample("multipage_region_ocr", sample_id or _bundle_id("multipage_region_ocr", pages),
                   images, [{"PAGES": _pages_slot(pages, picked)}], [answer])


def gen_crosspage_vqa(pages: Sequence[PageRecord], rng: random.Random,
                      image_refs: Optional[Sequence[str]] = None,
                      sample_id: Optional[str] = None) -> ConversationSample:
    """Ask which page's box holds the most characters; ties are resampled."""
    _check_bundle(pages)
    for _ in range(MAX_ATTEMPTS):
        picked = [rng.choice(p.paragraphs) for p in pages]
        counts = [char_count(t.content) for t in picked]
        best = max(counts)
        if counts.count(best) == 1:
            break
    else:
        raise InfeasibleError("cannot sample boxes with a unique character-count maximum")
    label = f"Page {counts.index(best) + 1}"
    images = list(image_refs) if image_refs is not None else [p.image_ref for p in pages]
    return _sample("crosspage_vqa", sample_id or _bundle_id("crosspage_vqa", pages),
                   images, [{"PAGES": _pages_slot(pages, picked)}], [label])


# -- wire format -------------------------------------------------------------

def _check_text(text: str) -> None:
    for token in RESERVED:
        if token in text:
            raise ConversationFormatError(f"turn text contains reserved token {token!r}")


def serialize_conversation(sample: ConversationSample) -> str:
    """Render turns in the flat chat template, one image tag per image on the first user turn."""
    parts = []
    for i, t in enumerate(sample.turns):
        _check_text(t.text)
        if t.role == "user":
            tags = IMAGE_TAG * len(sample.image_refs) + " " if i == 0 else ""
            parts.append(f'{IM_START}user: {tags}"{t.text}"{IM_END}')
        else:
            parts.append(f'{IM_START}assistant: "{t.text}" {IM_END}')
    return " ".join(parts)


def parse_conversation(rendered: str) -> tuple[int, tuple[Turn, ...]]:
    """Inverse of ``serialize_conversation``: (number of images, turns)."""
    chunks = rendered.split(IM_END)
    if chunks[-1] != "":
        raise ConversationFormatError("trailing text after last turn")
    turns = []
    n_images = 0
    for i, chunk in enumerate(chunks[:-1]):
        if i > 0:
            if not chunk.startswith(" "):
                raise ConversationFormatError("turns must be separated by one space")
            chunk = chunk[1:]
        if chunk.startswith(IM_START + "user: "):
            body = chunk[len(IM_START + "user: "):]
            if i == 0:
                while body.startswith(IMAGE_TAG):
                    n_images += 1
                    body = body[len(IMAGE_TAG):]
                if not n_images or not body.startswith(" "):
                    raise ConversationFormatError("first user turn must carry image tags")
                body = body[1:]
            if len(body) < 3 or body[0] != '"' or body[-1] != '"':
                raise ConversationFormatError(f"malformed user turn {chunk[:40]!r}")
            turns.append(Turn("user", body[1:-1]))
        elif chunk.startswith(IM_START + "assistant: "):
            body = chunk[len(IM_START + "assistant: "):]
            if len(body) < 4 or body[0] != '"' or not body.endswith('" '):
                raise ConversationFormatError(f"malformed assistant turn {chunk[:40]!r}")
            turns.append(Turn("assistant", body[1:-2]))
        else:
            raise ConversationFormatError(f"unknown turn header in {chunk[:40]!r}")
    return n_images, tuple(turns)


def to_record(sample: ConversationSample) -> dict:
    return {
        "id": sample.sample_id,
        "task": sample.task,
        "images": list(sample.image_refs),
        "conversation": [{"role": t.role, "text": t.text} for t in sample.turns],
        "ground_truth": sample.ground_truth,
        "rendered": serialize_conversation(sample),
        "slots": [dict(s) for s in sample.slots],
    }


def from_record(record: dict) -> ConversationSample:
    try:
        return ConversationSample(
            record["id"], record["task"], tuple(record["images"]),
            tuple(Turn(t["role"], t["text"]) for t in record["conversation"]),
            record["ground_truth"], tuple(record.get("slots", ())))
    except (KeyError, TypeError) as exc:
        raise ConversationFormatError(f"bad sample record: {exc}") from None


def dumps_record(sample_or_record) -> str:
    rec = to_record(sample_or_record) if isinstance(sample_or_record, ConversationSample) else sample_or_record
    return json.dumps(rec, ensure_ascii=False, sort_keys=True)
