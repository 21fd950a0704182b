"""Parsed document pages, natural images and layout records.

Records arrive as JSON (one object per file) or JSONL produced by an upstream
PDF parser; this module validates them and keeps an index by id.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .errors import DuplicateIdError, EmptyContentError, OutOfBoundsError, SchemaError
from .geometry import PageSize, PixelBox

LANGUAGES = ("en", "zh", "mixed")
OVERHANG_TOLERANCE = 2


@dataclass(frozen=True)
class TextBox:
    box: PixelBox
    content: str
    kind: str = "paragraph"

    def __post_init__(self):
        if self.kind not in ("paragraph", "line"):
            raise SchemaError(f"unknown text box kind {self.kind!r}")
        if not self.content.strip():
            raise EmptyContentError("text box content is empty")


@dataclass(frozen=True)
class PageRecord:
    page_id: str
    image_ref: str
    size: PageSize
    paragraphs: tuple[TextBox, ...] = ()
    lines: tuple[TextBox, ...] = ()
    language: str = "en"

    @property
    def text_boxes(self) -> tuple[TextBox, ...]:
        return self.paragraphs + self.lines


@dataclass(frozen=True)
class RegionDialog:
    box: PixelBox
    question: str
    answer: str


@dataclass(frozen=True)
class NaturalImageRecord:
    image_id: str
    image_ref: str
    size: PageSize
    caption: str
    region_dialogs: tuple[RegionDialog, ...] = ()


@dataclass(frozen=True)
class LayoutElement:
    label: str
    box: PixelBox


@dataclass(frozen=True)
class LayoutRecord:
    page_id: str
    elements: tuple[LayoutElement, ...]


# -- parsing helpers ---------------------------------------------------------

def _require(blob: dict, key: str, kind, what: str):
    if key not in blob:
        raise SchemaError(f"{what}: missing field {key!r}")
    value = blob[key]
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{what}: field {key!r} must be int")
    if not isinstance(value, kind):
        raise SchemaError(f"{what}: field {key!r} has type {type(value).__name__}")
    return value


def _parse_size(blob: dict, what: str) -> PageSize:
    w = _require(blob, "width", int, what)
    h = _require(blob, "height", int, what)
    if w < 1 or h < 1:
        raise SchemaError(f"{what}: non-positive size {w}x{h}")
    return PageSize(w, h)


def _parse_bbox(raw, size: PageSize, what: str) -> PixelBox:
    """Validate a [x1, y1, x2, y2] list, clamping overhang of at most 2 px."""
    if not isinstance(raw, (list, tuple)) or len(raw) != 4:
        raise SchemaError(f"{what}: bbox must be a list of 4 numbers")
    if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw):
        raise SchemaError(f"{what}: bbox must be numeric")
    x1, y1, x2, y2 = raw
    if not (x1 < x2 and y1 < y2):
        raise SchemaError(f"{what}: inverted or empty bbox {list(raw)}")
    over = max(-x1, -y1, x2 - size.width, y2 - size.height)
    if over > OVERHANG_TOLERANCE:
        raise OutOfBoundsError(f"{what}: bbox {list(raw)} overhangs page by {over}px")
    if over > 0:
        x1, y1 = max(x1, 0), max(y1, 0)
        x2, y2 = min(x2, size.width), min(y2, size.height)
        if not (x1 < x2 and y1 < y2):
            raise OutOfBoundsError(f"{what}: bbox {list(raw)} vanishes after clamping")
    return PixelBox(x1, y1, x2, y2)


def _parse_text_boxes(items, size: PageSize, kind: str, what: str) -> tuple[TextBox, ...]:
    if not isinstance(items, list):
        raise SchemaError(f"{what}: {kind}s must be a list")
    out = []
    for i, item in enumerate(items):
        where = f"{what} {kind}[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: expected object")
        text = _require(item, "text", str, where)
        box = _parse_bbox(item.get("bbox"), size, where)
        if not text.strip():
            raise EmptyContentError(f"{where}: empty text")
        out.append(TextBox(box, text, kind))
    return tuple(out)


def _resolve(ref: str, base_dir: Optional[Path]) -> Path:
    p = Path(ref)
    if not p.is_absolute() and base_dir is not None:
        p = base_dir / p
    return p


def ingest_page(record_blob, base_dir=None, check_image: bool = True) -> PageRecord:
    """Validate one page-record blob (JSON text or an already-decoded dict)."""
    if isinstance(record_blob, (str, bytes)):
        try:
            record_blob = json.loads(record_blob)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"page record is not valid JSON: {exc}") from None
    if not isinstance(record_blob, dict):
        raise SchemaError("page record must be a JSON object")
    page_id = _require(record_blob, "page_id", str, "page")
    what = f"page {page_id}"
    if not page_id:
        raise SchemaError("page: empty page_id")
    image = _require(record_blob, "image", str, what)
    size = _parse_size(record_blob, what)
    language = record_blob.get("language", "en")
    if language not in LANGUAGES:
        raise SchemaError(f"{what}: unknown language {language!r}")
    paragraphs = _parse_text_boxes(record_blob.get("paragraphs", []), size, "paragraph", what)
    lines = _parse_text_boxes(record_blob.get("lines", []), size, "line", what)
    if check_image:
        path = _resolve(image, Path(base_dir) if base_dir is not None else None)
        if not path.is_file():
            raise SchemaError(f"{what}: image file not found: {path}")
    return PageRecord(page_id, image, size, paragraphs, lines, language)


def _bbox_list(box: PixelBox) -> list:
    return [box.x1, box.y1, box.x2, box.y2]


def page_to_blob(page: PageRecord) -> dict:
    return {
        "page_id": page.page_id,
        "image": page.image_ref,
        "width": page.size.width,
        "height": page.size.height,
        "language": page.language,
        "paragraphs": [{"bbox": _bbox_list(t.box), "text": t.content} for t in page.paragraphs],
        "lines": [{"bbox": _bbox_list(t.box), "text": t.content} for t in page.lines],
    }


def ingest_natural(blob, base_dir=None, check_image: bool = True) -> NaturalImageRecord:
    if isinstance(blob, (str, bytes)):
        blob = json.loads(blob)
    if not isinstance(blob, dict):
        raise SchemaError("natural-image record must be a JSON object")
    image_id = _require(blob, "image_id", str, "natural image")
    what = f"natural image {image_id}"
    image = _require(blob, "image", str, what)
    size = _parse_size(blob, what)
    caption = _require(blob, "caption", str, what)
    if not caption.strip():
        raise EmptyContentError(f"{what}: empty caption")
    dialogs = []
    for i, d in enumerate(blob.get("region_dialogs") or []):
        where = f"{what} dialog[{i}]"
        if not isinstance(d, dict):
            raise SchemaError(f"{where}: expected object")
        q = _require(d, "q", str, where)
        a = _require(d, "a", str, where)
        if not q.strip() or not a.strip():
            raise EmptyContentError(f"{where}: empty question or answer")
        dialogs.append(RegionDialog(_parse_bbox(d.get("bbox"), size, where), q, a))
    if check_image:
        path = _resolve(image, Path(base_dir) if base_dir is not None else None)
        if not path.is_file():
            raise SchemaError(f"{what}: image file not found: {path}")
    return NaturalImageRecord(image_id, image, size, caption, tuple(dialogs))


def natural_to_blob(rec: NaturalImageRecord) -> dict:
    return {
        "image_id": rec.image_id,
        "image": rec.image_ref,
        "width": rec.size.width,
        "height": rec.size.height,
        "caption": rec.caption,
        "region_dialogs": [{"bbox": _bbox_list(d.box), "q": d.question, "a": d.answer}
                           for d in rec.region_dialogs],
    }


def ingest_layout(blob, page_size: PageSize) -> LayoutRecord:
    if isinstance(blob, (str, bytes)):
        blob = json.loads(blob)
    if not isinstance(blob, dict):
        raise SchemaError("layout record must be a JSON object")
    page_id = _require(blob, "page_id", str, "layout")
    elements = _require(blob, "elements", list, f"layout {page_id}")
    out = []
    for i, el in enumerate(elements):
        where = f"layout {page_id} element[{i}]"
        if not isinstance(el, dict):
            raise SchemaError(f"{where}: expected object")
        label = _require(el, "label", str, where)
        if not label.strip():
            raise EmptyContentError(f"{where}: empty label")
        out.append(LayoutElement(label, _parse_bbox(el.get("bbox"), page_size, where)))
    return LayoutRecord(page_id, tuple(out))


def layout_to_blob(rec: LayoutRecord) -> dict:
    return {"page_id": rec.page_id,
            "elements": [{"label": e.label, "bbox": _bbox_list(e.box)} for e in rec.elements]}


def iter_json_records(path) -> Iterator[dict]:
    """Yield objects from a .json file (object or list) or a .jsonl file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        if path.suffix == ".jsonl":
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(f"{path}:{lineno}: {exc}") from None
            return
        try:
            data = json.load(f)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    if isinstance(data, list):
        yield from data
    else:
        yield data


class Corpus:
    """Page index keyed by page_id.

    Insertion takes a lock; once loading is finished lookups are lock-free.
    """

    def __init__(self, pages: Iterable[PageRecord] = ()):
        self._pages: dict[str, PageRecord] = {}
        self._lock = threading.Lock()
        for p in pages:
            self.add(p)

    def add(self, page: PageRecord) -> None:
        with self._lock:
            if page.page_id in self._pages:
                raise DuplicateIdError(f"duplicate page_id {page.page_id!r}")
            self._pages[page.page_id] = page

    def ingest(self, record_blob, base_dir=None, check_image: bool = True) -> PageRecord:
        page = ingest_page(record_blob, base_dir=base_dir, check_image=check_image)
        self.add(page)
        return page

    def __getitem__(self, page_id: str) -> PageRecord:
        return self._pages[page_id]

    def __contains__(self, page_id) -> bool:
        return page_id in self._pages

    def __len__(self) -> int:
        return len(self._pages)

    def __iter__(self) -> Iterator[PageRecord]:
        return iter(self.pages())

    def pages(self) -> list[PageRecord]:
        return [self._pages[k] for k in sorted(self._pages)]


def load_pages(paths, check_image: bool = True) -> tuple[Corpus, list[str]]:
    """Ingest every page record under ``paths``.

    Returns the corpus and a list of human-readable rejection messages; records
    that fail validation are skipped rather than aborting the whole load.
    """
    corpus = Corpus()
    rejected = []
    for path in paths:
        base = Path(path).parent
        for i, blob in enumerate(iter_json_records(path)):
            try:
                corpus.ingest(blob, base_dir=base, check_image=check_image)
            except (SchemaError, OutOfBoundsError, DuplicateIdError, ValueError) as exc:
                rejected.append(f"{path}#{i}: {exc}")
    return corpus, rejected


def resolve_image(ref: str, base_dir) -> str:
    return os.fspath(_resolve(ref, Path(base_dir) if base_dir is not None else None))


# -- line grouping -----------------------------------------------------------

def _vertical_overlap(a: PixelBox, b: PixelBox) -> float:
    return min(a.y2, b.y2) - max(a.y1, b.y1)


def _same_line(a: PixelBox, b: PixelBox) -> bool:
    return _vertical_overlap(a, b) >= 0.5 * min(a.height, b.height)


def group_words_into_lines(word_boxes: Iterable[TextBox]) -> list[TextBox]:
    """Merge word boxes into line boxes.

    Two words belong to the same line when their vertical overlap is at least
    half the shorter word's height; membership is transitive. Lines come back
    sorted by (top, left), words joined with single spaces in x order.
    """
    words = sorted(word_boxes, key=lambda w: (w.box.y1, w.box.x1, w.box.y2, w.box.x2))
    parent = list(range(len(words)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # sweep in y1 order; once a later word starts below the current word's
    # bottom there can be no overlap with it or anything after it
    for i, wi in enumerate(words):
        for j in range(i + 1, len(words)):
            wj = words[j]
            if wj.box.y1 >= wi.box.y2:
                break
            if _same_line(wi.box, wj.box):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[TextBox]] = {}
    for i, w in enumerate(words):
        groups.setdefault(find(i), []).append(w)
    lines = []
    for members in groups.values():
        members.sort(key=lambda w: (w.box.x1, w.box.y1))
        box = PixelBox.union(w.box for w in members)
        text = " ".join(w.content.strip() for w in members)
        lines.append(TextBox(box, text, "line"))
    lines.sort(key=lambda t: (t.box.y1, t.box.x1, t.box.y2, t.box.x2))
    return lines


def char_count(text: str) -> int:
    return sum(1 for ch in text if not ch.isspace())
