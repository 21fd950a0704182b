"""Hybrid page synthesis: figures pasted into pages and color-marked text boxes."""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Optional, Sequence

from PIL import Image, ImageDraw

from .corpus import NaturalImageRecord, PageRecord, TextBox, char_count, natural_to_blob
from .errors import ColorHybridInfeasibleError, InfeasibleError, PlacementInfeasibleError
from .geometry import PageSize, PixelBox, intersection_area

MAX_ATTEMPTS = 100
MIN_MARK_CHARS = 5

COLORS = {
    "red": (255, 0, 0),
    "green": (0, 255, 0),
    "blue": (0, 0, 255),
}


@dataclass(frozen=True)
class ScaleParams:
    """Bounds of the random figure scale, as fractions of the page extent."""

    alpha: float = 0.3
    beta: float = 0.9
    eta: float = 0.4
    gamma: float = 0.9

    def __post_init__(self):
        if not (0 < self.alpha < self.beta <= 1):
            raise ValueError(f"need 0 < alpha < beta <= 1, got {self.alpha}, {self.beta}")
        if not (0 < self.eta < self.gamma <= 1):
            raise ValueError(f"need 0 < eta < gamma <= 1, got {self.eta}, {self.gamma}")

    def width_bounds(self, page_width: int) -> tuple[int, int]:
        return _floor_frac(self.alpha, page_width), _floor_frac(self.beta, page_width)

    def height_bounds(self, page_height: int) -> tuple[int, int]:
        return _floor_frac(self.eta, page_height), _floor_frac(self.gamma, page_height)


def _floor_frac(ratio: float, extent: int) -> int:
    # Fraction(str()) so 0.3 means exactly 3/10, not the nearest double
    return int(Fraction(str(ratio)) * extent)


@dataclass(frozen=True)
class FigurePlacement:
    natural: NaturalImageRecord
    scaled_size: PageSize
    target: PixelBox

    @property
    def caption(self) -> str:
        return self.natural.caption


@dataclass(frozen=True)
class ColorMark:
    color: str
    box: PixelBox
    content: str

    @property
    def rgb(self) -> tuple[int, int, int]:
        return COLORS[self.color]


@dataclass(frozen=True)
class HybridPage:
    base: PageRecord
    placements: tuple[FigurePlacement, ...] = ()
    color_marks: tuple[ColorMark, ...] = ()
    surviving_boxes: tuple[TextBox, ...] = ()
    composited_image_ref: str = ""


def derive_rng(seed: int, *keys) -> random.Random:
    """Independent generator for one unit of work (page, bundle, ...)."""
    h = hashlib.sha256(repr((int(seed),) + tuple(str(k) for k in keys)).encode("utf-8"))
    return random.Random(int.from_bytes(h.digest()[:8], "big"))


def scale_figure(natural_size: PageSize, page_size: PageSize, rng: random.Random,
                 params: ScaleParams = ScaleParams()) -> PageSize:
    """Random target size for a natural image pasted on a page, aspect preserved.

    A figure relatively wider than the page gets its width drawn from
    [floor(alpha*W), floor(beta*W)]; otherwise the height is drawn from
    [floor(eta*H), floor(gamma*H)]. The other side follows the aspect ratio,
    floored. Both randint bounds are inclusive.
    """
    wn, hn = natural_size.width, natural_size.height
    wd, hd = page_size.width, page_size.height
    wide = wn * hd > hn * wd
    if wide:
        lo, hi = params.width_bounds(wd)
    else:
        lo, hi = params.height_bounds(hd)
    for _ in range(MAX_ATTEMPTS):
        drawn = rng.randint(lo, hi)
        if wide:
            w_new, h_new = drawn, drawn * hn // wn
        else:
            w_new, h_new = drawn * wn // hn, drawn
        if w_new >= 1 and h_new >= 1:
            return PageSize(w_new, h_new)
    raise PlacementInfeasibleError(
        f"cannot scale {wn}x{hn} figure onto {wd}x{hd} page without a zero dimension")


def place_figure(page: PageRecord, natural: NaturalImageRecord, rng: random.Random,
                 params: ScaleParams = ScaleParams()) -> tuple[FigurePlacement, tuple[TextBox, ...]]:
    """Pick a size and on-page position for the figure.

    Every text box with positive overlap against the target is dropped from
    the surviving set; it gets painted white when rendering.
    """
    scaled = scale_figure(natural.size, page.size, rng, params)
    free_x = page.size.width - scaled.width
    free_y = page.size.height - scaled.height
    if free_x < 0 or free_y < 0:
        raise PlacementInfeasibleError(
            f"{scaled.width}x{scaled.height} figure does not fit on page {page.page_id}")
    x = rng.randint(0, free_x)
    y = rng.randint(0, free_y)
    target = PixelBox(x, y, x + scaled.width, y + scaled.height)
    surviving = tuple(t for t in page.text_boxes if intersection_area(t.box, target) == 0)
    return FigurePlacement(natural, scaled, target), surviving


def _pixel_span(box: PixelBox) -> tuple[int, int, int, int]:
    """Integer pixel rectangle [x1, x2) x [y1, y2) covering a (possibly fractional) box."""
    return (math.floor(box.x1), math.floor(box.y1), math.ceil(box.x2), math.ceil(box.y2))


def render_interleaved(page_image: Image.Image, natural_image: Image.Image,
                       placement: FigurePlacement, removed_boxes: Sequence[TextBox]) -> Image.Image:
    out = page_image.convert("RGB")
    draw = ImageDraw.Draw(out)
    for t in removed_boxes:
        x1, y1, x2, y2 = _pixel_span(t.box)
        draw.rectangle([x1, y1, x2 - 1, y2 - 1], fill=(255, 255, 255))
    fig = natural_image.convert("RGB").resize(
        (placement.scaled_size.width, placement.scaled_size.height), Image.BILINEAR)
    out.paste(fig, (int(placement.target.x1), int(placement.target.y1)))
    return out


def stroke_width(page_size: PageSize) -> int:
    return max(2, int(0.003 * page_size.width))


def _pairwise_disjoint(boxes: Sequence[TextBox]) -> bool:
    return all(intersection_area(a.box, b.box) == 0 for a, b in combinations(boxes, 2))


def mark_candidates(page: PageRecord, pool: Optional[Sequence[TextBox]] = None,
                    avoid: Sequence[PixelBox] = ()) -> list[TextBox]:
    """Boxes eligible for a color mark: enough text, clear of any figure."""
    if pool is None:
        pool = page.paragraphs if len(page.paragraphs) >= 3 else page.text_boxes
    return [t for t in pool
            if char_count(t.content) >= MIN_MARK_CHARS
            and all(intersection_area(t.box, a) == 0 for a in avoid)]


def choose_color_marks(page: PageRecord, rng: random.Random,
                       pool: Optional[Sequence[TextBox]] = None,
                       avoid: Sequence[PixelBox] = ()) -> tuple[ColorMark, ...]:
    """Select three pairwise non-overlapping boxes and assign them the three colors.

    Up to 100 random triples are tried; if none is disjoint, one is drawn
    uniformly from the full set of disjoint triples, so the page is only
    rejected when no such triple exists at all.
    """
    candidates = mark_candidates(page, pool, avoid)
    if len(candidates) < 3:
        raise ColorHybridInfeasibleError(
            f"page {page.page_id}: only {len(candidates)} candidate boxes for color marks")
    chosen = None
    for _ in range(MAX_ATTEMPTS):
        triple = rng.sample(candidates, 3)
        if _pairwise_disjoint(triple):
            chosen = triple
            break
    if chosen is None:
        disjoint = [list(t) for t in combinations(candidates, 3) if _pairwise_disjoint(t)]
        if not disjoint:
            raise ColorHybridInfeasibleError(
                f"page {page.page_id}: no three mutually disjoint text boxes")
        chosen = rng.choice(disjoint)
    colors = list(COLORS)
    rng.shuffle(colors)
    return tuple(ColorMark(c, t.box, t.content) for c, t in zip(colors, chosen))


def render_color_marks(page_image: Image.Image, marks: Sequence[ColorMark],
                       page_size: PageSize) -> Image.Image:
    """Stroke each mark's border inward; pixels deeper inside are left alone."""
    out = page_image.convert("RGB")
    draw = ImageDraw.Draw(out)
    width = stroke_width(page_size)
    for m in marks:
        x1, y1, x2, y2 = _pixel_span(m.box)
        draw.rectangle([x1, y1, x2 - 1, y2 - 1], outline=m.rgb, width=width)
    return out


def paint_color_boxes(page: PageRecord, rng: random.Random, page_image: Image.Image,
                      pool: Optional[Sequence[TextBox]] = None,
                      avoid: Sequence[PixelBox] = ()) -> tuple[tuple[ColorMark, ...], Image.Image]:
    marks = choose_color_marks(page, rng, pool, avoid)
    return marks, render_color_marks(page_image, marks, page.size)


# -- whole-page synthesis ----------------------------------------------------

def _open_rgb(path) -> Image.Image:
    try:
        with Image.open(path) as im:
            return im.convert("RGB")
    except (OSError, ValueError) as exc:
        raise InfeasibleError(f"cannot decode image {path}: {exc}") from None


def synthesize_interleaved(page: PageRecord, natural: NaturalImageRecord, seed: int,
                           page_image_path, natural_image_path, out_png=None,
                           params: ScaleParams = ScaleParams()) -> tuple[HybridPage, Image.Image]:
    rng = derive_rng(seed, "interleaved", page.page_id)
    placement, surviving = place_figure(page, natural, rng, params)
    removed = [t for t in page.text_boxes if intersection_area(t.box, placement.target) > 0]
    image = render_interleaved(_open_rgb(page_image_path), _open_rgb(natural_image_path),
                               placement, removed)
    ref = ""
    if out_png is not None:
        save_png(image, out_png)
        ref = str(out_png)
    return HybridPage(page, (placement,), (), surviving, ref), image


def synthesize_color(page: PageRecord, seed: int, page_image_path, out_png=None,
                     base: Optional[HybridPage] = None,
                     base_image: Optional[Image.Image] = None) -> tuple[HybridPage, Image.Image]:
    """Color-mark a page, optionally on top of an interleaved hybrid.

    With ``base`` given, marks are drawn from its surviving boxes and kept
    clear of its figure.
    """
    rng = derive_rng(seed, "color", page.page_id)
    if base is not None:
        pool = [t for t in base.surviving_boxes if t.kind == "paragraph"]
        if len(pool) < 3:
            pool = list(base.surviving_boxes)
        avoid = [p.target for p in base.placements]
        image_in = base_image if base_image is not None else _open_rgb(page_image_path)
    else:
        pool, avoid = None, ()
        image_in = _open_rgb(page_image_path)
    marks, image = paint_color_boxes(page, rng, image_in, pool, avoid)
    ref = ""
    if out_png is not None:
        save_png(image, out_png)
        ref = str(out_png)
    if base is not None:
        hybrid = HybridPage(page, base.placements, marks, base.surviving_boxes, ref)
    else:
        hybrid = HybridPage(page, (), marks, page.text_boxes, ref)
    return hybrid, image


def save_png(image: Image.Image, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no metadata chunks, fixed compression: identical bytes for identical pixels
    image.save(path, format="PNG", optimize=False, compress_level=6)


# -- sidecar -----------------------------------------------------------------

def _bbox(box: PixelBox) -> list:
    return [box.x1, box.y1, box.x2, box.y2]


def hybrid_to_blob(h: HybridPage) -> dict:
    return {
        "page_id": h.base.page_id,
        "image": h.composited_image_ref,
        "placements": [{
            "natural": natural_to_blob(p.natural),
            "scaled_size": [p.scaled_size.width, p.scaled_size.height],
            "bbox": _bbox(p.target),
            "caption": p.caption,
        } for p in h.placements],
        "color_marks": [{"color": m.color, "bbox": _bbox(m.box), "text": m.content}
                        for m in h.color_marks],
        "surviving_boxes": [{"bbox": _bbox(t.box), "text": t.content, "kind": t.kind}
                            for t in h.surviving_boxes],
    }


def hybrid_from_blob(blob: dict, base: PageRecord) -> HybridPage:
    from .corpus import ingest_natural

    placements = []
    for p in blob.get("placements", []):
        nat = ingest_natural(p["natural"], check_image=False)
        w, h = p["scaled_size"]
        placements.append(FigurePlacement(nat, PageSize(w, h), PixelBox(*p["bbox"])))
    marks = tuple(ColorMark(m["color"], PixelBox(*m["bbox"]), m["text"])
                  for m in blob.get("color_marks", []))
    surviving = tuple(TextBox(PixelBox(*t["bbox"]), t["text"], t["kind"])
                      for t in blob.get("surviving_boxes", []))
    return HybridPage(base, tuple(placements), marks, surviving, blob.get("image", ""))


def write_sidecar(h: HybridPage, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(hybrid_to_blob(h), ensure_ascii=False, sort_keys=True, indent=1) + "\n",
                    encoding="utf-8")
