"""Small deterministic stand-in corpus: rendered pages, natural images, layouts.

Real runs consume parser output and real photo datasets; this module produces
records in the same schemas so the pipeline can be exercised end to end.
Text is rendered as grey word bars rather than glyphs.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from PIL import Image, ImageDraw

from .compositor import save_png

EN_WORDS = (
    "the of and to in is that for it as with was on be by this are from at or an "
    "which have not has but were their can all been more one there its also other "
    "document page model region text figure table vision data layout line box "
    "result method visual language system focus image token paper section value"
).split()

ZH_CHARS = ("的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工"
            "也能下过子说产种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物"
            "现实加量都两体制机当使点从业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表")

SHAPES = ("circle", "square", "ellipse", "bar")
COLOR_NAMES = {
    "orange": (240, 140, 30), "purple": (130, 60, 170), "teal": (20, 150, 140),
    "brown": (140, 90, 40), "pink": (230, 120, 170), "olive": (120, 130, 30),
}
BACKGROUNDS = {"sky": (170, 200, 240), "grass": (120, 190, 100), "sand": (230, 210, 160),
               "stone": (160, 160, 160)}

LINE_H = 14
LINE_GAP = 4
PARA_GAP = 16
CHAR_W = 7
MARGIN = 30


def _line_text(rng: random.Random, language: str, n_chars: int) -> str:
    if language == "zh":
        return "".join(rng.choice(ZH_CHARS) for _ in range(max(1, n_chars // 2)))
    words = []
    length = -1
    while True:
        w = rng.choice(EN_WORDS)
        if length + 1 + len(w) > n_chars and words:
            break
        words.append(w)
        length += 1 + len(w)
    return " ".join(words)


def _draw_line(draw: ImageDraw.ImageDraw, x: int, y: int, text: str, language: str) -> int:
    """Draw word bars for ``text`` starting at (x, y); return the right edge."""
    cx = x
    if language == "zh":
        for _ in text:
            draw.rectangle([cx + 1, y + 2, cx + 2 * CHAR_W - 2, y + LINE_H - 3], fill=(40, 40, 40))
            cx += 2 * CHAR_W
        return cx
    for i, w in enumerate(text.split(" ")):
        if i:
            cx += CHAR_W
        draw.rectangle([cx, y + 3, cx + len(w) * CHAR_W - 1, y + LINE_H - 4], fill=(40, 40, 40))
        cx += len(w) * CHAR_W
    return cx


def make_page(page_id: str, rng: random.Random, language: str = "en",
              width: int = 1000, height: int = 1400, columns: int = 1) -> tuple[dict, Image.Image]:
    image = Image.new("RGB", (width, height), (255, 255, 255))
    draw = ImageDraw.Draw(image)
    gutter = 20
    col_w = (width - 2 * MARGIN - (columns - 1) * gutter) // columns
    chars_per_line = col_w // CHAR_W
    paragraphs, lines = [], []
    for c in range(columns):
        x0 = MARGIN + c * (col_w + gutter)
        y = MARGIN
        while True:
            n_lines = rng.randint(1, 8)
            if y + n_lines * (LINE_H + LINE_GAP) > height - MARGIN:
                break
            para_lines = []
            for i in range(n_lines):
                budget = chars_per_line if i < n_lines - 1 else rng.randint(chars_per_line // 3, chars_per_line)
                text = _line_text(rng, language, budget)
                right = _draw_line(draw, x0, y, text, language)
                box = [x0, y, max(right, x0 + 1), y + LINE_H]
                lines.append({"bbox": box, "text": text})
                para_lines.append((box, text))
                y += LINE_H + LINE_GAP
            px2 = max(b[2] for b, _ in para_lines)
            pbox = [x0, para_lines[0][0][1], px2, para_lines[-1][0][3]]
            sep = "" if language == "zh" else " "
            paragraphs.append({"bbox": pbox, "text": sep.join(t for _, t in para_lines)})
            y += PARA_GAP
    blob = {"page_id": page_id, "image": f"pages/{page_id}.png", "width": width, "height": height,
            "language": language, "paragraphs": paragraphs, "lines": lines}
    return blob, image


def make_natural(image_id: str, rng: random.Random) -> tuple[dict, Image.Image]:
    w, h = rng.randint(160, 640), rng.randint(120, 480)
    bg_name = rng.choice(sorted(BACKGROUNDS))
    image = Image.new("RGB", (w, h), BACKGROUNDS[bg_name])
    draw = ImageDraw.Draw(image)
    dialogs = []
    names = []
    for _ in range(rng.randint(1, 3)):
        color = rng.choice(sorted(COLOR_NAMES))
        shape = rng.choice(SHAPES)
        x1, y1 = rng.randint(0, w // 2), rng.randint(0, h // 2)
        x2, y2 = rng.randint(x1 + 10, w), rng.randint(y1 + 10, h)
        if shape in ("circle", "ellipse"):
            draw.ellipse([x1, y1, x2 - 1, y2 - 1], fill=COLOR_NAMES[color])
        else:
            draw.rectangle([x1, y1, x2 - 1, y2 - 1], fill=COLOR_NAMES[color])
        names.append(f"a {color} {shape}")
        dialogs.append({"bbox": [x1, y1, x2, y2], "q": "What can you see in this region?",
                        "a": f"There is {names[-1]} here."})
    caption = " and ".join(names) + f" on a {bg_name} background"
    blob = {"image_id": image_id, "image": f"naturals/{image_id}.png", "width": w, "height": h,
            "caption": caption, "region_dialogs": dialogs}
    return blob, image


def layout_for(blob: dict) -> dict:
    elements = []
    for i, p in enumerate(blob["paragraphs"]):
        elements.append({"label": "title" if i == 0 else "text", "bbox": list(p["bbox"])})
    return {"page_id": blob["page_id"], "elements": elements}


def write_corpus(out_dir, n_en: int = 60, n_zh: int = 40, n_naturals: int = 50, seed: int = 0,
                 width: int = 1000, height: int = 1400) -> dict:
    """Write pages.jsonl, naturals.jsonl and layouts.jsonl plus PNGs under ``out_dir``."""
    out = Path(out_dir)
    rng = random.Random(seed)
    pages, layouts, naturals = [], [], []
    for i in range(n_en + n_zh):
        lang = "en" if i < n_en else "zh"
        blob, image = make_page(f"{lang}{i:05d}", rng, lang, width, height, columns=rng.choice((1, 2)))
        save_png(image, out / blob["image"])
        pages.append(blob)
        layouts.append(layout_for(blob))
    for i in range(n_naturals):
        blob, image = make_natural(f"nat{i:05d}", rng)
        save_png(image, out / blob["image"])
        naturals.append(blob)
    paths = {"pages": out / "pages.jsonl", "naturals": out / "naturals.jsonl",
             "layouts": out / "layouts.jsonl"}
    for key, rows in (("pages", pages), ("naturals", naturals), ("layouts", layouts)):
        with open(paths[key], "w", encoding="utf-8", newline="\n") as f:
            for r in rows:
                f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")
    return paths
