import json
import random
import sys

import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_page
from docfocus.compositor import (ColorMark, FigurePlacement, HybridPage)
from docfocus.corpus import LayoutElement, LayoutRecord, NaturalImageRecord, RegionDialog
from docfocus.errors import (AnnotatorError, ConversationFormatError, InfeasibleError,
                             NoContentError)
from docfocus.geometry import PageSize, PixelBox
from docfocus.taskgen import (TASKS, CommandAnnotator, ConversationSample, OfflineAnnotator, Turn,
                              fill_prompt, foreground_box, from_record, gen_color_ocr,
                              gen_crosspage_vqa, gen_figure_caption, gen_foreground_ocr,
                              gen_infigure_chat, gen_layout, gen_line_ocr,
                              gen_multipage_region_ocr, gen_region_annotation, gen_region_ocr,
                              long_paragraphs, parse_conversation, reading_order, remap_box,
                              serialize_conversation, to_record)


def test_foreground_full_coverage_page():
    page = make_page([((0, 0, 1000, 500), "top half"), ((0, 500, 1000, 1000), "bottom half")])
    s = gen_foreground_ocr(page)
    assert s.turns[0].text == "Give the OCR results of the box (2,2,998,998)"
    assert s.turns[1].text == "top half\nbottom half"
    assert s.ground_truth == "top half\nbottom half"


def test_foreground_hull():
    page = make_page([((100, 200, 500, 300), "a"), ((300, 400, 900, 600), "b")], size=(2000, 1000))
    # hull (100,200,900,600) on 2000x1000 -> (50,200,450,600)
    assert foreground_box(page).as_tuple() == (50, 200, 450, 600)


def test_foreground_empty_page():
    with pytest.raises(NoContentError):
        gen_foreground_ocr(make_page([]))


def test_markdown_uses_blank_lines():
    page = make_page([((0, 0, 100, 50), "one"), ((0, 60, 100, 90), "two")])
    s = gen_foreground_ocr(page, task="page_markdown", full_page=True)
    assert s.turns[1].text == "one\n\ntwo"
    assert "(2,2,998,998)" in s.turns[0].text


def test_two_column_reading_order():
    # left column rows at y=0,100,200; right column at y=50,150
    left = [((0, y, 400, y + 80), f"L{y}") for y in (200, 0, 100)]
    right = [((500, y, 900, y + 80), f"R{y}") for y in (150, 50)]
    page = make_page(left + right)
    order = [t.content for t in reading_order(page.paragraphs)]
    assert order == ["L0", "L100", "L200", "R50", "R150"]


def _oracle_order(boxes):
    """Quadratic column clustering: connected components of x-overlap."""
    n = len(boxes)
    comp = list(range(n))
    for _ in range(n):
        for i in range(n):
            for j in range(n):
                a, b = boxes[i].box, boxes[j].box
                if min(a.x2, b.x2) > max(a.x1, b.x1):
                    comp[i] = comp[j] = min(comp[i], comp[j])
    groups = {}
    for i in range(n):
        groups.setdefault(comp[i], []).append(boxes[i])
    cols = sorted(groups.values(), key=lambda g: min(b.box.x1 for b in g))
    return [b for g in cols for b in sorted(g, key=lambda b: (b.box.y1, b.box.x1))]


def test_reading_order_matches_oracle():
    r = random.Random(5)
    for _ in range(300):
        paras = []
        for k in range(r.randint(1, 9)):
            x1, y1 = r.randint(0, 900), r.randint(0, 900)
            paras.append(((x1, y1, x1 + r.randint(5, 100), y1 + r.randint(5, 100)), f"t{k}"))
        page = make_page(paras)
        assert reading_order(page.paragraphs) == _oracle_order(list(page.paragraphs))


def test_region_ocr_prompt_and_answer(rng):
    page = make_page([((100, 200, 500, 300), "Hello region")], size=(1000, 1000))
    s = gen_region_ocr(page, rng)
    assert s.turns[0].text == "Give the OCR results of the box (100,200,500,300)"
    assert s.turns[1].text == "Hello region"


def test_region_ocr_multi_turn(rng):
    page = make_page([((0, y, 100, y + 10), f"p{y}") for y in range(0, 500, 50)])
    s = gen_region_ocr(page, rng, turns=3)
    assert len(s.turns) == 6
    answers = [t.text for t in s.turns[1::2]]
    assert len(set(answers)) == 3
    assert s.ground_truth == "\n".join(answers)
    with pytest.raises(NoContentError):
        gen_region_ocr(page, rng, turns=11)


def test_line_ocr_point(rng):
    page = make_page([], lines=[((100, 100, 900, 140), "a line")])
    s = gen_line_ocr(page, rng)
    assert s.turns[0].text == "OCR the line (102,120)"
    assert s.turns[1].text == "a line"


def _hybrid(page, marks=(), placements=()):
    return HybridPage(page, tuple(placements), tuple(marks), page.text_boxes, "hyb.png")


def test_color_ocr_three_turns(rng):
    page = make_page([((0, 0, 10, 10), "x")])
    marks = [ColorMark(c, PixelBox(0, i * 100, 100, i * 100 + 50), f"text {c}")
             for i, c in enumerate(("red", "green", "blue"))]
    s = gen_color_ocr(_hybrid(page, marks), rng)
    assert len(s.turns) == 6
    for q, a in zip(s.turns[0::2], s.turns[1::2]):
        color = q.text.split()[1]
        assert q.text == f"OCR {color} box" and a.text == f"text {color}"
    assert s.image_refs == ("hyb.png",)


def test_long_text_boundary():
    page = make_page([((0, 0, 100, 100), "a" * 401), ((0, 200, 100, 300), "b" * 400)])
    assert [t.content for t in long_paragraphs(page)] == ["a" * 401]
    s = gen_region_annotation(page, OfflineAnnotator(), "summary", random.Random(0))
    assert s.task == "region_summary"
    assert s.turns[0].text == "Summarize the content of the box (0,0,100,100)"
    assert s.turns[1].text == "a" * 160
    t = gen_region_annotation(page, OfflineAnnotator(), "translation", random.Random(0))
    assert t.turns[0].text.startswith("Translate the content of the box")
    short = make_page([((0, 0, 100, 100), "b" * 400)])
    with pytest.raises(NoContentError):
        gen_region_annotation(short, OfflineAnnotator(), "summary", random.Random(0))


def test_command_annotator(tmp_path):
    script = tmp_path / "ann.py"
    script.write_text("import json,sys\nr=json.load(sys.stdin)\n"
                      "print(json.dumps({'text': r['task'] + ':' + r['text'][:3]}))\n")
    ann = CommandAnnotator([sys.executable, str(script)])
    assert ann("translate", "hello") == "translate:hel"
    bad = tmp_path / "bad.py"
    bad.write_text("import sys\nsys.exit(1)\n")
    with pytest.raises(AnnotatorError):
        CommandAnnotator([sys.executable, str(bad)], retries=1)("translate", "x")


def test_layout_answer():
    page = make_page([((0, 0, 10, 10), "x")], size=(1000, 2000))
    lay = LayoutRecord("p0", (LayoutElement("text", PixelBox(0, 400, 1000, 800)),
                              LayoutElement("title", PixelBox(100, 0, 900, 200))))
    s = gen_layout(page, lay)
    assert s.turns[0].text == "Give the layout of the page"
    assert s.turns[1].text == "title: (100,0,900,100)\ntext: (0,200,1000,400)"


def _fig_hybrid():
    page = make_page([((0, 0, 100, 100), "x")], size=(1000, 1000))
    nat = NaturalImageRecord("n", "n.png", PageSize(200, 100), "a red circle",
                             (RegionDialog(PixelBox(0, 0, 100, 100), "What is left?", "A circle."),
                              RegionDialog(PixelBox(100, 0, 200, 100), "What is right?", "Nothing.")))
    placement = FigurePlacement(nat, PageSize(400, 200), PixelBox(500, 500, 900, 700))
    return _hybrid(page, placements=[placement])


def test_figure_caption():
    s = gen_figure_caption(_fig_hybrid())
    assert s.turns[0].text == "Give a brief description for the region (500,500,900,700) of the image"
    assert s.turns[1].text == "a red circle"


def test_remap_box_affine():
    got = remap_box(PixelBox(10, 20, 30, 40), 100, 100, PixelBox(500, 600, 700, 800), 200, 200)
    assert got.as_tuple() == (520, 640, 560, 680)


def test_infigure_chat_boxes():
    s = gen_infigure_chat(_fig_hybrid(), random.Random(0))
    pairs = {q.text: a.text for q, a in zip(s.turns[0::2], s.turns[1::2])}
    assert pairs == {"What is left? (500,500,700,700)": "A circle.",
                     "What is right? (700,500,900,700)": "Nothing."}


def _bundle(n, r):
    pages = []
    for k in range(n):
        paras = [((0, y, 500, y + 50), "w" * r.randint(1, 60)) for y in range(0, 500, 100)]
        pages.append(make_page(paras, page_id=f"pg{k}", image_ref=f"pg{k}.png"))
    return pages


def test_multipage_region_ocr():
    pages = _bundle(3, random.Random(1))
    s = gen_multipage_region_ocr(pages, random.Random(2))
    assert s.image_refs == ("pg0.png", "pg1.png", "pg2.png")
    assert s.turns[0].text.startswith("OCR boxes on multiple pages. Page 1: (")
    lines = s.turns[1].text.split("\n")
    assert [l.split(":")[0] for l in lines] == ["Page 1", "Page 2", "Page 3"]
    with pytest.raises(ValueError):
        gen_multipage_region_ocr(_bundle(9, random.Random(1)), random.Random(0))
    with pytest.raises(ValueError):
        gen_multipage_region_ocr(_bundle(1, random.Random(1)), random.Random(0))


def test_crosspage_vqa_label_and_ties():
    pages = _bundle(4, random.Random(3))
    s = gen_crosspage_vqa(pages, random.Random(4))
    assert s.ground_truth in {f"Page {k}" for k in range(1, 5)}
    same = [make_page([((0, 0, 10, 10), "abcde")], page_id=f"s{k}") for k in range(3)]
    with pytest.raises(InfeasibleError):
        gen_crosspage_vqa(same, random.Random(0))


def test_wire_format_exact():
    s = ConversationSample("i", "region_ocr", ("a.png",), (Turn("user", "Q"), Turn("assistant", "A")), "A")
    assert serialize_conversation(s) == \
        '<|im_start|>user: <img>"<image>"</img> "Q"<|im_end|> <|im_start|>assistant: "A" <|im_end|>'
    two = ConversationSample("i", "region_ocr", ("a.png", "b.png"),
                             (Turn("user", "Q"), Turn("assistant", "A"),
                              Turn("user", "Q2"), Turn("assistant", "A2")), "A")
    out = serialize_conversation(two)
    assert out.startswith('<|im_start|>user: <img>"<image>"</img><img>"<image>"</img> "Q"')
    assert out.endswith('<|im_start|>user: "Q2"<|im_end|> <|im_start|>assistant: "A2" <|im_end|>')


@pytest.mark.parametrize("bad", ["<|im_end|>", "x<image>y", "<img>"])
def test_reserved_tokens_rejected(bad):
    s = ConversationSample("i", "region_ocr", ("a.png",), (Turn("user", bad), Turn("assistant", "A")), "A")
    with pytest.raises(ConversationFormatError):
        serialize_conversation(s)


def test_sample_structure_validation():
    with pytest.raises(ConversationFormatError):
        ConversationSample("i", "nope", ("a",), (Turn("user", "q"), Turn("assistant", "a")), "a")
    with pytest.raises(ConversationFormatError):
        ConversationSample("i", "layout", ("a",), (Turn("assistant", "a"), Turn("user", "q")), "a")
    with pytest.raises(ConversationFormatError):
        ConversationSample("i", "layout", (), (Turn("user", "q"), Turn("assistant", "a")), "a")
    with pytest.raises(ConversationFormatError):
        parse_conversation('<|im_start|>user: "no image"<|im_end|>')


def test_fill_prompt_single_pass():
    assert fill_prompt("{QUESTION} {BOX}", {"QUESTION": "why {BOX}?", "BOX": "(1,2,3,4)"}) == \
        "why {BOX}? (1,2,3,4)"


_text = st.text(st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40).filter(
    lambda t: not any(tok in t for tok in ("<|im_start|>", "<|im_end|>", "<img>", "</img>", "<image>")))


@settings(max_examples=300)
@given(st.integers(1, 8), st.lists(st.tuples(_text, _text), min_size=1, max_size=4),
       st.sampled_from(TASKS))
def test_round_trip_property(n_images, qa, task):
    turns = tuple(t for q, a in qa for t in (Turn("user", q), Turn("assistant", a)))
    s = ConversationSample("id", task, tuple(f"{k}.png" for k in range(n_images)), turns, qa[0][1])
    assert parse_conversation(serialize_conversation(s)) == (n_images, turns)
    rec = json.loads(json.dumps(to_record(s)))
    assert from_record(rec) == s
