import random
from itertools import combinations

import pytest
from PIL import Image

from conftest import make_page
from docfocus import compositor
from docfocus.compositor import (FigurePlacement, ScaleParams, choose_color_marks,
                                 derive_rng, hybrid_from_blob, hybrid_to_blob, paint_color_boxes,
                                 place_figure, render_interleaved, scale_figure, stroke_width,
                                 synthesize_color, synthesize_interleaved)
from docfocus.corpus import NaturalImageRecord, RegionDialog, char_count
from docfocus.errors import ColorHybridInfeasibleError, PlacementInfeasibleError
from docfocus.geometry import PageSize, PixelBox, intersection_area


class ScriptedRng:
    """randint answers from a script; None in the script means 'lower bound'."""

    def __init__(self, script):
        self.script = list(script)

    def randint(self, a, b):
        v = self.script.pop(0) if self.script else None
        v = a if v is None else v
        assert a <= v <= b, (a, v, b)
        return v


def natural(w, h, caption="a dog on grass", dialogs=()):
    return NaturalImageRecord("n", "n.png", PageSize(w, h), caption, tuple(dialogs))


def test_scale_wide_figure_lower_bound():
    # floor(0.3*1024) = 307 ; floor(307/800*600) = floor(230.25) = 230
    got = scale_figure(PageSize(800, 600), PageSize(1024, 1024), ScriptedRng([None]))
    assert (got.width, got.height) == (307, 230)


def test_scale_tall_figure_lower_bound():
    # floor(0.4*1024) = 409 ; floor(409/900*500) = floor(227.2) = 227
    got = scale_figure(PageSize(500, 900), PageSize(1024, 1024), ScriptedRng([None]))
    assert (got.width, got.height) == (227, 409)


def test_scale_bounds_inclusive_upper():
    got = scale_figure(PageSize(800, 600), PageSize(1024, 1024), ScriptedRng([921]))
    assert got.width == 921  # floor(0.9*1024)


def test_scale_fits_on_page():
    r = random.Random(3)
    for _ in range(2000):
        nat = PageSize(r.randint(1, 3000), r.randint(1, 3000))
        page = PageSize(r.randint(50, 3000), r.randint(50, 3000))
        try:
            s = scale_figure(nat, page, r)
        except PlacementInfeasibleError:
            continue
        assert s.width <= int(0.9 * page.width) and s.height <= page.height


def test_scale_degenerate_aspect_errors():
    # a 10000:1 strip on a 10 px tall page can never get a non-zero height
    with pytest.raises(PlacementInfeasibleError):
        scale_figure(PageSize(10000, 1), PageSize(100, 10), random.Random(0))


def test_scale_params_validation():
    with pytest.raises(ValueError):
        ScaleParams(alpha=0.9, beta=0.3)
    with pytest.raises(ValueError):
        ScaleParams(eta=0.0)


ROWS = [((0, y, 1000, y + 100), f"paragraph number {i}") for i, y in enumerate(range(0, 1000, 200))]


def test_place_over_two_of_five_paragraphs():
    page = make_page(ROWS)
    # wide 1000x500 figure: width 300 (lower bound), height 150; top-left (0, 80)
    placement, surviving = place_figure(page, natural(1000, 500), ScriptedRng([None, 0, 80]))
    assert placement.target.as_tuple() == (0, 80, 300, 230)
    assert len([t for t in surviving if t.kind == "paragraph"]) == 3
    expected = [t for t in page.text_boxes if intersection_area(t.box, placement.target) == 0]
    assert list(surviving) == expected


def test_place_in_empty_margin_keeps_everything():
    page = make_page([((0, 0, 1000, 100), "only at the top")])
    placement, surviving = place_figure(page, natural(1000, 500), ScriptedRng([None, 0, 500]))
    assert surviving == page.text_boxes


def test_place_always_on_page_and_occlusion_sound():
    r = random.Random(9)
    page = make_page(ROWS, size=(640, 900))
    for trial in range(10_000):
        nat = natural(r.randint(20, 2000), r.randint(20, 2000))
        placement, surviving = place_figure(page, nat, r)
        t = placement.target
        assert 0 <= t.x1 and 0 <= t.y1 and t.x2 <= 640 and t.y2 <= 900
        assert (t.width, t.height) == (placement.scaled_size.width, placement.scaled_size.height)
        if trial < 1000:
            for box in page.text_boxes:
                assert (box in surviving) == (intersection_area(box.box, t) == 0)


def test_place_infeasible_on_tiny_page():
    page = make_page([((0, 0, 1, 1), "x")], size=(1, 1))
    with pytest.raises(PlacementInfeasibleError):
        place_figure(page, natural(100, 100), random.Random(0))


def test_aspect_preserved_within_one_step():
    r = random.Random(21)
    for _ in range(10_000):
        n = PageSize(r.randint(10, 4000), r.randint(10, 4000))
        p = PageSize(r.randint(100, 4000), r.randint(100, 4000))
        try:
            s = scale_figure(n, p, r)
        except PlacementInfeasibleError:
            continue
        if n.width * p.height > n.height * p.width:
            assert s.height <= s.width * n.height / n.width < s.height + 1
        else:
            assert s.width <= s.height * n.width / n.height < s.width + 1


def _page_image(w, h, color=(200, 200, 200)):
    return Image.new("RGB", (w, h), color)


def test_render_interleaved_semantics():
    page = make_page(ROWS, size=(1000, 1000))
    fig = Image.new("RGB", (50, 50), (10, 20, 30))
    fig.putpixel((25, 25), (11, 22, 33))
    placement = FigurePlacement(natural(50, 50), PageSize(300, 300), PixelBox(600, 600, 900, 900))
    removed = [page.paragraphs[0]]
    out = render_interleaved(_page_image(1000, 1000), fig, placement, removed)
    assert out.size == (1000, 1000)
    expected_fig = fig.resize((300, 300), Image.BILINEAR)
    assert out.getpixel((750, 750)) == expected_fig.getpixel((150, 150))
    assert out.getpixel((500, 50)) == (255, 255, 255)
    assert out.getpixel((500, 250)) == (200, 200, 200)


def test_paint_three_disjoint_paragraphs():
    page = make_page(ROWS[:3])
    marks, image = paint_color_boxes(page, random.Random(0), _page_image(1000, 1000))
    assert sorted(m.color for m in marks) == ["blue", "green", "red"]
    assert {m.content for m in marks} == {t for _, t in ROWS[:3]}
    red = next(m for m in marks if m.color == "red")
    x1, y1, x2, y2 = red.box.as_tuple()
    assert image.getpixel((x1, (y1 + y2) // 2)) == (255, 0, 0)
    assert image.getpixel((x2 - 1, y1)) == (255, 0, 0)
    w = stroke_width(page.size)
    assert w == 3  # max(2, floor(0.003 * 1000))
    assert image.getpixel((x1 + w, y1 + w)) == (200, 200, 200)
    assert image.getpixel(((x1 + x2) // 2, (y1 + y2) // 2)) == (200, 200, 200)


def test_paint_infeasible():
    page = make_page([((0, 0, 500, 100), "hello world"), ((0, 50, 500, 150), "overlapping"),
                      ((0, 300, 500, 400), "third box")])
    with pytest.raises(ColorHybridInfeasibleError):
        choose_color_marks(page, random.Random(0))
    short = make_page([((0, 0, 100, 10), "abc"), ((0, 20, 100, 30), "abcdef"),
                       ((0, 40, 100, 50), "abcdefg")])
    with pytest.raises(ColorHybridInfeasibleError):
        choose_color_marks(short, random.Random(0))


def _replay_oracle(page, seed):
    """Enumerate every disjoint triple, then replay the generator's draws."""
    cands = [t for t in (page.paragraphs if len(page.paragraphs) >= 3 else page.text_boxes)
             if char_count(t.content) >= 5]
    disjoint = [c for c in combinations(cands, 3)
                if all(intersection_area(a.box, b.box) == 0 for a, b in combinations(c, 2))]
    if not disjoint:
        return None
    allowed = {frozenset(id(t) for t in c) for c in disjoint}
    r = random.Random(seed)
    for _ in range(100):
        pick = r.sample(cands, 3)
        if frozenset(id(t) for t in pick) in allowed:
            break
    else:
        pick = list(r.choice(disjoint))
    colors = ["red", "green", "blue"]
    r.shuffle(colors)
    return [(c, t.content) for c, t in zip(colors, pick)]


def test_color_selection_matches_enumeration_oracle():
    gen = random.Random(77)
    for seed in range(1000):
        paras = []
        for k in range(gen.randint(3, 7)):
            x1, y1 = gen.randint(0, 800), gen.randint(0, 800)
            paras.append(((x1, y1, x1 + gen.randint(20, 200), y1 + gen.randint(20, 200)), f"text {seed}-{k}"))
        page = make_page(paras)
        expected = _replay_oracle(page, seed)
        if expected is None:
            with pytest.raises(ColorHybridInfeasibleError):
                choose_color_marks(page, random.Random(seed))
            continue
        marks = choose_color_marks(page, random.Random(seed))
        assert [(m.color, m.content) for m in marks] == expected


def test_derive_rng_is_stable_and_keyed():
    assert derive_rng(7, "a").random() == derive_rng(7, "a").random()
    assert derive_rng(7, "a").random() != derive_rng(7, "b").random()
    assert derive_rng(7, "a").random() != derive_rng(8, "a").random()


def _write_fixture_images(tmp_path):
    page_png = tmp_path / "page.png"
    nat_png = tmp_path / "nat.png"
    img = _page_image(1000, 1000, (255, 255, 255))
    for _, (b, _) in enumerate(ROWS):
        Image.new("RGB", (b[2] - b[0] - 20, 40), (30, 30, 30)).save(tmp_path / "bar.png")
        img.paste(Image.open(tmp_path / "bar.png"), (b[0] + 10, b[1] + 30))
    img.save(page_png)
    Image.new("RGB", (300, 200), (0, 128, 255)).save(nat_png)
    return page_png, nat_png


def test_synthesis_is_deterministic(tmp_path):
    page_png, nat_png = _write_fixture_images(tmp_path)
    page = make_page(ROWS)
    nat = natural(300, 200, dialogs=[RegionDialog(PixelBox(0, 0, 150, 200), "What?", "Blue.")])
    h1, _ = synthesize_interleaved(page, nat, 7, page_png, nat_png, tmp_path / "a.png")
    h2, _ = synthesize_interleaved(page, nat, 7, page_png, nat_png, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()
    assert h1.placements == h2.placements and h1.surviving_boxes == h2.surviving_boxes
    c1, _ = synthesize_color(page, 7, page_png, tmp_path / "c1.png")
    c2, _ = synthesize_color(page, 7, page_png, tmp_path / "c2.png")
    assert (tmp_path / "c1.png").read_bytes() == (tmp_path / "c2.png").read_bytes()
    assert c1.color_marks == c2.color_marks


def test_color_marks_avoid_figure(tmp_path):
    page_png, nat_png = _write_fixture_images(tmp_path)
    page = make_page(ROWS + [((0, y + 100, 1000, y + 150), f"gap text {y}") for y in range(0, 900, 200)])
    nat = natural(300, 200)
    done = 0
    for seed in range(60):
        base, base_img = synthesize_interleaved(page, nat, seed, page_png, nat_png)
        try:
            h, _ = synthesize_color(page, seed, page_png, base=base, base_image=base_img)
        except ColorHybridInfeasibleError:
            continue
        done += 1
        target = h.placements[0].target
        assert len(h.color_marks) == 3
        for m in h.color_marks:
            assert intersection_area(m.box, target) == 0
        for a, b in combinations(h.color_marks, 2):
            assert intersection_area(a.box, b.box) == 0
    assert done > 30


def test_sidecar_round_trip(tmp_path):
    page_png, nat_png = _write_fixture_images(tmp_path)
    page = make_page(ROWS)
    nat = natural(300, 200, dialogs=[RegionDialog(PixelBox(0, 0, 150, 200), "What?", "Blue.")])
    h, _ = synthesize_interleaved(page, nat, 3, page_png, nat_png, tmp_path / "x.png")
    compositor.write_sidecar(h, tmp_path / "x.json")
    import json
    back = hybrid_from_blob(json.loads((tmp_path / "x.json").read_text()), page)
    assert hybrid_to_blob(back) == hybrid_to_blob(h)
