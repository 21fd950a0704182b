from __future__ import annotations

import dataclasses
import random
from pathlib import Path

import pytest

from docfocus.corpus import (PageRecord, TextBox, ingest_natural, iter_json_records, load_pages,
                             resolve_image)
from docfocus.geometry import PageSize, PixelBox
from docfocus import synthetic

_CRITERIA_KEY = pytest.StashKey[list]()


def make_page(paragraphs=(), lines=(), size=(1000, 1000), page_id="p0", language="en",
              image_ref="p0.png") -> PageRecord:
    return PageRecord(
        page_id, image_ref, PageSize(*size),
        tuple(TextBox(PixelBox(*b), t, "paragraph") for b, t in paragraphs),
        tuple(TextBox(PixelBox(*b), t, "line") for b, t in lines),
        language)


def load_records(paths):
    """Pages and natural images from a synthetic corpus, image refs made absolute."""
    corpus, rejected = load_pages([paths["pages"]])
    assert not rejected
    base = Path(paths["pages"]).parent
    pages = [dataclasses.replace(p, image_ref=resolve_image(p.image_ref, base)) for p in corpus]
    nbase = Path(paths["naturals"]).parent
    naturals = []
    for blob in iter_json_records(paths["naturals"]):
        n = ingest_natural(blob, base_dir=nbase)
        naturals.append(dataclasses.replace(n, image_ref=resolve_image(n.image_ref, nbase)))
    return pages, naturals


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """30 rendered pages (18 en / 12 zh) and 20 natural images on disk."""
    root = tmp_path_factory.mktemp("small_corpus")
    paths = synthetic.write_corpus(root, n_en=18, n_zh=12, n_naturals=20, seed=11,
                                   width=600, height=800)
    return root, paths


@pytest.fixture(scope="session")
def bench_corpus(tmp_path_factory):
    """Large enough for the default benchmark sizes."""
    root = tmp_path_factory.mktemp("bench_corpus")
    paths = synthetic.write_corpus(root, n_en=120, n_zh=104, n_naturals=210, seed=5)
    return root, paths


def pytest_configure(config):
    config.stash[_CRITERIA_KEY] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance criterion result; printed in the terminal summary."""
    lines = request.config.stash[_CRITERIA_KEY]

    def record(number: int, title: str, ok: bool, detail: str = ""):
        lines.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}"
                     + (f"  [{detail}]" if detail else ""))
        assert ok, f"criterion {number} failed: {title} {detail}"

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_CRITERIA_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
