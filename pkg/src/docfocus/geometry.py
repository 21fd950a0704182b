"""Pixel and normalized box types plus the box arithmetic used everywhere.

Normalized coordinates live on an integer grid from 0 to 1000, independent of
page size. Pixel coordinates use a top-left origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import OutOfBoundsError

GRID = 1000

Number = Union[int, float]


@dataclass(frozen=True)
class PageSize:
    width: int
    height: int

    def __post_init__(self):
        if int(self.width) != self.width or int(self.height) != self.height:
            raise ValueError(f"page size must be integral, got {self.width}x{self.height}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"page size must be positive, got {self.width}x{self.height}")

    @property
    def aspect(self) -> float:
        return self.width / self.height


@dataclass(frozen=True)
class PixelBox:
    x1: Number
    y1: Number
    x2: Number
    y2: Number

    def __post_init__(self):
        if min(self.x1, self.y1, self.x2, self.y2) < 0:
            raise ValueError(f"negative coordinate in {self.as_tuple()}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate or inverted box {self.as_tuple()}")

    @property
    def width(self) -> Number:
        return self.x2 - self.x1

    @property
    def height(self) -> Number:
        return self.y2 - self.y1

    @property
    def area(self) -> Number:
        return self.width * self.height

    def as_tuple(self) -> tuple:
        return (self.x1, self.y1, self.x2, self.y2)

    def contains(self, other: "PixelBox") -> bool:
        return (self.x1 <= other.x1 and self.y1 <= other.y1
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def within(self, size: PageSize) -> bool:
        return self.x2 <= size.width and self.y2 <= size.height

    @classmethod
    def union(cls, boxes) -> "PixelBox":
        boxes = list(boxes)
        if not boxes:
            raise ValueError("union of no boxes")
        return cls(min(b.x1 for b in boxes), min(b.y1 for b in boxes),
                   max(b.x2 for b in boxes), max(b.y2 for b in boxes))


@dataclass(frozen=True)
class NormBox:
    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self):
        for v in self.as_tuple():
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"normalized coordinates must be int, got {v!r}")
        if not (0 <= self.x1 < self.x2 <= GRID and 0 <= self.y1 < self.y2 <= GRID):
            raise ValueError(f"invalid normalized box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x1, self.y1, self.x2, self.y2)

    def contains_point(self, p: "NormPoint") -> bool:
        return self.x1 <= p.x <= self.x2 and self.y1 <= p.y <= self.y2

    def contains(self, other: "NormBox") -> bool:
        return (self.x1 <= other.x1 and self.y1 <= other.y1
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def __str__(self) -> str:
        return "({},{},{},{})".format(*self.as_tuple())


@dataclass(frozen=True)
class NormPoint:
    x: int
    y: int

    def __post_init__(self):
        if not (0 <= self.x <= GRID and 0 <= self.y <= GRID):
            raise ValueError(f"normalized point out of range ({self.x},{self.y})")

    def as_tuple(self) -> tuple[int, int]:
        return (self.x, self.y)

    def __str__(self) -> str:
        return f"({self.x},{self.y})"


def _scale_half_up(v: Number, extent: int) -> int:
    # exact arithmetic so that x.5 ties always round up on every platform
    if isinstance(v, int):
        return (2 * v * GRID + extent) // (2 * extent)
    return math.floor(Fraction(v) * GRID / extent + Fraction(1, 2))


def _widen(lo: int, hi: int) -> tuple[int, int]:
    if lo < hi:
        return lo, hi
    if hi < GRID:
        return lo, hi + 1
    return lo - 1, hi


def normalize(box: PixelBox, size: PageSize) -> NormBox:
    """Map a pixel box onto the 0..1000 grid (round half up).

    A box that collapses to zero width or height after rounding is widened by
    one grid unit toward the in-range side.
    """
    if not box.within(size):
        raise OutOfBoundsError(
            f"box {box.as_tuple()} outside page {size.width}x{size.height}")
    x1 = _scale_half_up(box.x1, size.width)
    x2 = _scale_half_up(box.x2, size.width)
    y1 = _scale_half_up(box.y1, size.height)
    y2 = _scale_half_up(box.y2, size.height)
    x1, x2 = _widen(x1, x2)
    y1, y2 = _widen(y1, y2)
    return NormBox(x1, y1, x2, y2)


def normalize_point(x: Number, y: Number, size: PageSize) -> NormPoint:
    if not (0 <= x <= size.width and 0 <= y <= size.height):
        raise OutOfBoundsError(f"point ({x},{y}) outside page {size.width}x{size.height}")
    return NormPoint(_scale_half_up(x, size.width), _scale_half_up(y, size.height))


def denormalize(box: NormBox, size: PageSize) -> PixelBox:
    return PixelBox(box.x1 * size.width / GRID, box.y1 * size.height / GRID,
                    box.x2 * size.width / GRID, box.y2 * size.height / GRID)


def intersection_area(a: PixelBox, b: PixelBox) -> Number:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0 or h <= 0:
        return 0
    return w * h


def iou(a: PixelBox, b: PixelBox) -> float:
    inter = intersection_area(a, b)
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def line_anchor_point(line_box: PixelBox, size: PageSize) -> NormPoint:
    """Prompt point for a text line: 2 px right of its left edge, vertically centred."""
    x = min(line_box.x1 + 2, line_box.x2)
    y = (line_box.y1 + line_box.y2) / 2
    if isinstance(line_box.y1, int) and isinstance(line_box.y2, int) and (line_box.y1 + line_box.y2) % 2 == 0:
        y = (line_box.y1 + line_box.y2) // 2
    return normalize_point(x, y, size)


def format_box(box: NormBox) -> str:
    return str(box)
