"""Text-similarity metrics for OCR, translation, summary, caption and VQA scoring.

All inputs are NFC-normalized first. Tokens are whitespace-delimited words
unless most non-whitespace characters of the pair are CJK, in which case
every non-whitespace character is its own token.
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter, deque
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

from rapidfuzz.distance import Levenshtein

_CJK_RANGES = (
    (0x2E80, 0x9FFF),    # radicals, CJK punctuation, kana, bopomofo, ext A, unified
    (0xAC00, 0xD7AF),    # hangul syllables
    (0xF900, 0xFAFF),    # compatibility ideographs
    (0xFF00, 0xFFEF),    # half/full-width forms
    (0x20000, 0x3FFFF),  # supplementary ideograph planes
)


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _CJK_RANGES)


def cjk_dominant(text: str) -> bool:
    chars = [c for c in text if not c.isspace()]
    return bool(chars) and 2 * sum(map(is_cjk, chars)) > len(chars)


def tokenize(text: str, cjk: Optional[bool] = None) -> list[str]:
    text = nfc(text)
    if cjk is None:
        cjk = cjk_dominant(text)
    if cjk:
        return [c for c in text if not c.isspace()]
    return text.split()


def tokenize_pair(prediction: str, reference: str) -> tuple[list[str], list[str]]:
    # one decision for both sides keeps the metrics symmetric
    cjk = cjk_dominant(nfc(prediction) + nfc(reference))
    return tokenize(prediction, cjk), tokenize(reference, cjk)


# -- edit distance -----------------------------------------------------------

def levenshtein(a: Sequence, b: Sequence) -> int:
    """Unit-cost insert/delete/substitute distance over any hashable sequences."""
    return Levenshtein.distance(a, b)


def norm_edit_distance(prediction: str, reference: str) -> float:
    """Character Levenshtein distance over the longer length; 0 for two empty strings."""
    p, r = nfc(prediction), nfc(reference)
    longest = max(len(p), len(r))
    if longest == 0:
        return 0.0
    return levenshtein(p, r) / longest


# -- bag-of-tokens F1 --------------------------------------------------------

def token_f1(prediction: str, reference: str) -> tuple[float, float, float]:
    """(precision, recall, f1) over the multiset of tokens."""
    pred, ref = tokenize_pair(prediction, reference)
    if not pred and not ref:
        return 1.0, 1.0, 1.0
    if not pred or not ref:
        return 0.0, 0.0, 0.0
    overlap = sum((Counter(pred) & Counter(ref)).values())
    if overlap == 0:
        return 0.0, 0.0, 0.0
    p = overlap / len(pred)
    r = overlap / len(ref)
    return p, r, 2 * p * r / (p + r)


# -- BLEU --------------------------------------------------------------------

def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu(pairs: Iterable[tuple[str, str]], max_n: int = 4) -> float:
    """Corpus BLEU-4 over (prediction, reference) pairs.

    Unigram precision is unsmoothed; higher orders use add-one smoothing.
    The brevity penalty compares total candidate and reference lengths.
    """
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    n_pairs = 0
    for pred_text, ref_text in pairs:
        n_pairs += 1
        pred, ref = tokenize_pair(pred_text, ref_text)
        cand_len += len(pred)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            pc, rc = _ngrams(pred, n), _ngrams(ref, n)
            matches[n - 1] += sum((pc & rc).values())
            totals[n - 1] += max(len(pred) - n + 1, 0)
    if n_pairs == 0:
        raise ValueError("bleu needs at least one pair")
    if cand_len == 0:
        return 1.0 if ref_len == 0 else 0.0
    if matches[0] == 0:
        return 0.0
    log_p = math.log(matches[0] / totals[0])
    for n in range(1, max_n):
        log_p += math.log((matches[n] + 1) / (totals[n] + 1))
    bp = 1.0 if cand_len > ref_len else math.exp(1 - ref_len / cand_len)
    return min(1.0, bp * math.exp(log_p / max_n))


# -- METEOR (exact-match module only) ----------------------------------------

def _align(pred: Sequence[str], ref: Sequence[str]) -> list[tuple[int, int]]:
    """Each prediction token, left to right, takes the leftmost unused equal reference token."""
    slots: dict[str, deque] = {}
    for j, tok in enumerate(ref):
        slots.setdefault(tok, deque()).append(j)
    pairs = []
    for i, tok in enumerate(pred):
        q = slots.get(tok)
        if q:
            pairs.append((i, q.popleft()))
    return pairs


def meteor_lite(prediction: str, reference: str) -> float:
    pred, ref = tokenize_pair(prediction, reference)
    alignment = _align(pred, ref)
    m = len(alignment)
    if m == 0:
        return 0.0
    chunks = 1
    for (i0, j0), (i1, j1) in zip(alignment, alignment[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p = m / len(pred)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1 - penalty)


# -- ROUGE-L -----------------------------------------------------------------

def lcs_length(a: Sequence, b: Sequence) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if ca == cb else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(prediction: str, reference: str) -> tuple[float, float, float]:
    """(recall, precision, f1) of the token LCS."""
    pred, ref = tokenize_pair(prediction, reference)
    lcs = lcs_length(pred, ref)
    r = lcs / len(ref) if ref else 0.0
    p = lcs / len(pred) if pred else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return r, p, f


# -- VQA ---------------------------------------------------------------------

_PAGE_LABEL = re.compile(r"page\s*(\d+)")


def canonical_page_label(text: str) -> str:
    t = " ".join(nfc(text).lower().split())
    m = _PAGE_LABEL.search(t)
    return f"page {int(m.group(1))}" if m else t


def vqa_accuracy(pairs: Iterable[tuple[str, str]]) -> float:
    pairs = list(pairs)
    if not pairs:
        raise ValueError("vqa_accuracy needs at least one pair")
    hits = sum(canonical_page_label(p) == canonical_page_label(r) for p, r in pairs)
    return hits / len(pairs)


# -- report ------------------------------------------------------------------

@dataclass
class MetricReport:
    edit_distance: Optional[float] = None
    f1: Optional[float] = None
    precision: Optional[float] = None
    recall: Optional[float] = None
    bleu: Optional[float] = None
    meteor: Optional[float] = None
    rouge_l_r: Optional[float] = None
    rouge_l_p: Optional[float] = None
    rouge_l_f: Optional[float] = None
    accuracy: Optional[float] = None
    samples: int = 0
    missing: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("samples", "missing") or v is None:
                continue
            if not 0.0 <= v <= 1.0 + 1e-12:
                raise ValueError(f"{f.name}={v} outside [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def score_pairs(pairs: Sequence[tuple[str, str]], suite: str, missing: int = 0) -> MetricReport:
    """Aggregate one split's (prediction, reference) pairs.

    ``suite`` picks the metrics: ocr, translation, summary, caption or vqa.
    Per-sample metrics are macro-averaged; BLEU is corpus level.
    """
    if not pairs:
        raise ValueError("no pairs to score")
    n = len(pairs)
    if suite == "vqa":
        return MetricReport(accuracy=vqa_accuracy(pairs), samples=n, missing=missing)
    if suite == "ocr":
        prf = [token_f1(p, r) for p, r in pairs]
        return MetricReport(
            edit_distance=_mean([norm_edit_distance(p, r) for p, r in pairs]),
            precision=_mean([x[0] for x in prf]),
            recall=_mean([x[1] for x in prf]),
            f1=_mean([x[2] for x in prf]),
            bleu=bleu(pairs),
            meteor=_mean([meteor_lite(p, r) for p, r in pairs]),
            samples=n, missing=missing)
    if suite == "translation":
        return MetricReport(bleu=bleu(pairs), meteor=_mean([meteor_lite(p, r) for p, r in pairs]),
                            samples=n, missing=missing)
    if suite == "summary":
        rpf = [rouge_l(p, r) for p, r in pairs]
        return MetricReport(rouge_l_r=_mean([x[0] for x in rpf]),
                            rouge_l_p=_mean([x[1] for x in rpf]),
                            rouge_l_f=_mean([x[2] for x in rpf]),
                            samples=n, missing=missing)
    if suite == "caption":
        return MetricReport(meteor=_mean([meteor_lite(p, r) for p, r in pairs]),
                            rouge_l_f=_mean([rouge_l(p, r)[2] for p, r in pairs]),
                            samples=n, missing=missing)
    raise ValueError(f"unknown metric suite {suite!r}")
