"""Corpus-level BLEU-4, ROUGE-L and a lite METEOR for generated questions.

All three operate on pre-tokenized candidate/reference pairs and return
scores scaled to [0, 100]. The METEOR variant uses exact and stem match
stages only (no synonym or paraphrase resources), so absolute values are
not comparable with scores from the full resource-backed implementation.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

# METEOR constants: recall weight alpha, fragmentation beta / gamma
_METEOR_ALPHA = 0.9
_METEOR_BETA = 3.0
_METEOR_GAMMA = 0.5

# ROUGE-L F-measure recall weight (common summarization default)
_ROUGE_BETA = 1.2


def tokenize(text: str):
    """Lowercase and split on whitespace and punctuation boundaries."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class MetricReport:
    bleu4: float
    meteor: float
    rougeL: float
    item_count: int
    per_item: list = field(default_factory=list)

    def summary(self) -> str:
        return (
            f"items={self.item_count} BLEU-4={self.bleu4:.2f} "
            f"METEOR={self.meteor:.2f} ROUGE-L={self.rougeL:.2f}"
        )


def _check(candidates, references):
    if len(candidates) != len(references):
        raise ValueError("candidate and reference counts differ")
    if not candidates:
        raise ValueError("empty corpus")


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(candidates, references) -> float:
    """Corpus BLEU, orders 1-4, uniform weights, brevity penalty.

    Smoothing: add-1 on numerator and denominator for orders >= 2 with a
    zero clipped-match count.
    """
    _check(candidates, references)
    matches = [0] * 4
    totals = [0] * 4
    cand_len = 0
    ref_len = 0
    for cand, ref in zip(candidates, references):
        cand = list(cand)
        ref = list(ref)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            cgrams = _ngrams(cand, n)
            rgrams = _ngrams(ref, n)
            matches[n - 1] += sum(min(c, rgrams[g]) for g, c in cgrams.items())
            totals[n - 1] += max(len(cand) - n + 1, 0)

    if matches[0] == 0 or totals[0] == 0:
        return 0.0
    log_sum = math.log(matches[0] / totals[0])
    for n in range(2, 5):
        m, t = matches[n - 1], totals[n - 1]
        if m == 0:
            m, t = m + 1, t + 1
        log_sum += math.log(m / t)
    bp = 1.0 if cand_len >= ref_len else math.exp(1.0 - ref_len / max(cand_len, 1))
    return 100.0 * bp * math.exp(log_sum / 4.0)


def _lcs_length(a, b) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidates, references) -> float:
    """Mean per-item LCS F-measure with recall weight beta=1.2."""
    _check(candidates, references)
    b2 = _ROUGE_BETA**2
    total = 0.0
    for cand, ref in zip(candidates, references):
        cand, ref = list(cand), list(ref)
        lcs = _lcs_length(cand, ref)
        if lcs == 0 or not cand or not ref:
            continue
        recall = lcs / len(ref)
        precision = lcs / len(cand)
        total += ((1 + b2) * recall * precision) / (recall + b2 * precision)
    return 100.0 * total / len(candidates)


def stem(token: str) -> str:
    """Light suffix stemmer for the METEOR stem-match stage."""
    for suffix in ("ational", "iveness", "fulness", "ization", "ation",
                   "ness", "ment", "ions", "ies", "ing", "ed", "es", "s"):
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token


def _align(cand, ref):
    """Greedy exact-then-stem unigram alignment; returns (ci, ri) pairs."""
    matches = []
    used_ref = set()
    matched_cand = set()
    for stage in (lambda t: t, stem):
        ckeys = [stage(t) for t in cand]
        rkeys = [stage(t) for t in ref]
        for ci, key in enumerate(ckeys):
            if ci in matched_cand:
                continue
            for ri, rkey in enumerate(rkeys):
                if ri not in used_ref and rkey == key:
                    matches.append((ci, ri))
                    used_ref.add(ri)
                    matched_cand.add(ci)
                    break
    matches.sort()
    return matches


def _chunks(matches) -> int:
    if not matches:
        return 0
    count = 1
    for (c0, r0), (c1, r1) in zip(matches, matches[1:]):
        if c1 != c0 + 1 or r1 != r0 + 1:
            count += 1
    return count


def meteor_lite(candidates, references) -> float:
    """Mean per-item METEOR with exact + stem stages.

    A perfectly contiguous alignment (single chunk) carries no
    fragmentation penalty.
    """
    _check(candidates, references)
    total = 0.0
    for cand, ref in zip(candidates, references):
        cand, ref = list(cand), list(ref)
        matches = _align(cand, ref)
        m = len(matches)
        if m == 0 or not cand or not ref:
            continue
        precision = m / len(cand)
        recall = m / len(ref)
        fmean = (precision * recall) / (
            _METEOR_ALPHA * precision + (1 - _METEOR_ALPHA) * recall
        )
        chunks = _chunks(matches)
        penalty = 0.0
        if chunks > 1:
            penalty = _METEOR_GAMMA * (chunks / m) ** _METEOR_BETA
        total += fmean * (1.0 - penalty)
    return 100.0 * total / len(candidates)


def score_corpus(candidates, references, ids=None) -> MetricReport:
    """All three metrics plus per-item ROUGE-L/METEOR detail rows."""
    _check(candidates, references)
    per_item = []
    for i, (cand, ref) in enumerate(zip(candidates, references)):
        item_id = ids[i] if ids else str(i)
        per_item.append(
            {
                "id": item_id,
                "rougeL": rouge_l([cand], [ref]),
                "meteor": meteor_lite([cand], [ref]),
            }
        )
    return MetricReport(
        bleu4=bleu4(candidates, references),
        meteor=meteor_lite(candidates, references),
        rougeL=rouge_l(candidates, references),
        item_count=len(candidates),
        per_item=per_item,
    )
