#!/usr/bin/env python3
"""Definition-level chrF++ and BLEU for the golden cases in tests/test_metrics.cpp.

Run once; the printed values are frozen in the C++ tests. When sacrebleu is
installed the same cases are scored with it as a cross-check.
"""

import json
import math
from collections import Counter

PUNCT = set('!"#$%&\'()*+,-./:;<=>?@[\\]^_`{|}~')


def ngrams(seq, n):
    return Counter(tuple(seq[i:i + n]) for i in range(len(seq) - n + 1))


def chrf_words(sent):
    out = []
    for w in sent.split():
        if len(w) == 1:
            out.append(w)
        elif w[-1] in PUNCT:
            out += [w[:-1], w[-1]]
        elif w[0] in PUNCT:
            out += [w[0], w[1:]]
        else:
            out.append(w)
    return out


def chrf_pp(hyps, refs, char_order=6, word_order=2, beta=2.0):
    stats = [[0, 0, 0] for _ in range(char_order + word_order)]
    for h, r in zip(hyps, refs):
        h = " ".join(h.split())
        r = " ".join(r.split())
        hc, rc = h.replace(" ", ""), r.replace(" ", "")
        hw, rw = chrf_words(h), chrf_words(r)
        for n in range(1, char_order + 1):
            a, b = ngrams(hc, n), ngrams(rc, n)
            s = stats[n - 1]
            s[0] += sum(a.values())
            s[1] += sum(b.values())
            s[2] += sum((a & b).values())
        for n in range(1, word_order + 1):
            a, b = ngrams(hw, n), ngrams(rw, n)
            s = stats[char_order + n - 1]
            s[0] += sum(a.values())
            s[1] += sum(b.values())
            s[2] += sum((a & b).values())
    p = r = 0.0
    eff = 0
    for nh, nr, m in stats:
        if nh:
            p += m / nh
        if nr:
            r += m / nr
        if nh and nr:
            eff += 1
    if eff == 0:
        return 0.0
    p /= eff
    r /= eff
    if p + r == 0:
        return 0.0
    b2 = beta * beta
    return 100.0 * (1 + b2) * p * r / (b2 * p + r)


def bleu(hyps, refs, max_n=4, smoothing="epsilon"):
    matches = [0] * max_n
    totals = [0] * max_n
    c = r = 0
    for h, ref in zip(hyps, refs):
        ht, rt = h.split(), ref.split()
        c += len(ht)
        r += len(rt)
        for n in range(1, max_n + 1):
            a, b = ngrams(ht, n), ngrams(rt, n)
            totals[n - 1] += sum(a.values())
            matches[n - 1] += sum((a & b).values())
    if c == 0:
        return 0.0
    logs = []
    factor = 1.0
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m:
            logs.append(math.log(m / t))
        elif smoothing == "epsilon":
            logs.append(math.log(0.1 / t))
        elif smoothing == "exp":
            factor *= 2
            logs.append(math.log(1 / (factor * t)))
        else:
            return 0.0
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return 100.0 * bp * math.exp(sum(logs) / len(logs))


CASES = {
    "chrf_abc_abd": ("chrf", ["abc"], ["abd"]),
    "chrf_two_sentences": ("chrf", ["the cat sat on the mat.", "hello world"], ["the cat is on the mat.", "hello there world"]),
    "chrf_punct_split": ("chrf", ["(quoted) words, here!"], ["quoted words here"]),
    "bleu_the_the_the": ("bleu2", ["the the the"], ["the cat"]),
    "bleu_4gram_short": ("bleu", ["the cat sat on the mat"], ["the cat is on the mat"]),
    "bleu_exp_smoothing": ("bleu_exp", ["a b c d e"], ["a b x d e f"]),
}


def main():
    values = {}
    for name, (kind, h, r) in CASES.items():
        if kind == "chrf":
            values[name] = chrf_pp(h, r)
        elif kind == "bleu2":
            values[name] = bleu(h, r, max_n=2)
        elif kind == "bleu_exp":
            values[name] = bleu(h, r, smoothing="exp")
        else:
            values[name] = bleu(h, r)
    print(json.dumps(values, indent=2))

    try:
        import sacrebleu
    except ImportError:
        return
    from sacrebleu.metrics import BLEU, CHRF

    for name, (kind, h, r) in CASES.items():
        if kind == "chrf":
            ref = CHRF(word_order=2).corpus_score(h, [r]).score
        elif kind == "bleu2":
            ref = BLEU(max_ngram_order=2, smooth_method="floor", tokenize="none", effective_order=True).corpus_score(h, [r]).score
        elif kind == "bleu_exp":
            ref = BLEU(smooth_method="exp", tokenize="none", effective_order=True).corpus_score(h, [r]).score
        else:
            ref = BLEU(smooth_method="floor", tokenize="none", effective_order=True).corpus_score(h, [r]).score
        print(f"{name}: oracle={values[name]!r} sacrebleu={ref!r} diff={abs(values[name] - ref):.2e}")


if __name__ == "__main__":
    main()
