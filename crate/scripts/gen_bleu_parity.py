"""Regenerates crates/core/tests/fixtures/bleu_parity.json with sacrebleu.

Usage: python3 scripts/gen_bleu_parity.py  (needs sacrebleu==2.4.3)
"""
import json
import random
import sys
from pathlib import Path

import sacrebleu
from sacrebleu.metrics import BLEU

OUT = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/bleu_parity.json"

VOCAB = (
    "the a an cat dog mat sat on is was I you we they it this that here there not "
    "very really please thank thanks formal informal text style , . ! ? ; : ' \" ( ) - "
    "1,000 3.14 42 7-8 don't can't U.S. e.g. café naïve über $5 50% & @ # ..."
).split()


def random_sentence(rng, lo, hi):
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(lo, hi)))


def corrupt(rng, sentence):
    toks = sentence.split()
    for _ in range(rng.randint(0, 3)):
        if toks and rng.random() < 0.5:
            toks.pop(rng.randrange(len(toks)))
        else:
            toks.insert(rng.randrange(len(toks) + 1), rng.choice(VOCAB))
    return " ".join(toks)


def random_corpus(seed, n, lo, hi):
    rng = random.Random(seed)
    refs = [random_sentence(rng, lo, hi) for _ in range(n)]
    hyps = [corrupt(rng, r) for r in refs]
    return hyps, refs


CASES = [
    ("hand_counted", ["the cat sat on the mat"], ["the cat is on the mat"], {}),
    ("identical_multiline", ["Hello there , friend .", "How are you doing today?"],
     ["Hello there , friend .", "How are you doing today?"], {}),
    ("empty_hypothesis_line", ["", "the cat is on the mat", "a dog barked loudly"],
     ["nothing here at all", "the cat is on the mat", "the dog barked loudly"], {}),
    ("all_empty_hypotheses", ["", ""], ["some words here", "more words"], {}),
    ("no_matches", ["alpha beta gamma"], ["delta epsilon zeta eta"], {}),
    ("short_hypothesis_bp", ["the cat"], ["the cat sat on the mat today"], {}),
    ("long_hypothesis", ["the cat sat on the mat and then it sat on the other mat too"],
     ["the cat sat on the mat"], {}),
    ("punctuation_heavy", ["Wait!! What?! No way... (seriously) -- ok; fine: done."],
     ["Wait! What? No way... (seriously) - ok; fine: done."], {}),
    ("numbers", ["It costs $1,000.50 for 3-4 days, i.e. 25.5% more."],
     ["It costs $1,000.50 for 3 - 4 days, i.e. 25,5% more."], {}),
    ("html_entities", ["He said &quot;hi&quot; &amp; left &lt;quickly&gt;"],
     ["He said \"hi\" & left <quickly>"], {}),
    ("skipped_and_hyphen_linebreak", ["<skipped> well-known fact-\nchecking"],
     ["well-known fact-checking"], {}),
    ("unicode", ["Ça va très bien, merci — naïve café über alles."],
     ["Ça va bien, merci - naive café über alles."], {}),
    ("whitespace_variants", ["the\tcat  sat on   the mat  "], ["the cat sat on the mat"], {}),
    ("lowercase", ["The CAT Sat On The Mat"], ["the cat sat on the mat"], {"lowercase": True}),
    ("mixed_case_no_lc", ["The CAT Sat On The Mat"], ["the cat sat on the mat"], {}),
    ("ws_tokenizer", ["Hello, world! How's it going?"], ["Hello , world ! How's it going ?"],
     {"tokenize": "none"}),
    ("smooth_none_zero_order", ["the cat sat"], ["the cat sat on the mat"], {"smooth_method": "none"}),
    ("smooth_none_full", ["the cat sat on the mat", "a b c d e"], ["the cat sat on a mat", "a b c d e"],
     {"smooth_method": "none"}),
    ("doctor", ["I just want to know if you have been to the doctor yet."],
     ["I just want to know if you've been to the doctor yet."], {}),
    ("single_token", ["yes"], ["yes"], {}),
    ("single_token_wrong", ["yes"], ["no"], {}),
]

for i, (n, lo, hi) in enumerate([(10, 3, 12), (25, 1, 20), (50, 5, 30), (5, 0, 4), (100, 2, 15)]):
    hyps, refs = random_corpus(1000 + i, n, max(lo, 1), hi)
    CASES.append((f"random_{i}", hyps, refs, {}))
hyps, refs = random_corpus(77, 30, 2, 10)
CASES.append(("random_lowercase", [h.upper() for h in hyps], refs, {"lowercase": True}))
hyps, refs = random_corpus(78, 30, 2, 10)
CASES.append(("random_ws", hyps, refs, {"tokenize": "none"}))

SENTENCE_CASES = [
    ("sentence_cat", "the cat sat on the mat", "the cat is on the mat"),
    ("sentence_doctor", "I just want to know if you have been to the doctor yet.",
     "I just want to know if you've been to the doctor yet."),
    ("sentence_short", "hello", "hello there"),
    ("sentence_zero", "abc", "xyz"),
    ("sentence_two_tokens", "the cat", "the cat"),
    ("sentence_empty", "", "something"),
]


def corpus_entry(name, hyps, refs, kwargs):
    bleu = BLEU(**kwargs)
    res = bleu.corpus_score(hyps, [refs])
    tok = kwargs.get("tokenize", "13a")
    return {
        "name": name,
        "mode": "corpus",
        "hyps": hyps,
        "refs": refs,
        "tokenize": "ws" if tok == "none" else tok,
        "smooth": kwargs.get("smooth_method", "exp"),
        "lowercase": kwargs.get("lowercase", False),
        "score": res.score,
        "bp": res.bp,
        "sys_len": res.sys_len,
        "ref_len": res.ref_len,
        "counts": list(res.counts),
        "totals": list(res.totals),
    }


def sentence_entry(name, hyp, ref):
    res = sacrebleu.sentence_bleu(hyp, [ref])
    return {
        "name": name,
        "mode": "sentence",
        "hyps": [hyp],
        "refs": [ref],
        "tokenize": "13a",
        "smooth": "exp",
        "lowercase": False,
        "score": res.score,
        "bp": res.bp,
        "sys_len": res.sys_len,
        "ref_len": res.ref_len,
        "counts": list(res.counts),
        "totals": list(res.totals),
    }


def main():
    entries = [corpus_entry(*c) for c in CASES]
    entries += [sentence_entry(*c) for c in SENTENCE_CASES]
    doc = {"generator": f"sacrebleu {sacrebleu.__version__}", "cases": entries}
    OUT.write_text(json.dumps(doc, ensure_ascii=False, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(entries)} cases to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main()
