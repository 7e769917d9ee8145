"""Rewrites a stub-recorded replay fixture for the toy corpus.

Usage: python3 scripts/gen_toy_fixture.py RECORDED.jsonl SOURCES.txt Q OUT.jsonl

Entry i of the recorded fixture answers source i // Q, sample i % Q (plan order).
About one entry in ten is deliberately defective so the filter has work to do.
"""
import json
import re
import sys

SLANG = {
    "r": "are", "u": "you", "ur": "your", "tmrw": "tomorrow", "lol": "", "sooo": "very",
    "dunno": "do not know", "gonna": "am going to", "thx": "thank you", "asap": "as soon as possible",
    "omg": "", "nah": "no,", "cant": "cannot", "wanna": "would you like to", "ya": "yes,",
    "btw": "by the way,", "idk": "I do not know", "gotta": "have to", "nite": "night", "pls": "please",
    "bout": "about", "kinda": "somewhat", "totally": "certainly", "gimme": "give me", "dude": "",
    "ok": "okay,", "tbh": "to be honest", "ugh": "", "luv": "love", "txt": "text", "srsly": "seriously,",
    "any1": "does anyone", "def": "definitely", "sry": "I apologize,", "sis": "sister", "wk": "week",
    "w": "with", "brb": "I will be right back,", "lemme": "let me", "hows": "how is", "im": "I am",
    "its": "it is", "i": "I", "i'll": "I will", "u?": "you?", "super": "very", "crazy": "remarkable",
    "nuts": "to distraction", "hang": "spend time", "out": "together", "grab": "get",
}

REASONS = [
    "The original text uses abbreviations such as \"{w}\" that are typical of casual messages.",
    "The word \"{w}\" is informal and would be spelled out in careful writing.",
    "The sentence lacks capitalization and ending punctuation, which is informal.",
    "The phrasing \"{w}\" is colloquial.",
]


def formalize(src):
    words = []
    for w in src.split():
        key = w.lower().strip("!,.")
        rep = SLANG.get(key, w.strip("!"))
        if rep:
            words.append(rep)
    out = " ".join(words).replace(" ,", ",").strip(" ,")
    out = re.sub(r",$", "", out)
    if not out:
        out = src
    out = out[0].upper() + out[1:]
    if out[-1] not in ".?!":
        out += "?" if src.rstrip().endswith("?") else "."
    return out


def informal_word(src):
    for w in src.split():
        if w.lower().strip("!,.?") in SLANG:
            return w.strip("!,.?")
    return src.split()[0]


def main():
    recorded, sources_path, q, out = sys.argv[1], sys.argv[2], int(sys.argv[3]), sys.argv[4]
    sources = [l.rstrip("\n") for l in open(sources_path, encoding="utf-8") if l.strip()]
    entries = [json.loads(l) for l in open(recorded, encoding="utf-8")]
    assert len(entries) == len(sources) * q
    for i, e in enumerate(entries):
        src, k = sources[i // q], i % q
        w = informal_word(src)
        cot = "\n".join([
            "The original text is informal.",
            REASONS[(i // q + k) % len(REASONS)].format(w=w),
        ])
        if i % 20 == 3:
            e["text"] = cot
        elif i % 20 == 13:
            e["text"] = f"{cot}\n[Transferred]: {src}"
        elif i % 20 == 17:
            e["text"] = f"{cot}\n[[Transferred]]: {formalize(src)}"
        else:
            e["text"] = f"{cot}\n[Transferred]: {formalize(src)}"
    with open(out, "w", encoding="utf-8") as f:
        for e in entries:
            f.write(json.dumps(e, ensure_ascii=False, separators=(",", ":")) + "\n")


if __name__ == "__main__":
    main()
