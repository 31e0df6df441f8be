#!/usr/bin/env python3
"""Independent reference tokenizer used to derive fixture counts.

Usage: reference_tokenize.py FILE...   -> prints words / tokens per file and
the vocabulary size across all files (titles included, i.e. whole file).
"""
import pathlib
import re
import sys

HERE = pathlib.Path(__file__).resolve().parent
STOP = {
    line.strip()
    for line in (HERE / ".." / "crates/core/src/stopwords_en.txt").read_text().splitlines()
    if line.strip() and not line.startswith("#")
}
MIN_LEN = 3


def tokens(text):
    out = []
    for m in re.finditer(r"[^\W_]+", text):
        tok = m.group(0).lower()
        if len(tok) < MIN_LEN or tok in STOP:
            continue
        out.append(tok)
    return out


vocab = set()
for name in sys.argv[1:]:
    text = pathlib.Path(name).read_text(encoding="utf-8")
    toks = tokens(text)
    vocab.update(toks)
    print(f"{name}: words={len(text.split())} tokens={len(toks)}")
print(f"vocabulary={len(vocab)}")
