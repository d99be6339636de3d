#!/usr/bin/env python3
"""Builds data/desk_corpus.txt from public-domain English text.

Sources (both redistributed under Apache-2.0 as npm packages; the underlying
texts are in the public domain):
  - @stdlib/datasets-sotu        US State of the Union addresses, 1790-2021
  - @stdlib/datasets-moby-dick   Herman Melville, Moby-Dick (1851)

Usage:
  npm pack @stdlib/datasets-sotu @stdlib/datasets-moby-dick
  mkdir sotu moby
  tar xzf stdlib-datasets-sotu-*.tgz -C sotu
  tar xzf stdlib-datasets-moby-dick-*.tgz -C moby
  python3 scripts/prepare_corpus.py sotu/package/data moby/package/data \
      > data/desk_corpus.txt

Output: one sentence per line, ASCII only, 4-40 whitespace tokens, ending in
sentence punctuation, deduplicated, in a fixed pseudo-random order.
"""

import glob
import json
import os
import random
import re
import sys

REPLACEMENTS = {
    "’": "'", "‘": "'", "“": '"', "”": '"',
    "—": " -- ", "–": " -- ",
}


def clean(text):
    for k, v in REPLACEMENTS.items():
        text = text.replace(k, v)
    return re.sub(r"\([^)]*\)", "", text)


def sentences(text):
    for s in re.split(r'(?<=[.!?])\s+(?=[A-Z"])', clean(text)):
        s = " ".join(s.split())
        if not s or not s.isascii():
            continue
        if re.search(r"[\[\]/&*_#@<>{}|\\]", s):
            continue
        if s.count('"') % 2:
            continue
        n = len(s.split())
        if n < 4 or n > 40:
            continue
        if s[-1] not in '.!?"':
            continue
        yield s


def main():
    sotu_dir, moby_dir = sys.argv[1], sys.argv[2]
    out = []
    for path in sorted(glob.glob(os.path.join(sotu_dir, "*.json"))):
        with open(path, encoding="utf-8") as f:
            out.extend(sentences(json.load(f)["text"]))
    for path in sorted(glob.glob(os.path.join(moby_dir, "chapter_*.json"))):
        with open(path, encoding="utf-8") as f:
            out.extend(sentences(json.load(f)["text"]))
    seen = set()
    unique = []
    for s in out:
        if s not in seen:
            seen.add(s)
            unique.append(s)
    random.Random(20211015).shuffle(unique)
    sys.stdout.write("\n".join(unique) + "\n")
    print(f"{len(unique)} sentences", file=sys.stderr)


if __name__ == "__main__":
    main()
