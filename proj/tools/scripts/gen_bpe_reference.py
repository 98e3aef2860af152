# Copyright 2026 The diffhist Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes tests/data/bpe_reference.json with the HF `tokenizers` BPE.

Usage: python3 tools/scripts/gen_bpe_reference.py > tests/data/bpe_reference.json
"""

import json
import os
import sys

from tokenizers import Tokenizer, decoders, models, pre_tokenizers

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "..", "tests", "data", "gpt2")

STRINGS = [
    "hello world",
    "Hello, World!",
    "The quick brown fox jumps over the lazy dog.",
    "a wall 4 steps forward\na wall 3 steps left",
    "a yellow key 2 steps right and 1 step forward",
    "@@ -1,2 +1,2 @@\n-Banana\n+Apple",
    "@@ -2,0 +3 @@\n+a yellow key 2 steps right and 2 steps forward",
    "I'm sure you're right, they'll see we've done it and he'd agree it's fine.",
    "SHOUTING'S LOUD 'tis",
    "don't  can't   won't",
    "12345 678.90 3.14159",
    "v1.2.3-rc4 build#5678",
    "a1b2c3 d4e5f6",
    "    four leading spaces",
    "trailing spaces   ",
    "\t\ttabs\tand\ttabs",
    "line one\nline two\n\nline four\n",
    "\n\n\n",
    " ",
    "   ",
    "!!! ??? ... ;;; :::",
    "(parens) [brackets] {braces} <angles>",
    "snake_case_identifier camelCaseIdentifier",
    "https://example.com/path?query=1&x=y#frag",
    "user@example.org",
    "naïve café résumé",
    "Größe straße Übermaß",
    "Привет, мир!",
    "日本語のテキストです。",
    "中文字符测试",
    "한국어 텍스트",
    "العربية نص",
    "emoji 🙂👍🏽 and 🎉",
    "ﬁ ligature and ½ fraction",
    "x² y³ ⁴",
    "٣٤٥ digits",
    "mixed\r\nline\rendings",
    "non\u00a0breaking\u00a0space",
    "em\u2003space and\u3000ideographic",
    "zero\u200bwidth",
    "Strength: 19/19\nDexterity: 14\nHP: 57/61",
    "horizontal wall near north, south, southwest, and northwest",
    "<|action|> is not special here",
    "def f(x):\n    return x ** 2\n",
    "if (a && b || !c) { return -1; }",
    "$100 €200 £300 ¥400",
    "--- a\n+++ b\n@@ -3 +3 @@\n-old\n+new",
    "ALLCAPS lowercase MiXeD",
    "'s 't 're 've 'm 'll 'd",
    "end.",
]


def main() -> None:
    bpe = models.BPE.from_file(os.path.join(DATA, "encoder.json"), os.path.join(DATA, "vocab.bpe"))
    tok = Tokenizer(bpe)
    tok.pre_tokenizer = pre_tokenizers.ByteLevel(add_prefix_space=False, use_regex=True)
    tok.decoder = decoders.ByteLevel()
    assert len(STRINGS) == 50, len(STRINGS)
    out = []
    for s in STRINGS:
        ids = tok.encode(s).ids
        assert tok.decode(ids) == s, s
        out.append({"text": s, "ids": ids, "count": len(ids)})
    json.dump(out, sys.stdout, ensure_ascii=False, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()

