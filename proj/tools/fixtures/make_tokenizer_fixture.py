#!/usr/bin/env python3
"""Regenerates the byte-level BPE fixture tokenizer and its reference encodings.

Trains 100 merges with the Hugging Face `tokenizers` BPE trainer over the
fixture corpus, writes vocab.txt / merges.txt in the tunesmith plain-text
format, and freezes the reference encoding of sample_1k.txt.

    python3 tools/fixtures/make_tokenizer_fixture.py tests/fixtures
"""
import sys
from pathlib import Path

from tokenizers import Tokenizer, models, trainers
from tokenizers.pre_tokenizers import ByteLevel


def byte_map():
    # GPT-2 byte <-> printable unicode table.
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return {b: chr(c) for b, c in zip(bs, cs)}


def to_units(text, table):
    return "".join(table[b] for b in text.encode("utf-8"))


def main():
    root = Path(sys.argv[1])
    table = byte_map()
    corpus = []
    for p in [root / "docs" / "userguide.md", root / "repo" / "java" / "DbHelper.java",
              root / "repo" / "python" / "mathutil.py", root / "tokenizer" / "train_extra.txt"]:
        for line in p.read_text(encoding="utf-8").splitlines(keepends=True):
            corpus.append(to_units(line, table))

    tok = Tokenizer(models.BPE())
    trainer = trainers.BpeTrainer(vocab_size=356, initial_alphabet=ByteLevel.alphabet(),
                                  show_progress=False, special_tokens=[])
    tok.train_from_iterator(corpus, trainer=trainer)

    model = tok.model
    out = root / "tokenizer"
    model.save(str(out), "hf")
    import json
    vocab = json.loads((out / "hf-vocab.json").read_text(encoding="utf-8"))
    merges = [l for l in (out / "hf-merges.txt").read_text(encoding="utf-8").splitlines()
              if l and not l.startswith("#version")]
    (out / "hf-vocab.json").unlink()
    (out / "hf-merges.txt").unlink()
    assert len(vocab) == 356, len(vocab)
    assert len(merges) == 100, len(merges)

    with open(out / "vocab.txt", "w", encoding="utf-8", newline="\n") as f:
        for token, idx in sorted(vocab.items(), key=lambda kv: kv[1]):
            f.write(f"{token}\t{idx}\n")
    with open(out / "merges.txt", "w", encoding="utf-8", newline="\n") as f:
        for m in merges:
            f.write(m + "\n")

    # Reference encoding of the 1 KiB sample, whole text as a single word.
    sample = (out / "sample_1k.txt").read_text(encoding="utf-8")
    ref = Tokenizer(models.BPE(vocab=vocab, merges=[tuple(m.split(" ")) for m in merges]))
    ids = ref.encode(to_units(sample, table)).ids
    (out / "sample_1k.ids").write_text(" ".join(map(str, ids)) + "\n", encoding="utf-8")
    print(f"vocab={len(vocab)} merges={len(merges)} sample_bytes={len(sample.encode())} sample_tokens={len(ids)}")


if __name__ == "__main__":
    main()
