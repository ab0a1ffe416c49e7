"""Freeze the top-5 phrases of an independent RAKE implementation (python-rake).

Usage: python make_rake_fixture.py RAKE_PACKAGE_DIR sentences.txt stoplist.txt > top5.txt
"""
import sys

sys.path.insert(0, sys.argv[1])
from RAKE import Rake  # noqa: E402

text = open(sys.argv[2], encoding="utf-8").read()
stop = [w.strip() for w in open(sys.argv[3], encoding="utf-8") if w.strip() and not w.startswith("#")]
scored = Rake(stop).run(text, minCharacters=1, maxWords=100, minFrequency=1)
if len(scored) > 5 and abs(scored[4][1] - scored[5][1]) < 1e-9:
    sys.exit("tie at the top-5 boundary; adjust the fixture")
for phrase, score in scored[:5]:
    print(f"{phrase}\t{score:.6f}")
