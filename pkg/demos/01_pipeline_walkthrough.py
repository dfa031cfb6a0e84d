"""Run every pipeline stage over the bundled fixture corpus and look at what each one leaves behind.

    python demos/01_pipeline_walkthrough.py [workdir]

Takes about half a minute.  The work directory is kept so the artifacts can be
inspected afterwards.
"""

import json
import sys
import tempfile
from pathlib import Path

from codetestlm.cli import main
from codetestlm.common import read_jsonl
from codetestlm.synthetic import write_fixture_corpus

work = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="codetestlm-"))
root = work / "corpus"
summary = write_fixture_corpus(root)
print(f"fixture corpus: {summary['repos']} repositories, {summary['files']} files under {root}\n")

common = ["-c", str(root / "pipeline.toml"), "-w", str(work / "run")]
stages = [["ingest", "--root", str(root)], ["filter"], ["align"], ["tokenize"], ["corpus"], ["stats"],
          ["lm-train"], ["lm-ppl"], ["signal-exp"], ["prompts"], ["lm-sample"], ["evaluate"], ["report"]]
for argv in stages:
    print(f"$ codetestlm {' '.join(argv[:1])}")
    code = main(argv + common)
    if code:
        sys.exit(f"stage {argv[0]} exited with {code}")
    print()

run = work / "run"
# a few artifacts worth a closer look
pairs = list(read_jsonl(run / "pairs.jsonl"))
fuzzy = [p for p in pairs if p["match_kind"] == "fuzzy"]
print(f"{len(pairs)} code/test pairs, {len(fuzzy)} of them fuzzy, for example:")
for p in fuzzy[:3]:
    print(f"  {p['code_path']:<40} <-> {p['test_path']}  ({p['score']:.2f})")

prompt = next(read_jsonl(run / "prompts.jsonl"))
print(f"\nfirst prompt: task={prompt['task']} mode={prompt['context_mode']} pair={prompt['pair_id']}")
print("ground truth:\n" + (prompt["ground_truth"] or "(none)"))

outcome = next(iter(read_jsonl(run / "outcomes.jsonl")), None)
if outcome:
    print("\none executed sample:", json.dumps(outcome, sort_keys=True))
print(f"\nartifacts are in {run}")
