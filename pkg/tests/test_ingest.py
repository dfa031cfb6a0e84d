import json
import random
import shutil
import subprocess

import pytest
from hypothesis import given, strategies as st

from codetestlm.common import Language
from codetestlm.ingest import (
    IngestConfig,
    RepoRecord,
    Split,
    assign_split,
    content_digest,
    line_stats,
    load_files,
    load_repo_metadata,
    make_source_file,
    scan_repositories,
)


def _write_repos(root, records):
    with open(root / "repos.jsonl", "w") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


@pytest.mark.skipif(shutil.which("md5sum") is None, reason="md5sum not installed")
def test_md5_matches_coreutils(tmp_path):
    rng = random.Random(7)
    for i in range(5):
        data = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 3000)))
        p = tmp_path / f"blob{i}"
        p.write_bytes(data)
        expected = subprocess.run(["md5sum", str(p)], capture_output=True, text=True, check=True).stdout.split()[0]
        assert content_digest(data) == expected


def test_blake2b_digest_is_128_bit():
    assert len(content_digest(b"abc", "blake2b-128")) == 32
    with pytest.raises(ValueError):
        content_digest(b"abc", "sha1")


def test_line_stats_hand_values():
    assert line_stats("") == (0, 0, 0.0, 0.0)
    # lines of 2 and 5 chars; 2 of the 6 visible chars are not alphanumeric
    n, mx, mean, frac = line_stats("ab\n!x y?\n")
    assert (n, mx, mean) == (2, 5, 3.5)
    assert frac == pytest.approx(2 / 6)
    # no trailing newline still counts the last line
    assert line_stats("abc")[:3] == (1, 3, 3.0)


@given(st.lists(st.text(alphabet=st.characters(blacklist_characters="\n"), max_size=30), min_size=1, max_size=10))
def test_line_stats_mean_times_count_is_char_total(lines):
    text = "\n".join(lines) + "\n"
    n, mx, mean, frac = line_stats(text)
    assert n == len(lines)
    assert mx == max(len(l) for l in lines)
    assert mean * n == pytest.approx(sum(len(l) for l in lines))
    assert 0.0 <= frac <= 1.0


def test_metadata_drops_forks_and_low_stars(tmp_path):
    _write_repos(
        tmp_path,
        [
            {"owner_name": "b/keep", "star_count": 10, "is_fork": False, "subject_language": "python"},
            {"owner_name": "a/few", "star_count": 9, "is_fork": False, "subject_language": "python"},
            {"owner_name": "c/fork", "star_count": 900, "is_fork": True, "subject_language": "java"},
            {"owner_name": "a/java", "star_count": 11, "subject_language": "java"},
        ],
    )
    repos = load_repo_metadata(tmp_path, IngestConfig(min_stars=10))
    assert [r.repo_id for r in repos] == ["a/java", "b/keep"]


def test_scan_is_sorted_and_skips_missing_checkouts(tmp_path, caplog):
    _write_repos(
        tmp_path,
        [
            {"owner_name": "o/r", "star_count": 50, "subject_language": "python"},
            {"owner_name": "o/missing", "star_count": 50, "subject_language": "python"},
        ],
    )
    for rel in ["z.py", "a/b.py", "a/a.py", "notes.txt", ".git/x.py"]:
        p = tmp_path / "o/r" / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text("x = 1\n")
    out = list(scan_repositories(tmp_path))
    assert [r.repo_id for r, _ in out] == ["o/r"]
    assert [f.rel_path for f in out[0][1]] == ["a/a.py", "a/b.py", "z.py"]
    assert "o/missing" in caplog.text


def _repos(n_py, n_java):
    return [RepoRecord(f"py{i:03d}", f"py{i:03d}", 20, Language.PYTHON, False, f"py{i}") for i in range(n_py)] + [
        RepoRecord(f"jv{i:03d}", f"jv{i:03d}", 20, Language.JAVA, False, f"jv{i}") for i in range(n_java)
    ]


def test_split_exact_counts_and_order_independent():
    repos = _repos(30, 12)
    a = assign_split(repos, 5, seed=3)
    shuffled = repos[:]
    random.Random(1).shuffle(shuffled)
    b = assign_split(shuffled, 5, seed=3)
    assert a == b
    for lang in Language:
        assert sum(r.split is Split.TEST for r in a if r.subject_language is lang) == 5
    assert assign_split(repos, 5, seed=4) != a


def test_split_pinned_counts_toward_quota():
    out = assign_split(_repos(10, 10), 3, seed=0, pinned_test=["py007"])
    tests = {r.repo_id for r in out if r.split is Split.TEST}
    assert "py007" in tests
    assert sum(t.startswith("py") for t in tests) == 3
    with pytest.raises(ValueError, match="not found"):
        assign_split(_repos(3, 3), 1, seed=0, pinned_test=["nope"])
    with pytest.raises(ValueError, match="requested"):
        assign_split(_repos(2, 5), 3, seed=0)


def test_load_files_detects_changed_content(tmp_path):
    (tmp_path / "r").mkdir()
    (tmp_path / "r/a.py").write_text("x = 1\n")
    sf = make_source_file("r", "a.py", Language.PYTHON, b"x = 1\n", content_ref="r/a.py")
    (tmp_path / "files.jsonl").write_text(json.dumps(sf.to_json()) + "\n")
    assert load_files(tmp_path / "files.jsonl", tmp_path) == [sf]
    (tmp_path / "r/a.py").write_text("x = 2\n")
    with pytest.raises(ValueError, match="changed"):
        load_files(tmp_path / "files.jsonl", tmp_path)
