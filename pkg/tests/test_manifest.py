import pytest

from vidvote.errors import FormatError, ValidationError
from vidvote.manifest import (
    NEGATIVE,
    POSITIVE,
    DatasetManifest,
    ManifestEntry,
    load_manifest,
    save_manifest,
)


def entries():
    return [
        ManifestEntry("a", "/data/a.y4m", POSITIVE, "porn"),
        ManifestEntry("b", "/data/b.y4m", NEGATIVE, ""),
        ManifestEntry("c", "/data/c.y4m", NEGATIVE, "easy"),
    ]


def test_roundtrip(tmp_path):
    path = tmp_path / "m.csv"
    save_manifest(path, entries())
    man = load_manifest(path)
    assert [e.video_id for e in man] == ["a", "b", "c"]
    assert man.entry("a").label == POSITIVE
    assert man.entry("c").subgroup == "easy"


def test_label_to_sign():
    assert ManifestEntry("x", "p", POSITIVE).y == 1
    assert ManifestEntry("x", "p", NEGATIVE).y == -1


def test_bad_label_rejected():
    with pytest.raises(ValidationError):
        ManifestEntry("x", "p", "maybe")


def test_duplicate_ids_rejected():
    dup = entries() + [ManifestEntry("a", "/other", NEGATIVE)]
    with pytest.raises(ValidationError):
        DatasetManifest(tuple(dup))


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("video_id,path,label,subgroup\nv1,/p,pos,\nv2,/p\n")
    with pytest.raises(FormatError) as err:
        load_manifest(path)
    assert "line 3" in str(err.value)


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("id,file,y\nv1,/p,pos\n")
    with pytest.raises(FormatError):
        load_manifest(path)


def test_load_rejects_empty_file(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("")
    with pytest.raises(FormatError):
        load_manifest(path)


def test_label_counts_and_subset():
    man = DatasetManifest(tuple(entries()))
    assert man.label_counts() == (1, 2)
    sub = man.subset(["c", "a"])
    assert [e.video_id for e in sub] == ["a", "c"]


def test_require_both_labels():
    only_neg = DatasetManifest(tuple(e for e in entries() if e.label == NEGATIVE))
    with pytest.raises(ValidationError):
        only_neg.require_both_labels()
