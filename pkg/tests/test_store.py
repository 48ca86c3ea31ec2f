import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from siclab.analysis import verify_sic
from siclab.store import (
    CATALOG_SCHEMA,
    FormatError,
    SolutionRecord,
    catalog_append,
    format_fiducial,
    parse_fiducial,
    read_catalog,
    read_fiducial,
    write_fiducial,
)
from siclab.whgroup import make_context


def record(fiducial, d=2, **kw):
    return SolutionRecord(d, fiducial(d), label="a", cost_gap=1e-16, seed=7, trial=3, **kw)


def test_fiducial_file_layout(tmp_path, fiducial):
    path = write_fiducial(record(fiducial), tmp_path / "f.txt")
    lines = path.read_text().splitlines()
    assert lines[0] == "d 2"
    assert len([ln for ln in lines[1:] if not ln.startswith("#")]) == 2


def test_round_trip_bitwise(tmp_path, fiducial):
    rec = record(fiducial, 7, stabilizer_order=3, zauner_class=0)
    back = read_fiducial(write_fiducial(rec, tmp_path / "f.txt"))
    assert np.array_equal(back.vector, rec.vector)
    assert back.seed == 7 and back.trial == 3 and back.stabilizer_order == 3
    ctx = make_context(7)
    assert verify_sic(ctx, back.vector).max_overlap_deviation == verify_sic(ctx, rec.vector).max_overlap_deviation


def test_parse_without_metadata():
    rec = parse_fiducial("d 2\n1 0\n0 0\n")
    assert rec.d == 2 and rec.vector[0] == 1


@pytest.mark.parametrize("text", [
    "",
    "x 2\n1 0\n0 0\n",
    "d 0\n",
    "d 3\n1 0\n0 0\n",
    "d 2\n1 0\n0 0\n0 1\n",
    "d 2\n1 0\n0 nan\n",
    "d 2\n1 0\n0\n",
    "d 2\n1 0\nfoo 0\n",
    "d 2\n1 0\n0 0\n# meta {broken\n",
])
def test_malformed_files(text):
    with pytest.raises(FormatError):
        parse_fiducial(text)


def test_truncated_file(tmp_path, fiducial):
    path = write_fiducial(record(fiducial, 5), tmp_path / "f.txt")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:3]) + "\n")
    with pytest.raises(FormatError, match="component lines"):
        read_fiducial(path)
    with pytest.raises(FormatError):
        read_fiducial(tmp_path / "missing.txt")


def test_catalog_append_and_read(tmp_path, fiducial):
    path = tmp_path / "cat.jsonl"
    assert read_catalog(path) == []
    path.write_text("")
    assert read_catalog(path) == []
    for d in (2, 4, 5):
        catalog_append(record(fiducial, d), path)
    recs = read_catalog(path)
    assert [r.d for r in recs] == [2, 4, 5]
    assert np.array_equal(recs[-1].vector, fiducial(5))
    assert json.loads(path.read_text().splitlines()[0])["schema"] == CATALOG_SCHEMA


def test_catalog_concurrent_appends(tmp_path, fiducial):
    path = tmp_path / "cat.jsonl"
    recs = [record(fiducial, 8) for _ in range(64)]
    with ThreadPoolExecutor(8) as pool:
        list(pool.map(lambda r: catalog_append(r, path), recs))
    lines = path.read_text().splitlines()
    assert len(lines) == 64
    for ln in lines:
        json.loads(ln)


def test_catalog_skips_partial_tail(tmp_path, fiducial):
    path = tmp_path / "cat.jsonl"
    catalog_append(record(fiducial), path)
    with path.open("a") as fh:
        fh.write('{"schema": "siclab.solution/1", "d": 2, "vec')
    assert len(read_catalog(path)) == 1


def test_catalog_rejects_unknown_schema(tmp_path, fiducial):
    obj = record(fiducial).to_json()
    obj["schema"] = "other/9"
    with pytest.raises(FormatError):
        SolutionRecord.from_json(obj)


def test_record_validation():
    with pytest.raises(FormatError):
        SolutionRecord(3, np.zeros(2))
    with pytest.raises(FormatError):
        SolutionRecord(2, np.array([np.inf, 0]))


def test_format_uses_round_trip_repr(fiducial):
    rec = record(fiducial)
    body = format_fiducial(rec).splitlines()[1]
    re, im = body.split()
    assert float(re) == rec.vector[0].real and float(im) == rec.vector[0].imag
