import numpy as np
import pytest

import fockspec
from fockspec.model import validate
from fockspec.modelfile import ModelFileError, dump_model, load_model, parse_model

from conftest import random_points

MINIMAL = """\
[dims]
nu = 1
[w0]
0.5
[w1]
0 1.0 0.0
[w2]
term
left
0 1.0 0.0
right
0 2.0 0.0
"""


def same_spec(a, b, tol=0.0):
    x = random_points(0, 7, a.nu)
    y = random_points(1, 7, a.nu)
    assert a.nu == b.nu and a.w0 == b.w0
    for name in ("w1", "v0", "v1"):
        assert np.abs(getattr(a, name)(x) - getattr(b, name)(x)).max() <= tol, name
    for name in ("w2", "v2"):
        ka, kb = getattr(a, name), getattr(b, name)
        assert np.abs(ka.matrix(x, y) - kb.matrix(x, y)).max() <= tol, name


@pytest.mark.parametrize("name", ["cubic_cosine", "toy_chain", "decoupled_chain"])
def test_data_files_load_and_validate(name):
    spec = load_model(fockspec.data_path(f"{name}.model"))
    assert validate(spec).ok


def test_data_files_match_constructors(cubic, toy):
    same_spec(load_model(fockspec.data_path("cubic_cosine.model")), cubic)
    same_spec(load_model(fockspec.data_path("toy_chain.model")), toy)


@pytest.mark.parametrize("which", ["cubic", "toy", "free1"])
def test_round_trip_is_exact(which, request):
    spec = request.getfixturevalue(which)
    text = dump_model(spec)
    back = parse_model(text)
    same_spec(spec, back)
    assert dump_model(back) == text


def test_random_round_trip(random_chains):
    for spec in random_chains:
        same_spec(spec, parse_model(dump_model(spec)))


def test_minimal_file_defaults_to_zero_interactions():
    spec = parse_model(MINIMAL)
    x = random_points(2, 5, 1)
    assert np.all(spec.v0(x) == 0.0) and np.all(spec.v1(x) == 0.0)
    assert spec.v2.operator_eigenvalues().size == 0
    assert spec.w2.matrix(x)[0, 0] == 2.0


def test_comments_and_blank_lines_ignored():
    text = "# header\n\n" + MINIMAL.replace("0.5\n", "0.5   # energy\n\n")
    assert parse_model(text).w0 == 0.5


@pytest.mark.parametrize("text,section,line", [
    (MINIMAL.replace("[w1]\n0 1.0 0.0\n", ""), "w1", None),
    (MINIMAL.replace("0 1.0 0.0\n[w2]", "0 x 0.0\n[w2]"), "w1", 6),
    (MINIMAL.replace("0 1.0 0.0\n[w2]", "0 0 1.0 0.0\n[w2]"), "w1", 6),
    (MINIMAL.replace("0.5", "half"), "w0", 4),
    (MINIMAL.replace("nu = 1", "nu = 0"), "dims", 2),
    (MINIMAL.replace("nu = 1", "nu: 1"), "dims", 2),
    (MINIMAL + "[bogus]\n", "bogus", 13),
    (MINIMAL + "[w0]\n1.0\n", "w0", 13),
    (MINIMAL.replace("left\n", ""), "w2", None),
    (MINIMAL + "[v2]\n0 1.0 0.0\n", "v2", 14),
])
def test_errors_name_section_and_line(text, section, line):
    with pytest.raises(ModelFileError) as info:
        parse_model(text)
    assert info.value.section == section
    assert f"[{section}]" in str(info.value)
    if line is not None:
        assert info.value.line == line
        assert f"line {line}" in str(info.value)


def test_content_before_header():
    with pytest.raises(ModelFileError, match="before the first section"):
        parse_model("1.0\n" + MINIMAL)


def test_missing_file(tmp_path):
    with pytest.raises(ModelFileError, match="cannot read"):
        load_model(tmp_path / "absent.model")
