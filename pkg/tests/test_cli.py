import csv
import io

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imdtm.cli import CSV_HEADER, RunConfig, main, parse_config, run, serialize_config
from imdtm.errors import ConfigError

REFERENCE = "equation = wave\nN = 16\nL = 18\ndt = 1\nsteps = 100\nH_stored = 14\nradius = 5\n"


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_HEADER
    return rows[1:]


def test_reference_configuration():
    cfg = parse_config(REFERENCE)
    assert cfg == RunConfig(equation="wave", N=16, L=18.0, dt=1.0, steps=100, H_stored=14, radius=5)
    assert cfg.stacking == "pairs" and cfg.record_every == 1 and cfg.scheme == "imdtm"


def test_comments_and_blank_lines():
    text = "# experiment\n\n" + REFERENCE.replace("N = 16", "N = 16   # points")
    assert parse_config(text).N == 16


def test_flags_only():
    flags = dict(equation="mkdv", N="78", L="43.875", dt="0.001", steps="10", H_stored="2", radius="5")
    cfg = parse_config("", flags)
    assert cfg.equation == "mkdv" and cfg.N == 78 and cfg.a_param is None


def test_flags_override_file():
    assert parse_config(REFERENCE, {"steps": "3"}).steps == 3


@pytest.mark.parametrize(
    "text,key",
    [
        ("radius = 0", "radius"),
        ("colour = blue", "colour"),
        ("N = sixteen", "N"),
        ("stacking = triples", "stacking"),
        ("max_order = 40", "max_order"),
        ("scheme = euler", "scheme"),
    ],
)
def test_errors_name_key_and_line(text, key):
    base = REFERENCE if key != "radius" else REFERENCE.replace("radius = 5\n", "")
    cfg_text = base + "# trailing entry\n" + text + "\n"
    line = cfg_text.splitlines().index(text) + 1
    with pytest.raises(ConfigError) as info:
        parse_config(cfg_text)
    assert info.value.key == key
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_missing_keys_and_bad_line():
    with pytest.raises(ConfigError, match="missing"):
        parse_config("equation = wave\n")
    with pytest.raises(ConfigError, match="line 2"):
        parse_config("equation = wave\nnonsense\n")


def test_grid_must_hold_stencil():
    with pytest.raises(ConfigError, match="key 'N'"):
        parse_config(REFERENCE.replace("N = 16", "N = 8"))


configs = st.builds(
    RunConfig,
    equation=st.sampled_from(["wave", "mkdv"]),
    N=st.integers(40, 500),
    L=st.floats(0.5, 1e3),
    dt=st.floats(1e-6, 10),
    steps=st.integers(0, 10**6),
    scheme=st.sampled_from(["imdtm", "rk4"]),
    H_stored=st.integers(1, 16),
    radius=st.integers(1, 6),
    stacking=st.sampled_from(["none", "pairs"]),
    max_order=st.none(),
    rk4_accuracy=st.sampled_from([2, 8]),
    a_param=st.one_of(st.none(), st.floats(1e-3, 2.0)),
    output_path=st.sampled_from(["-", "out.csv", "runs/a b.csv"]),
    record_every=st.integers(1, 100),
)


@settings(max_examples=100, deadline=None)
@given(configs)
def test_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


def test_run_zero_steps():
    out = io.StringIO()
    cfg = parse_config(REFERENCE, {"steps": "0"})
    assert run(cfg, out) == 0
    rows = read_csv(out.getvalue())
    assert len(rows) == 1
    assert rows[0][0] == "0" and float(rows[0][2]) <= -10
    assert float(rows[0][3]) <= -12


def test_run_writes_full_precision(tmp_path):
    path = tmp_path / "diag.csv"
    cfg = parse_config(REFERENCE, {"steps": "4", "record_every": "2", "output_path": str(path)})
    assert run(cfg) == 0
    rows = read_csv(path.read_text())
    assert [r[0] for r in rows] == ["0", "2", "4"]
    for r in rows:
        assert repr(float(r[2])) == r[2]


def test_rk4_has_empty_constraint_column():
    out = io.StringIO()
    cfg = parse_config("", dict(equation="mkdv", scheme="rk4", N="156", L="43.875", dt="0.001", steps="3"))
    assert run(cfg, out) == 0
    rows = read_csv(out.getvalue())
    assert len(rows) == 4 and all(r[3] == "" for r in rows)


def test_single_order_has_empty_constraint_column():
    out = io.StringIO()
    cfg = parse_config(REFERENCE, {"H_stored": "1", "radius": "3", "steps": "2"})
    assert run(cfg, out) == 0
    assert all(r[3] == "" for r in read_csv(out.getvalue()))


def test_mkdv_reference_run_completes(tmp_path):
    text = "equation = mkdv\nN = 78\nL = 43.875\ndt = 0.001\nsteps = 1000\nH_stored = 2\nradius = 5\nmax_order = 17\n"
    text += f"record_every = 250\noutput_path = {tmp_path / 'm.csv'}\n"
    assert run(parse_config(text)) == 0
    rows = read_csv((tmp_path / "m.csv").read_text())
    assert rows[-1][0] == "1000"
    assert float(rows[-1][2]) < -10


def test_divergence_exit_code(tmp_path, capsys):
    cfg_path = tmp_path / "unstable.cfg"
    cfg_path.write_text(REFERENCE.replace("steps = 100", "steps = 200") + "stacking = none\nrecord_every = 50\n")
    out = tmp_path / "u.csv"
    assert main(["run", "--config", str(cfg_path), "--output_path", str(out)]) == 2
    rows = read_csv(out.read_text())
    last = rows[-1]
    assert int(last[0]) < 200
    assert not float(last[2]) <= 0.0
    assert "diverged at step" in capsys.readouterr().err


def test_unwritable_output():
    cfg = parse_config(REFERENCE, {"output_path": "/nonexistent-dir/x.csv", "steps": "1"})
    assert run(cfg) == 1


def test_main_config_error(capsys, tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("radius = 0\n")
    assert main(["run", "--config", str(path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_main_missing_config_file(capsys):
    assert main(["run", "--config", "/nonexistent/file.cfg"]) == 1


def test_stencil_dump(capsys):
    assert main(["stencil", "dump", "--radius", "1", "--source-orders", "0", "--target-orders", "2"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["target_order", "neighbor_offset", "source_order", "weight"]
    weights = [float(r[3]) for r in rows[1:]]
    assert weights == pytest.approx([0.5, -1.0, 0.5])


def test_stencil_dump_ranges(capsys):
    assert main(["stencil", "dump", "--radius", "2", "--source-orders", "0-1", "--target-orders", "2,4-5"]) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))[1:]
    assert {int(r[0]) for r in rows} == {2, 4, 5}
    assert len(rows) == 3 * 5 * 2


def test_stencil_dump_capacity_error(capsys):
    assert main(["stencil", "dump", "--radius", "1", "--source-orders", "0", "--target-orders", "3"]) == 1
