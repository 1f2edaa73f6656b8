import csv
import textwrap

import numpy as np
import pytest

from lawson_nls.cli import main
from lawson_nls.config import ConfigError, RunConfig, exact_step_count, load_config, parse_config
from lawson_nls.experiments import read_snapshot, run_evolve

TURB = textwrap.dedent(
    """\
    grid:
      dim: 2
      bounds: [[-10, 10], [-10, 10]]
      nodes: [32, 32]
    model:
      equation: superfluid
      beta: 10
      c0: 1.0
    time:
      scheme: li-ei3
      tau: 2.0e-4
      t_end: 0.002
    initial:
      kind: random_phase
      seed: 7
    output:
      directory: OUT
      cadence: 2
      snapshot_times: [0.0, 0.001, 0.002]
    """
)


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_example():
    cfg = parse_config(TURB)
    assert cfg.dim == 2 and cfg.nodes == [32, 32] and cfg.seed == 7
    assert cfg.params.alpha == 0.5 and cfg.params.b == -10.0
    assert cfg.n_steps == 10


def test_round_trip():
    cfg = parse_config(TURB)
    assert parse_config(cfg.dumps()) == cfg
    default = RunConfig()
    assert parse_config(default.dumps()) == default


def test_standard_mapping():
    cfg = parse_config("model: {equation: standard, beta: 2}\n")
    assert cfg.params.alpha == 1.0 and cfg.params.b == 2.0


def test_step_count():
    # 0.3 / 2e-4 is 1499.9999999999998 in binary
    assert exact_step_count(0.3, 2e-4) == 1500
    with pytest.raises(ValueError):
        exact_step_count(0.3, 0.007)


@pytest.mark.parametrize(
    "old, new, line, key",
    [
        ("  dim: 2", "  dim: 4", 2, "grid.dim"),
        ("nodes: [32, 32]", "nodes: [32, 31]", 4, "grid.nodes"),
        ("scheme: li-ei3", "scheme: rk4", 10, "time.scheme"),
        ("tau: 2.0e-4", "tau: -1", 11, "time.tau"),
        ("t_end: 0.002", "t_end: 0.00025", 12, "time.t_end"),
        ("kind: random_phase", "kind: vortex", 14, "initial.kind"),
        ("cadence: 2", "cadence: 0", 18, "output.cadence"),
        ("[0.0, 0.001, 0.002]", "[0.0, 0.5]", 19, "output.snapshot_times"),
        ("  c0: 1.0", "  c0: 1.0\n  gamma: 3", 9, "model.gamma"),
    ],
)
def test_line_precise_errors(old, new, line, key):
    text = TURB.replace(old, new)
    with pytest.raises(ConfigError, match=rf"line {line}: .*{key}"):
        parse_config(text)


def test_malformed_and_missing(tmp_path):
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("grid: [")
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config("solver: {}\n")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.yaml")


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_cli_converge(tmp_path, capsys):
    rc = main(["converge", "--case", "planewave2d", "--scheme", "li-ei3", "--tau", "1/10,1/20",
               "--nodes", "16", "--t-end", "1", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_csv(tmp_path / "converge_planewave2d_li-ei3.csv")
    assert list(rows[0]) == ["tau", "l2_error", "l2_order", "linf_error", "linf_order"]
    assert float(rows[0]["tau"]) == 0.1 and rows[0]["l2_order"] in ("", "nan")
    assert 2.7 < float(rows[1]["l2_order"]) < 3.3
    assert "wrote" in capsys.readouterr().out


def test_cli_evolve_linear(tmp_path):
    # beta = 0: linear flow, the propagator is exact and mass is conserved to rounding
    cfg = RunConfig(dim=1, bounds=[[-40.0, 40.0]], nodes=[128], beta=0.0, tau=0.1, t_end=2.0,
                    cadence=5, output_dir=str(tmp_path))
    path = write(tmp_path, cfg.dumps())
    assert main(["evolve", "--config", str(path)]) == 0
    rows = read_csv(tmp_path / "invariants.csv")
    assert [float(r["t"]) for r in rows] == pytest.approx([0, 0.5, 1.0, 1.5, 2.0])
    assert max(float(r["rel_residual_mass"]) for r in rows) <= 1e-12


def test_evolve_plane_wave_modified_energy(tmp_path):
    cfg = RunConfig(dim=2, bounds=[[0.0, 2 * np.pi]] * 2, nodes=[16, 16], beta=-1.0, c0=0.0,
                    tau=0.005, t_end=1.0, initial={"kind": "plane_wave", "wavevector": [1.0, 1.0]},
                    cadence=20, output_dir=str(tmp_path))
    recs = run_evolve(cfg.validate())
    e0 = recs[0].modified_energy
    assert max(abs(r.modified_energy - e0) for r in recs) / max(1, abs(e0)) <= 1e-10


def test_cli_config_error(tmp_path, capsys):
    path = write(tmp_path, TURB.replace("beta: 10", "beta: .nan"))
    assert main(["evolve", "--config", str(path)]) == 2
    assert "model.beta" in capsys.readouterr().err


def test_cli_numeric_failure(tmp_path, capsys):
    # a huge focusing step blows the field up
    cfg = RunConfig(dim=1, bounds=[[-40.0, 40.0]], nodes=[64], beta=2000.0, c0=0.0, tau=5.0,
                    t_end=500.0, cadence=1, output_dir=str(tmp_path))
    path = write(tmp_path, cfg.dumps())
    rc = main(["evolve", "--config", str(path)])
    err = capsys.readouterr().err
    assert rc == 3, err
    assert "numerical failure" in err and "last recorded" in err


def test_cli_turbulence_snapshots(tmp_path):
    outs = []
    for name in ("a", "b"):
        text = TURB.replace("directory: OUT", f"directory: {tmp_path / name}")
        path = write(tmp_path, text, f"{name}.yaml")
        assert main(["turbulence", "--config", str(path), "--seed", "3"]) == 0
        outs.append(tmp_path / name)
    files = sorted(p.name for p in outs[0].glob("density_*.txt"))
    assert files == ["density_00000000.txt", "density_00000005.txt", "density_00000010.txt"]
    for f in files:
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    t, counts, rho = read_snapshot(outs[0] / files[0])
    assert t == 0.0 and counts == (32, 32)
    np.testing.assert_allclose(rho, 1.0, atol=1e-15)
    t, _, rho = read_snapshot(outs[0] / files[-1])
    assert t == pytest.approx(0.002) and np.all(np.isfinite(rho))
    rows = read_csv(outs[0] / "invariants.csv")
    assert float(rows[-1]["rel_residual_mod"]) <= 1e-12


def test_turbulence_requires_seed(tmp_path):
    text = TURB.replace("  seed: 7\n", "").replace("directory: OUT", f"directory: {tmp_path}")
    path = write(tmp_path, text)
    assert main(["turbulence", "--config", str(path)]) == 2
