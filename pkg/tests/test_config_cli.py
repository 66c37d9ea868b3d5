import csv
import io
import json

import pytest

from uabs_hetnet.campaign import aggregate, read_results, read_table
from uabs_hetnet.cli import cmd_plotdata, main
from uabs_hetnet.config import PRESETS, ConfigError, parse_config, parse_text

QUICK = """\
# two tiny scenarios for CLI tests
region.width_m = 2000
region.height_m = 2000
run.drops = 2
grid.tau_db = [0, 6, 12]
grid.alpha = [0, 0.5]
grid.rho_db = [30]
grid.rho_prime_db = [-15]
ga.population_size = 6
ga.generations = 2
scenario.h.mode = "feicic"
scenario.h.deployment = "hex"
scenario.h.n_uabs = 3
scenario.h.destroyed_fraction = 0.5
scenario.g.mode = "eicic"
scenario.g.deployment = "ga"
scenario.g.n_uabs = 2
scenario.g.destroyed_fraction = 0.975
"""


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("SEED", "DROPS", "THREADS", "OUT", "FORMAT", "PRESET", "CONFIG"):
        monkeypatch.delenv("UABS_HETNET_" + name, raising=False)


@pytest.fixture
def quick_cfg(tmp_path):
    p = tmp_path / "quick.cfg"
    p.write_text(QUICK)
    return p


def test_empty_config_gives_defaults(tmp_path):
    p = tmp_path / "empty.cfg"
    p.write_text("")
    cfg = parse_config(p)
    assert cfg["power.mbs_dbm"] == 46.0 and cfg["power.uabs_dbm"] == 30.0
    assert cfg["power.pathloss_exponent"] == 4.0
    assert cfg["geometry.uabs_altitude_m"] == 121.92
    assert cfg["intensity.mbs_per_km2"] == 4.0 and cfg["intensity.ue_per_km2"] == 100.0
    assert cfg["icic.beta"] == 0.5
    ga = cfg.ga_settings()
    assert (ga.population_size, ga.generations, ga.crossover_prob, ga.mutation_prob) == (60, 100, 0.7, 0.1)
    s = cfg.settings()
    assert s.power_model.p_mbs == pytest.approx(39.810717, rel=1e-7) and s.power_model.p_uabs == 1.0


def test_alpha_out_of_range_names_alpha(tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("grid.alpha = [0.5, 1.5]\n")
    with pytest.raises(ConfigError, match="alpha") as e:
        parse_config(p)
    assert e.value.key == "grid.alpha"


@pytest.mark.parametrize("text, key", [
    ("bogus.key = 1\n", "bogus.key"),
    ("run.drops = 0\n", "run.drops"),
    ("run.drops = 2.5\n", "run.drops"),
    ('run.format = "xml"\n', "run.format"),
    ("power.k_mbs = true\n", "power.k_mbs"),
    ("run.seed = nope\n", "run.seed"),
    ('scenario.x.mode = "feicic"\n', "scenario.x.deployment"),
    ("ga.population_size = 4\nga.elitism = 4\n", "ga.elitism"),
])
def test_bad_values_name_the_key(tmp_path, text, key):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ConfigError) as e:
        parse_config(p)
    assert key in str(e.value)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.cfg")


def test_precedence_file_env_flag(quick_cfg):
    assert parse_config(quick_cfg)["run.drops"] == 2
    assert parse_config(quick_cfg, environ={"UABS_HETNET_DROPS": "5"})["run.drops"] == 5
    cfg = parse_config(quick_cfg, overrides={"run.drops": 7}, environ={"UABS_HETNET_DROPS": "5"})
    assert cfg["run.drops"] == 7
    # file beats preset
    assert parse_config(quick_cfg, preset="small")["region.width_m"] == 2000


def test_serialize_parse_fixed_point(quick_cfg):
    for cfg in (parse_config(quick_cfg), parse_config(preset="fig6-compare"), parse_config()):
        text = cfg.to_text()
        again = parse_config(overrides=parse_text(text))
        assert again.flat() == cfg.flat()
        assert again.to_text() == text


def test_presets_cover_the_three_families():
    assert {"fig4-hex-sweep", "fig5-ga", "fig6-compare", "small"} <= set(PRESETS)
    scs = parse_config(preset="fig4-hex-sweep").scenario_list()
    assert {s.mode.value for s in scs} == {"none", "eicic", "feicic"}
    assert {s.destroyed_fraction for s in scs} == {0.5, 0.975}
    assert all(s.deployment == "hex" for s in scs)


def test_validate_prints_resolved_config(quick_cfg, capsys):
    assert main(["validate", "--config", str(quick_cfg), "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "run.seed = 3\n" in out and "power.mbs_dbm = 46.0\n" in out


def test_cli_error_exit_names_field(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("grid.alpha = [2]\n")
    assert main(["validate", "--config", str(p)]) == 2
    assert "grid.alpha" in capsys.readouterr().err


def test_run_without_scenarios_fails(capsys):
    assert main(["run", "--dry-run"]) == 2
    assert "scenario" in capsys.readouterr().err


def test_dry_run_writes_nothing(quick_cfg, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(quick_cfg), "--out", str(out), "--dry-run"]) == 0
    assert not out.exists()
    text = capsys.readouterr().out
    assert "h:" in text and "g:" in text


def _without_wall(path):
    if path.suffix == ".json":
        rows = json.loads(path.read_text())
        return json.dumps([{k: v for k, v in r.items() if k != "wall_ms"} for r in rows])
    rows = list(csv.reader(io.StringIO(path.read_text())))
    if "wall_ms" not in rows[0]:
        return path.read_text()
    i = rows[0].index("wall_ms")
    return [r[:i] + r[i + 1:] for r in rows]


@pytest.mark.parametrize("fmt, ext", [("csv", "csv"), ("json-text", "json")])
def test_two_runs_identical(quick_cfg, tmp_path, capsys, fmt, ext):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "--config", str(quick_cfg), "--out", str(d), "--format", fmt]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(["results." + ext, "summary." + ext, "traces." + ext, "run_config.txt"])
    for n in names:
        if n == "run_config.txt":
            continue  # records the output directory itself
        assert _without_wall(a / n) == _without_wall(b / n)
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 4 and lines[0].startswith("h: median 5pSE")
    recs = read_results(a / ("results." + ext))
    assert len(recs) == 2 * 3 + 2  # hex: 3 τ values per drop; GA: one per drop


def test_seed_changes_results(quick_cfg, tmp_path, capsys):
    main(["run", "--config", str(quick_cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["run", "--config", str(quick_cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert _without_wall(tmp_path / "a/results.csv") != _without_wall(tmp_path / "b/results.csv")


@pytest.fixture
def results_file(quick_cfg, tmp_path):
    main(["run", "--config", str(quick_cfg), "--out", str(tmp_path / "run")])
    return tmp_path / "run" / "results.csv"


def test_plotdata_cre_series(results_file, tmp_path, capsys):
    paths = cmd_plotdata(results_file, "5pse_vs_cre", tmp_path / "pd")
    # one hex (mode, destruction) pair in the run
    assert [p.name for p in paths] == ["5pse_vs_cre_feicic_d500_n3.csv"]
    rows = read_table(paths[0])
    summary = [r for r in aggregate(read_results(results_file)) if r["deployment"] == "hex"]
    assert [float(r["cre_db"]) for r in rows] == [0.0, 6.0, 12.0]
    assert [float(r["median_5pse"]) for r in rows] == [r["median"] for r in summary]


def test_plotdata_peak_series(results_file, tmp_path):
    paths = cmd_plotdata(results_file, "peak_vs_nuabs", tmp_path / "pd")
    assert sorted(p.name for p in paths) == ["peak_vs_nuabs_ga_eicic_d975.csv", "peak_vs_nuabs_hex_feicic_d500.csv"]
    summary = aggregate(read_results(results_file))
    hex_peak = max(r["median"] for r in summary if r["deployment"] == "hex")
    rows = read_table(tmp_path / "pd" / "peak_vs_nuabs_hex_feicic_d500.csv")
    assert rows == [{"n_uabs": "3", "peak_median_5pse": repr(hex_peak)}]


def test_plotdata_rejections(results_file, tmp_path, capsys):
    with pytest.raises(ConfigError, match="5pse_vs_cre"):
        cmd_plotdata(results_file, "nope", tmp_path)
    empty = tmp_path / "empty.csv"
    empty.write_text(results_file.read_text().splitlines()[0] + "\n")
    with pytest.raises(ConfigError, match="no records"):
        cmd_plotdata(empty, "5pse_vs_cre", tmp_path)
    assert main(["plotdata", str(empty), "--series", "5pse_vs_cre", "--out", str(tmp_path)]) == 2
    assert main(["plotdata", str(results_file), "--series", "bad", "--out", str(tmp_path)]) == 2
    assert "peak_vs_nuabs" in capsys.readouterr().err
