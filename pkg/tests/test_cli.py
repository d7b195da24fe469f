import pytest

from deskteach.cli import main
from deskteach.store import Config, save_config


@pytest.fixture()
def light_config_path(tmp_path):
    path = tmp_path / "light.conf"
    save_config(Config(explorer_budget=5, explorer_k=2, aug_rotations=(0.0,),
                       aug_scales=(1.0,), aug_flip=False,
                       aug_backgrounds=((40, 40, 40),), aug_draws=1), path)
    return str(path)


def test_teach_script_happy_path(tmp_path, capsys, light_config_path):
    script = tmp_path / "teach.txt"
    script.write_text("start object registration\n"
                      "this is the gear\n"
                      "where is the gear?\n"
                      "list\n"
                      "quit\n")
    code = main(["teach", "--scene", "data/scenes/gear.scene",
                 "--config", light_config_path, "--script", str(script)])
    out = capsys.readouterr().out
    assert code == 0
    assert "view sphere: 91 viewpoints" in out
    assert "registered gear" in out
    assert "gear is here" in out


def test_teach_script_fails_nonzero(tmp_path, capsys, light_config_path):
    script = tmp_path / "bad.txt"
    script.write_text("where is the gear?\n")
    code = main(["teach", "--scene", "data/scenes/gear.scene",
                 "--config", light_config_path, "--script", str(script)])
    assert code == 1
    assert "no objects registered" in capsys.readouterr().out


def test_bench_subcommand_writes_csvs(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    agg = tmp_path / "agg.csv"
    code = main(["bench", "--objects", "1", "--budgets", "1", "--seeds", "0",
                 "--strategies", "random", "--raw", str(raw), "--agg", str(agg)])
    assert code == 0
    raw_lines = raw.read_text().splitlines()
    agg_lines = agg.read_text().splitlines()
    assert raw_lines[0].startswith("object,strategy,budget,seed")
    assert len(raw_lines) == 2
    assert agg_lines[0].startswith("strategy,budget,mean_accuracy")
    assert "wrote 1 raw rows" in capsys.readouterr().out


def test_make_scene_subcommand(tmp_path):
    out = tmp_path / "one.scene"
    assert main(["make-scene", "--objects", "2", "--index", "1",
                 "--out", str(out)]) == 0
    from deskteach.store import load_scene

    scene = load_scene(out)
    assert scene.objects[0].name.startswith("shaft")
