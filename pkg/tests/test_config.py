import pytest

from ccforce.config import ConfigError, ExperimentConfig, dump_defaults, dumps, from_dict, load, loads, to_dict


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    assert loads(dumps(cfg)) == cfg
    assert loads(dump_defaults()) == cfg
    assert from_dict(to_dict(cfg)) == cfg


def test_partial_documents_merge_onto_defaults():
    cfg = loads("seed: 7\nscene:\n  duration_s: 12.5\n  material: realistic\n")
    assert cfg.seed == 7 and cfg.scene.duration_s == 12.5
    assert cfg.scene.material.name == "realistic"
    assert cfg.contact == ExperimentConfig().contact


def test_negative_stiffness_names_field_and_line():
    text = "scene:\n  material:\n    k_true: {k_x: 1.0, k_y: -2.0, k_z_plus: 1.0, k_z_minus: 1.0}\n"
    with pytest.raises(ConfigError, match=r"k_y.*line 3"):
        loads(text)


def test_unknown_field_is_rejected():
    with pytest.raises(ConfigError, match="benchmark.n_tset"):
        loads("benchmark:\n  n_tset: 4\n")


@pytest.mark.parametrize(
    "text",
    [
        "seed: abc\n",
        "contact:\n  source: psychic\n",
        "benchmark:\n  methods: [F_PSM, Magic]\n",
        "scene:\n  workers: {flip_rate: 0.7}\n",
        "- just\n- a list\n",
    ],
)
def test_invalid_values_raise_config_error(text):
    with pytest.raises(ConfigError):
        loads(text)


def test_load_from_file(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text("seed: 3\n")
    assert load(path).seed == 3
    with pytest.raises(FileNotFoundError):
        load(tmp_path / "missing.yaml")
