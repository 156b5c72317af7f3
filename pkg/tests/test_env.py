from lib import env


def test_defaults_without_any_config(clean_config):
    config = env.get_config()
    assert config["GAMMAFLOW_DIGITS"] == env.DEFAULT_DIGITS
    assert config["GAMMAFLOW_MAX_DIGITS"] == env.DEFAULT_MAX_DIGITS
    assert config["GAMMAFLOW_OUTPUT_DIR"] is None
    assert config["_CONFIG_SOURCE"] == "env_only"


def test_load_env_file(tmp_path):
    path = tmp_path / ".env"
    path.write_text('# comment\nGAMMAFLOW_DIGITS=80\nGAMMAFLOW_OUTPUT_DIR="out dir"\nEMPTY=\nnot a pair\n')
    assert env.load_env_file(path) == {"GAMMAFLOW_DIGITS": "80", "GAMMAFLOW_OUTPUT_DIR": "out dir"}
    assert env.load_env_file(tmp_path / "missing") == {}
    assert env.load_env_file(None) == {}


def test_priority_env_over_project_over_global(clean_config, monkeypatch):
    global_file = clean_config / "global.env"
    global_file.write_text("GAMMAFLOW_DIGITS=60\nGAMMAFLOW_WORKERS=3\nGAMMAFLOW_MATCH_DIGITS=25\n")
    monkeypatch.setattr(env, "CONFIG_FILE", global_file)
    project = clean_config / ".gammaflow"
    project.mkdir()
    (project / "gammaflow.env").write_text("GAMMAFLOW_DIGITS=70\nGAMMAFLOW_WORKERS=2\n")
    monkeypatch.setenv("GAMMAFLOW_DIGITS", "90")

    config = env.get_config()
    assert config["GAMMAFLOW_DIGITS"] == 90
    assert config["GAMMAFLOW_WORKERS"] == 2
    assert config["GAMMAFLOW_MATCH_DIGITS"] == 25
    assert config["_CONFIG_SOURCE"].startswith("project:")


def test_project_file_found_from_a_subdirectory(clean_config, monkeypatch):
    project = clean_config / ".gammaflow"
    project.mkdir()
    (project / "gammaflow.env").write_text("GAMMAFLOW_MAX_DIGITS=500\n")
    sub = clean_config / "runs" / "p2"
    sub.mkdir(parents=True)
    monkeypatch.chdir(sub)
    assert env.get_config()["GAMMAFLOW_MAX_DIGITS"] == 500


def test_malformed_value_falls_back_with_a_warning(clean_config, monkeypatch, capsys):
    monkeypatch.setenv("GAMMAFLOW_WORKERS", "many")
    assert env.get_config()["GAMMAFLOW_WORKERS"] == env.DEFAULT_WORKERS
    assert "GAMMAFLOW_WORKERS" in capsys.readouterr().err
