import json
from datetime import datetime

import pytest

from app.errors import ConfigError
from app.experiments import spec as spec_module
from app.experiments.spec import RESOLVED_FILE, build_spec, merge, run_directory, write_resolved


class FrozenClock:
    @staticmethod
    def now():
        return datetime(2024, 1, 2, 3, 4, 5)


def _write(path, payload):
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


class TestBuildSpec:
    def test_flags_win_over_file(self, tmp_path):
        config = _write(tmp_path / "c.json", {"ga": {"generations": 7, "population_size": 30}, "repeats": 3})
        spec = build_spec("evolve", {"ga": {"generations": 2}}, config)
        assert spec.ga.generations == 2
        assert spec.ga.population_size == 30
        assert spec.repeats == 3
        assert spec.seeds == [0, 1, 2]

    def test_kind_comes_from_the_command(self, tmp_path):
        config = _write(tmp_path / "c.json", {"kind": "baseline"})
        assert build_spec("pareto", {}, config).kind == "pareto"

    def test_run_name_of_resolved_file_is_dropped(self, tmp_path):
        config = _write(tmp_path / "c.json", {"run_name": "old-run"})
        assert build_spec("evolve", {}, config).run_name is None

    def test_resolved_file_reproduces_spec(self, tmp_path):
        spec = build_spec("evolve", {"out": str(tmp_path), "ga": {"seed": 4, "schedule": {"kind": "time"}}})
        path = write_resolved(spec, tmp_path)
        assert build_spec("evolve", {}, path) == spec

    @pytest.mark.parametrize("overrides", [
        {"ga": {"population_size": 1}},
        {"repeats": 0},
        {"delta": 1.5},
        {"ga": {"schedule": {"kind": "cosine"}}},
    ])
    def test_invalid_values(self, overrides):
        with pytest.raises(ConfigError):
            build_spec("evolve", overrides)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            build_spec("evolve", {}, tmp_path / "missing.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ConfigError):
            build_spec("evolve", {}, path)

    def test_non_object(self, tmp_path):
        with pytest.raises(ConfigError):
            build_spec("evolve", {}, _write(tmp_path / "c.json", [1, 2]))


def test_merge_is_nested():
    base = {"ga": {"seed": 1, "schedule": {"kind": "time", "patience": 5}}, "repeats": 2}
    merged = merge(base, {"ga": {"schedule": {"patience": 9}}})
    assert merged == {"ga": {"seed": 1, "schedule": {"kind": "time", "patience": 9}}, "repeats": 2}
    assert base["ga"]["schedule"]["patience"] == 5


class TestRunDirectory:
    def test_timestamped_name_and_suffix(self, tmp_path, monkeypatch):
        monkeypatch.setattr(spec_module, "datetime", FrozenClock)
        spec = build_spec("evolve", {"out": str(tmp_path), "ga": {"seed": 3}})
        first = run_directory(spec)
        second = run_directory(spec)
        assert first.name == "evolve-20240102-030405-s3"
        assert second.name == "evolve-20240102-030405-s3-1"
        assert first.is_dir() and second.is_dir()

    def test_overwrite_reuses(self, tmp_path):
        spec = build_spec("baseline", {"out": str(tmp_path), "overwrite": True})
        assert run_directory(spec) == run_directory(spec) == tmp_path / "baseline-s0"

    def test_resolved_json_is_sorted(self, tmp_path):
        spec = build_spec("evolve", {"out": str(tmp_path)})
        write_resolved(spec, tmp_path)
        payload = json.loads((tmp_path / RESOLVED_FILE).read_text(encoding="utf-8"))
        assert list(payload) == sorted(payload)
        assert payload["kind"] == "evolve"
