import json

import numpy as np
import pytest

from app.chem.sascore import (
    RAW_MAX,
    RAW_MIN,
    REFERENCE_SA_MEAN,
    REFERENCE_SA_STD,
    FragmentTable,
    bridgehead_and_spiro,
    fit_window,
    raw_sa_score,
    sa_score,
    scale_raw,
)
from app.chem.smiles import parse_smiles
from app.errors import DescriptorError


@pytest.fixture(scope="module")
def table(dataset):
    return FragmentTable.from_molecules(dataset.molecules)


class TestFragmentTable:
    def test_scores_follow_counts(self):
        fragments = FragmentTable({1: 50, 2: 40, 3: 10})
        assert fragments.threshold == 40
        assert fragments.score(1) > fragments.score(2) > fragments.score(3)
        assert fragments.score(2) == pytest.approx(0.0)
        assert fragments.score(3) == pytest.approx(np.log10(10 / 40))
        assert fragments.score(999) == pytest.approx(fragments.floor)
        assert fragments.floor < fragments.score(3)

    def test_default_window(self):
        fragments = FragmentTable({1: 5})
        assert fragments.window == (RAW_MIN, RAW_MAX)
        assert not fragments.calibrated

    def test_empty(self):
        with pytest.raises(DescriptorError):
            FragmentTable({})

    def test_empty_window(self):
        with pytest.raises(DescriptorError):
            FragmentTable({1: 5}, window=(1.0, 1.0))

    def test_save_and_load(self, table, tmp_path):
        path = tmp_path / "fragments.json"
        table.save(path)
        loaded = FragmentTable.load(path)
        assert loaded.counts == table.counts
        assert loaded.radius == table.radius
        assert loaded.window == pytest.approx(table.window)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DescriptorError):
            FragmentTable.load(tmp_path / "none.json")

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something-else", "version": 1, "counts": {"1": 2}}))
        with pytest.raises(DescriptorError):
            FragmentTable.load(path)

    def test_uncalibrated_version_is_rejected(self, tmp_path):
        path = tmp_path / "old.json"
        path.write_text(json.dumps({"format": "molga-fragments", "version": 1, "counts": {"1": 2}}))
        with pytest.raises(DescriptorError):
            FragmentTable.load(path)

    def test_bad_window(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format": "molga-fragments", "version": 2, "window": [1.0], "counts": {"1": 2}}))
        with pytest.raises(DescriptorError):
            FragmentTable.load(path)


class TestCalibration:
    def test_fit_window_reproduces_moments(self):
        raws = np.random.default_rng(0).normal(0.5, 1.3, size=500)
        window = fit_window(raws)
        scores = np.array([scale_raw(r, window) for r in raws])
        assert scores.mean() == pytest.approx(REFERENCE_SA_MEAN, abs=0.01)
        assert scores.std() == pytest.approx(REFERENCE_SA_STD, abs=0.01)

    def test_higher_raw_is_easier(self):
        window = fit_window([0.0, 1.0, 2.0, 3.0])
        assert scale_raw(0.0, window) > scale_raw(3.0, window)

    def test_no_spread(self):
        assert fit_window([1.0, 1.0, 1.0]) is None
        assert fit_window([1.0]) is None

    def test_flat_reference_keeps_default_window(self):
        ethanol = parse_smiles("CCO")
        assert FragmentTable.from_molecules([ethanol, ethanol]).window == (RAW_MIN, RAW_MAX)

    def test_uncalibrated_build(self, dataset):
        assert not FragmentTable.from_molecules(dataset.molecules, calibrate=False).calibrated

    def test_derived_table_is_calibrated(self, table):
        assert table.calibrated


class TestScore:
    def test_range_on_dataset(self, table, dataset):
        for graph in dataset.molecules:
            assert 1.0 <= sa_score(graph, table) <= 10.0

    def test_reference_statistics(self, table, dataset):
        scores = np.array([sa_score(graph, table) for graph in dataset.molecules])
        assert abs(scores.mean() - REFERENCE_SA_MEAN) <= 0.1 * REFERENCE_SA_MEAN
        assert abs(scores.std() - REFERENCE_SA_STD) <= 0.1 * REFERENCE_SA_STD

    def test_does_not_saturate(self, table, dataset):
        scores = np.array([sa_score(graph, table) for graph in dataset.molecules])
        assert (scores <= 1.0).mean() < 0.1
        small = [sa_score(parse_smiles(s), table) for s in ("CC", "c1ccccc1", "C" * 20)]
        assert len(set(small)) > 1

    def test_score_falls_as_raw_rises(self, table, dataset):
        graphs = dataset.molecules[:40]
        pairs = sorted((raw_sa_score(graph, table), sa_score(graph, table)) for graph in graphs)
        scores = [score for _, score in pairs]
        assert all(a >= b for a, b in zip(scores, scores[1:]))

    def test_needs_table(self):
        with pytest.raises(DescriptorError):
            sa_score(parse_smiles("CCO"), None)

    def test_deterministic(self, table):
        graph = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
        assert sa_score(graph, table) == sa_score(graph, table)


class TestRingTopology:
    def test_spiro(self):
        assert bridgehead_and_spiro(parse_smiles("C1CCC2(CC1)CCCC2")) == (0, 1)

    def test_bridged(self):
        assert bridgehead_and_spiro(parse_smiles("C1CC2CCC1C2")) == (2, 0)

    def test_fused_rings_have_neither(self):
        assert bridgehead_and_spiro(parse_smiles("c1ccc2ccccc2c1")) == (0, 0)
