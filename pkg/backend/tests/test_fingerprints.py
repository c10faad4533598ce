import numpy as np
import pytest

from app.chem.fingerprints import (
    Fingerprint,
    bulk_tanimoto,
    fraction_unique,
    internal_diversity,
    mean_pairwise_similarity,
    morgan_environments,
    morgan_fp,
    similarity_matrix,
    tanimoto,
)
from app.chem.smiles import parse_smiles
from app.errors import FingerprintError


def _brute_diversity(fps, include_diagonal):
    total, pairs = 0.0, 0
    for i, a in enumerate(fps):
        for j, b in enumerate(fps):
            if i == j and not include_diagonal:
                continue
            total += 1.0 - tanimoto(a, b)
            pairs += 1
    return total / pairs if pairs else 0.0


class TestMorgan:
    def test_deterministic_and_order_invariant(self):
        graph = parse_smiles("CC(=O)Oc1ccccc1C(=O)O")
        shuffled = graph.permuted([int(i) for i in np.random.default_rng(3).permutation(len(graph))])
        assert morgan_fp(graph) == morgan_fp(graph)
        assert morgan_fp(shuffled) == morgan_fp(graph)

    def test_radius_zero_counts_atom_types(self):
        environments = morgan_environments(parse_smiles("CCCC"), radius=0)
        assert sorted(environments.values()) == [2, 2]

    def test_duplicate_environments_are_counted_once(self):
        environments = morgan_environments(parse_smiles("CC"), radius=2)
        assert sorted(environments.values()) == [1, 2]

    def test_width_and_radius_travel_with_bits(self):
        fp = morgan_fp(parse_smiles("CCO"), radius=1, width=64)
        assert fp.width == 64 and fp.radius == 1
        assert 0 < fp.popcount <= 64

    def test_invalid_parameters(self):
        with pytest.raises(FingerprintError):
            morgan_fp(parse_smiles("C"), width=0)
        with pytest.raises(FingerprintError):
            morgan_fp(parse_smiles("C"), radius=-1)


class TestTanimoto:
    def test_identity_and_symmetry(self):
        a = morgan_fp(parse_smiles("CCO"))
        b = morgan_fp(parse_smiles("CCN"))
        assert tanimoto(a, a) == 1.0
        assert tanimoto(a, b) == tanimoto(b, a)
        assert 0.0 <= tanimoto(a, b) < 1.0

    def test_two_empty_vectors(self):
        empty = Fingerprint.from_bits([], width=16)
        assert tanimoto(empty, empty) == 1.0

    def test_hand_counted(self):
        a = Fingerprint.from_bits([0, 1, 2], width=8)
        b = Fingerprint.from_bits([1, 2, 3, 4], width=8)
        assert tanimoto(a, b) == pytest.approx(2 / 5)

    def test_width_mismatch(self):
        with pytest.raises(FingerprintError):
            tanimoto(Fingerprint.from_bits([1], width=8), Fingerprint.from_bits([1], width=16))

    def test_bulk_and_matrix_agree_with_pairwise(self, dataset):
        fps = [morgan_fp(m) for m in dataset.molecules[:20]]
        bulk = bulk_tanimoto(fps[0], fps)
        matrix = similarity_matrix(fps)
        for j, fp in enumerate(fps):
            assert bulk[j] == pytest.approx(tanimoto(fps[0], fp))
            assert matrix[3, j] == pytest.approx(tanimoto(fps[3], fp))


class TestDiversity:
    def test_matches_double_loop(self, dataset):
        fps = [morgan_fp(m) for m in dataset.molecules]
        rng = np.random.default_rng(11)
        for _ in range(50):
            size = int(rng.integers(1, 25))
            chosen = [fps[i] for i in rng.choice(len(fps), size=size, replace=False)]
            for diagonal in (True, False):
                expected = _brute_diversity(chosen, diagonal)
                assert internal_diversity(chosen, include_diagonal=diagonal) == pytest.approx(expected, abs=1e-12)

    def test_identical_set_has_zero_diversity(self):
        graph = parse_smiles("CCO")
        assert internal_diversity([graph, graph, graph]) == 0.0

    def test_empty_set(self):
        with pytest.raises(FingerprintError):
            internal_diversity([])

    def test_mean_pairwise_similarity(self):
        a, b = parse_smiles("CCO"), parse_smiles("CCN")
        assert mean_pairwise_similarity([a]) == 1.0
        assert mean_pairwise_similarity([a, b]) == pytest.approx(tanimoto(morgan_fp(a), morgan_fp(b)))

    def test_fraction_unique(self):
        ethanol = parse_smiles("CCO")
        population = [ethanol, parse_smiles("OCC"), parse_smiles("CO")]
        assert fraction_unique(population) == pytest.approx(2 / 3)
        with pytest.raises(FingerprintError):
            fraction_unique([])
