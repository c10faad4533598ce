import pytest

from app.chem.graph import canonical_key
from app.chem.smiles import parse_smiles, write_smiles
from app.errors import SmilesParseError


class TestParse:
    def test_benzene_is_kekulized(self):
        benzene = parse_smiles("c1ccccc1")
        assert len(benzene) == 6
        assert sorted(b.order for b in benzene.bonds) == [1, 1, 1, 2, 2, 2]
        assert all(a.implicit_h == 1 for a in benzene.atoms)

    def test_aromatic_and_kekule_forms_agree(self):
        assert canonical_key(parse_smiles("c1ccccc1")) == canonical_key(parse_smiles("C1=CC=CC=C1"))
        assert canonical_key(parse_smiles("c1ccncc1")) == canonical_key(parse_smiles("C1=CC=NC=C1"))

    def test_pyrrole_hydrogen(self):
        pyrrole = parse_smiles("c1cc[nH]c1")
        nitrogen = next(a for a in pyrrole.atoms if a.element == "N")
        assert nitrogen.implicit_h == 1

    def test_biaryl_link_is_single(self):
        biphenyl = parse_smiles("c1ccc(cc1)c1ccccc1")
        assert biphenyl.bond_order(3, 6) == 1
        assert canonical_key(biphenyl) == canonical_key(parse_smiles("c1ccc(cc1)-c1ccccc1"))

    def test_exocyclic_carbonyl(self):
        caffeine = parse_smiles("Cn1cnc2c1c(=O)n(C)c(=O)n2C")
        assert len(caffeine) == 14

    def test_bracket_charge(self):
        graph = parse_smiles("C[N+](C)(C)C")
        assert graph.atoms[1].charge == 1
        assert graph.atoms[1].implicit_h == 0

    def test_percent_ring_label(self):
        assert canonical_key(parse_smiles("C%10CCCCC%10")) == canonical_key(parse_smiles("C1CCCCC1"))

    def test_stereo_is_dropped(self):
        assert canonical_key(parse_smiles("C[C@@H](O)F")) == canonical_key(parse_smiles("CC(O)F"))
        assert canonical_key(parse_smiles("F/C=C/F")) == canonical_key(parse_smiles("FC=CF"))

    def test_stereo_rejected_when_not_stripped(self):
        with pytest.raises(SmilesParseError):
            parse_smiles("C[C@@H](O)F", strip_stereo=False)

    @pytest.mark.parametrize("text,offset", [
        ("C1CC", 1),
        ("CC.O", 2),
        ("C=", 1),
        ("CX", 1),
        ("[13CH4]", 1),
        ("", 0),
    ])
    def test_errors_carry_offsets(self, text, offset):
        with pytest.raises(SmilesParseError) as info:
            parse_smiles(text)
        assert info.value.offset == offset

    @pytest.mark.parametrize("text", ["C(C", "C)C", "C(C)(C)(C)(C)C", "[CH2]", "c1cccc1", "C1CC1.C"])
    def test_rejected(self, text):
        with pytest.raises(SmilesParseError):
            parse_smiles(text)


class TestWrite:
    @pytest.mark.parametrize("smiles", [
        "CCO",
        "c1ccc2ccccc2c1",
        "C1CC2CCC1C2",
        "C[N+](C)(C)C",
        "CC(C)(C)NCC(O)c1ccc(O)c(CO)c1",
    ])
    def test_roundtrip(self, smiles):
        graph = parse_smiles(smiles)
        assert canonical_key(parse_smiles(write_smiles(graph))) == canonical_key(graph)

    def test_dataset_roundtrip(self, dataset):
        for graph in dataset.molecules:
            assert canonical_key(parse_smiles(write_smiles(graph))) == canonical_key(graph)

    def test_canonical_text_ignores_input_order(self):
        assert write_smiles(parse_smiles("OCC")) == write_smiles(parse_smiles("CCO"))
        assert write_smiles(parse_smiles("c1ccccc1O")) == write_smiles(parse_smiles("Oc1ccccc1"))
