"""
Wildman-Crippen logP: atom typing by local environment plus per-type
contributions, implicit hydrogens included.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from app.chem.graph import MoleculeGraph

logger = logging.getLogger(__name__)

CONTRIBUTIONS: Dict[str, float] = {
    # carbon
    "C1": 0.1441, "C2": 0.0000, "C3": -0.2035, "C4": -0.2051, "C5": -0.2783,
    "C6": 0.1551, "C7": 0.0017, "C8": 0.08452, "C9": -0.1444, "C10": -0.0516,
    "C11": 0.1193, "C12": -0.0967, "C13": -0.5443, "C14": 0.0000, "C15": 0.2450,
    "C16": 0.1980, "C18": 0.1581, "C19": 0.2955, "C20": 0.2713, "C21": 0.1360,
    "C22": 0.4619, "C23": 0.5437, "C24": 0.1893, "C25": -0.8186, "C26": 0.2640,
    "CS": 0.08129,
    # hydrogen
    "H1": 0.1230, "H2": -0.2677, "H3": 0.2142, "H4": 0.2980, "HS": 0.1125,
    # nitrogen
    "N1": -1.0190, "N2": -0.7096, "N3": -1.0270, "N4": -0.5188, "N5": 0.08387,
    "N6": 0.1836, "N7": -0.3187, "N8": -0.4458, "N9": 0.01508, "N10": -1.9500,
    "N11": -0.3239, "N12": -1.1190, "N13": -0.3396, "N14": 0.2887, "NS": -0.4806,
    # oxygen
    "O1": 0.1552, "O2": -0.2893, "O3": -0.0684, "O4": -0.4195, "O5": 0.0335,
    "O6": -0.3339, "O7": -1.1890, "O8": 0.1788, "O9": -0.1526, "O10": 0.1129,
    "O11": 0.4833, "O12": -1.3260, "OS": -0.1188,
    # the rest
    "F": 0.4202, "Cl": 0.6895, "Br": 0.8456, "P": 0.8612,
    "S1": 0.6482, "S2": -0.0024, "S3": 0.6237,
}

GENERIC = {"C": "CS", "N": "NS", "O": "OS"}
HETERO = ("N", "O", "P", "S", "F", "Cl", "Br")

_reported: set = set()


@dataclass(frozen=True)
class _Neighbor:
    index: int
    element: str
    aromatic: bool
    bond: object  # 1, 2, 3 or "ar"
    h: int

    @property
    def aliphatic(self) -> bool:
        return not self.aromatic

    @property
    def plain(self) -> bool:
        """Bond matched by an unspecified SMARTS bond (single or aromatic)"""
        return self.bond in (1, "ar")


class _Context:
    def __init__(self, mol: MoleculeGraph, index: int):
        aromatic = mol.aromatic_atoms
        self.index = index
        atom = mol.atoms[index]
        self.element = atom.element
        self.charge = atom.charge
        self.h = atom.implicit_h
        self.aromatic = index in aromatic
        self.neighbors: List[_Neighbor] = []
        for j, order in mol.neighbors(index):
            bond = "ar" if mol.is_aromatic_bond(index, j) else order
            self.neighbors.append(
                _Neighbor(j, mol.atoms[j].element, j in aromatic, bond, mol.atoms[j].implicit_h)
            )

    @property
    def degree(self) -> int:
        return len(self.neighbors)

    @property
    def connectivity(self) -> int:
        return self.degree + self.h

    def count(self, predicate) -> int:
        return sum(1 for n in self.neighbors if predicate(n))

    def any(self, predicate) -> bool:
        return any(predicate(n) for n in self.neighbors)


def _aliphatic_carbon(ctx: _Context) -> Optional[str]:
    h, x = ctx.h, ctx.connectivity
    single_aliphatic_c = ctx.count(lambda n: n.element == "C" and n.aliphatic and n.plain)
    single_aliphatic = ctx.count(lambda n: n.aliphatic and n.plain)
    hetero = ctx.count(lambda n: n.element in HETERO and n.aliphatic and n.plain)
    all_single_aliphatic = single_aliphatic == ctx.degree

    if h == 4:
        return "C1"
    if h == 3 and single_aliphatic_c == 1:
        return "C1"
    if h == 2 and single_aliphatic_c >= 2:
        return "C1"
    if (h == 1 and single_aliphatic_c >= 3) or (h == 0 and single_aliphatic_c >= 4):
        return "C2"
    if h == 3 and hetero >= 1:
        return "C3"
    if h == 2 and x == 4 and hetero >= 1 and single_aliphatic >= 2:
        return "C3"
    if h == 1 and x == 4 and hetero >= 1 and all_single_aliphatic and ctx.degree >= 3:
        return "C4"
    if h == 0 and x == 4 and hetero >= 1 and all_single_aliphatic and ctx.degree >= 4:
        return "C4"
    if ctx.any(lambda n: n.bond == 2 and n.element != "C" and n.aliphatic):
        return "C5"

    double_c = [n for n in ctx.neighbors if n.bond == 2 and n.element == "C" and n.aliphatic]
    if double_c:
        others = [n for n in ctx.neighbors if n is not double_c[0]]
        if h == 2:
            return "C6"
        if h == 1 and any(n.aliphatic and n.plain for n in others):
            return "C6"
        if h == 0 and sum(1 for n in others if n.aliphatic and n.plain) >= 2:
            return "C6"
        if len(double_c) >= 2:
            return "C6"
    if x == 2 and ctx.any(lambda n: n.bond == 3 and n.aliphatic):
        return "C7"

    aromatic_nbrs = [n for n in ctx.neighbors if n.aromatic and n.plain]
    if aromatic_nbrs:
        if h == 3:
            return "C8" if aromatic_nbrs[0].element == "C" else "C9"
        if x == 4:
            return {2: "C10", 1: "C11", 0: "C12"}.get(h)

    if double_c or ctx.any(lambda n: n.bond == 2 and n.aromatic):
        # C=C with an aromatic substituent, or exocyclic C=c
        if ctx.any(lambda n: n.bond == 2 and n.aromatic):
            return "C26"
        if aromatic_nbrs:
            return "C26"
    return None


def _aromatic_carbon(ctx: _Context) -> Optional[str]:
    if ctx.h == 0 and ctx.any(lambda n: n.bond == 1 and n.aliphatic and n.element == "P"):
        return "C13"
    for n in ctx.neighbors:
        if n.element == "F":
            return "C14"
        if n.element == "Cl":
            return "C15"
        if n.element == "Br":
            return "C16"
    if ctx.h == 1:
        return "C18"
    ring_bonds = ctx.count(lambda n: n.bond == "ar")
    if ring_bonds >= 3:
        return "C19"
    if ring_bonds == 2:
        exocyclic = [n for n in ctx.neighbors if n.bond != "ar"]
        for n in exocyclic:
            if n.bond == 1 and n.aromatic:
                return "C20"
            if n.bond == 1 and n.aliphatic:
                return {"C": "C21", "N": "C22", "O": "C23", "S": "C24"}.get(n.element)
            if n.bond == 2 and n.aliphatic and n.element in ("C", "N", "O"):
                return "C25"
    return None


def _carbon(ctx: _Context) -> Optional[str]:
    return _aromatic_carbon(ctx) if ctx.aromatic else _aliphatic_carbon(ctx)


def _nitrogen(ctx: _Context) -> Optional[str]:
    if ctx.charge == 0:
        if ctx.aromatic:
            return "N11"
        plain = [n for n in ctx.neighbors if n.plain]
        if ctx.h == 2 and plain:
            return "N1" if plain[0].aliphatic else "N3"
        if ctx.h == 1:
            if len(plain) >= 2 and all(n.aliphatic for n in plain):
                return "N2"
            if len(plain) >= 2:
                return "N4"
            if ctx.any(lambda n: n.bond == 2):
                return "N5"
        if ctx.h == 0:
            if ctx.any(lambda n: n.bond == 2) and len(plain) >= 1:
                return "N6"
            if len(plain) >= 3:
                return "N7" if all(n.aliphatic for n in plain) else "N8"
            if ctx.any(lambda n: n.bond == 3 and n.aliphatic):
                return "N9"
        return None
    if ctx.charge > 0:
        if ctx.aromatic:
            return "N12"
        if ctx.h >= 1:
            return "N10"
        if ctx.count(lambda n: n.bond == 1 and n.aliphatic) >= 4:
            return "N13"
        if ctx.any(lambda n: n.bond == 2) and ctx.degree >= 3:
            return "N13"
        if ctx.count(lambda n: n.bond == 2) >= 2:
            return "N13"
        if ctx.any(lambda n: n.bond == 3):
            return "N14"
        return None
    return "N14"


def _carbonyl_oxygen(ctx: _Context, mol: MoleculeGraph, carbon: _Neighbor) -> Optional[str]:
    others = [
        _Neighbor(j, mol.atoms[j].element, j in mol.aromatic_atoms,
                  "ar" if mol.is_aromatic_bond(carbon.index, j) else order, mol.atoms[j].implicit_h)
        for j, order in mol.neighbors(carbon.index)
        if j != ctx.index
    ]
    plain = [n for n in others if n.plain]
    aliphatic_c = [n for n in plain if n.element == "C" and n.aliphatic]
    aliphatic = [n for n in plain if n.aliphatic]
    if carbon.h == 2:
        return "O9"
    if carbon.h == 1 and plain and plain[0].aliphatic and plain[0].element in ("C", "N", "O"):
        return "O9"
    if len(aliphatic_c) >= 1 and len(aliphatic) >= 2:
        return "O9"
    if any(n.bond == 2 and n.element == "O" for n in others):
        return "O9"
    if carbon.h == 1 and plain and plain[0].aromatic and plain[0].element == "C":
        return "O10"
    if any(n.aromatic for n in plain) and any(n.element == "C" for n in plain) and len(plain) >= 2:
        return "O10"
    if len(plain) >= 2 and all(n.element != "C" for n in plain):
        return "O11"
    return None


def _oxygen(ctx: _Context, mol: MoleculeGraph) -> Optional[str]:
    if ctx.aromatic:
        return "O1"
    if ctx.charge == 0:
        if ctx.h >= 1:
            return "O2"
        plain = [n for n in ctx.neighbors if n.plain]
        if len(plain) >= 2:
            return "O3" if all(n.aliphatic for n in plain) else "O4"
        double = [n for n in ctx.neighbors if n.bond == 2]
        if double:
            partner = double[0]
            if partner.element in ("N", "O"):
                return "O5"
            if partner.element == "C" and partner.aromatic:
                return "O8"
            if partner.element == "C":
                return _carbonyl_oxygen(ctx, mol, partner)
        return None
    if ctx.charge < 0 and ctx.degree == 1:
        partner = ctx.neighbors[0]
        if partner.element == "N":
            return "O5"
        if partner.element == "S":
            return "O6"
        if partner.element == "C":
            carbonyl = any(
                order == 2 and mol.atoms[j].element == "O" for j, order in mol.neighbors(partner.index)
            )
            return "O12" if carbonyl else "O7"
    return None


def _heavy_type(mol: MoleculeGraph, index: int) -> Tuple[str, bool]:
    """(type, typed) where typed is False for the generic fallback"""
    ctx = _Context(mol, index)
    element = ctx.element
    if element == "C":
        found = _carbon(ctx)
    elif element == "N":
        found = _nitrogen(ctx)
    elif element == "O":
        found = _oxygen(ctx, mol)
    elif element == "S":
        found = "S3" if ctx.aromatic else ("S1" if ctx.charge == 0 else "S2")
    else:
        found = element
    if found is None:
        return GENERIC[element], False
    return found, True


def _hydrogen_type(mol: MoleculeGraph, index: int) -> str:
    atom = mol.atoms[index]
    if atom.element == "C":
        return "H1"
    if atom.element == "N":
        return "H3"
    if atom.element != "O":
        return "H2"
    neighbors = mol.neighbors(index)
    if not neighbors:
        return "HS"
    j, _ = neighbors[0]
    partner = mol.atoms[j]
    if partner.element == "C":
        if j in mol.aromatic_atoms:
            return "H2"
        if mol.degree(j) + partner.implicit_h == 4:
            return "H2"
        if any(order == 2 and mol.atoms[k].element in ("C", "N", "O", "S") for k, order in mol.neighbors(j)):
            return "H4"
        return "HS"
    if partner.element == "N":
        return "H3"
    if partner.element in ("O", "S"):
        return "H4"
    return "H2"


def atom_types(mol: MoleculeGraph) -> List[Tuple[str, Optional[str]]]:
    """(heavy-atom type, hydrogen type or None) per atom"""
    types = []
    for index, atom in enumerate(mol.atoms):
        heavy, typed = _heavy_type(mol, index)
        if not typed:
            signature = (atom.element, atom.charge, atom.implicit_h, mol.degree(index))
            if signature not in _reported:
                _reported.add(signature)
                logger.warning(
                    f"⚠️  [Crippen] No specific type for {atom.element} "
                    f"(charge {atom.charge}, H {atom.implicit_h}, degree {mol.degree(index)}), "
                    f"using generic {heavy}"
                )
        types.append((heavy, _hydrogen_type(mol, index) if atom.implicit_h else None))
    return types


def atom_contributions(mol: MoleculeGraph) -> List[float]:
    """Per-atom logP contribution including the atom's implicit hydrogens"""
    out = []
    for (heavy, h_type), atom in zip(atom_types(mol), mol.atoms):
        value = CONTRIBUTIONS[heavy]
        if h_type is not None:
            value += atom.implicit_h * CONTRIBUTIONS[h_type]
        out.append(value)
    return out


def crippen_logp(mol: MoleculeGraph) -> float:
    return float(sum(atom_contributions(mol)))
