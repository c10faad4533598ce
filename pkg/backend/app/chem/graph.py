"""
Molecular graph: atoms, bonds, valence bookkeeping, ring perception and
canonical ranking.

Hydrogens are always implicit. The max-valence table is the bonding capacity
of each element; implicit hydrogens fill an atom up to the smallest allowed
valence that covers its bond-order sum.
"""

import hashlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx

from app.errors import ValenceError

MAX_VALENCE: Dict[str, int] = {
    "C": 4, "N": 3, "O": 2, "F": 1, "Cl": 1, "Br": 1, "S": 6, "P": 5,
}

ALLOWED_VALENCES: Dict[str, Tuple[int, ...]] = {
    "C": (4,), "N": (3,), "O": (2,), "F": (1,), "Cl": (1,), "Br": (1,),
    "S": (2, 4, 6), "P": (3, 5),
}

# isoelectronic valence sets for the charged atoms found in drug-like data
CHARGED_VALENCES: Dict[Tuple[str, int], Tuple[int, ...]] = {
    ("C", 1): (3,), ("C", -1): (3,),
    ("N", 1): (4,), ("N", -1): (2,),
    ("O", 1): (3,), ("O", -1): (1,),
    ("S", 1): (3, 5), ("S", -1): (1, 3, 5),
    ("P", 1): (4,),
    ("F", -1): (0,), ("Cl", -1): (0,), ("Br", -1): (0,),
}

ELEMENTS: Tuple[str, ...] = tuple(MAX_VALENCE)
BOND_ORDERS = (1, 2, 3)


def allowed_valences(element: str, charge: int = 0) -> Tuple[int, ...]:
    """Valence states an atom may take"""
    if element not in MAX_VALENCE:
        raise ValenceError(f"unsupported element {element!r}")
    if charge == 0:
        return ALLOWED_VALENCES[element]
    try:
        return CHARGED_VALENCES[(element, charge)]
    except KeyError:
        raise ValenceError(f"unsupported charge {charge:+d} on {element}") from None


def max_valence(element: str, charge: int = 0) -> int:
    """Bonding capacity of an atom"""
    if charge == 0:
        return MAX_VALENCE[element]
    return max(allowed_valences(element, charge))


def hydrogen_fill(element: str, charge: int, bond_sum: int) -> int:
    """Implicit hydrogens for an atom with the given bond-order sum.

    The atom is filled up to the smallest allowed valence that holds its
    bonds, the SMILES organic-subset rule. For single-valence elements this is
    max valence minus bond sum. S and P have several states, so a thiol sulfur
    gets one H rather than five, CS(C)=O gets none and PH3 stays PH3. Their
    max valence (6, 5) only bounds how many bonds they may carry.
    """
    for valence in allowed_valences(element, charge):
        if valence >= bond_sum:
            return valence - bond_sum
    return 0


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    implicit_h: int = 0


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: int = 1

    def other(self, index: int) -> int:
        return self.end if index == self.begin else self.begin


class MoleculeGraph:
    """Immutable molecule graph; derived data is computed lazily and cached"""

    def __init__(self, atoms: Sequence[Atom], bonds: Sequence[Bond]):
        self.atoms: Tuple[Atom, ...] = tuple(atoms)
        self.bonds: Tuple[Bond, ...] = tuple(bonds)
        n = len(self.atoms)
        adjacency: List[List[Tuple[int, int]]] = [[] for _ in range(n)]
        for bond in self.bonds:
            if not (0 <= bond.begin < n and 0 <= bond.end < n):
                raise ValueError(f"bond {bond} references a missing atom")
            adjacency[bond.begin].append((bond.end, bond.order))
            if bond.end != bond.begin:
                adjacency[bond.end].append((bond.begin, bond.order))
        self.adjacency: Tuple[Tuple[Tuple[int, int], ...], ...] = tuple(
            tuple(sorted(entries)) for entries in adjacency
        )

    @classmethod
    def build(
        cls,
        elements: Sequence[str],
        bonds: Iterable[Tuple[int, int, int]],
        charges: Optional[Sequence[int]] = None,
    ) -> "MoleculeGraph":
        """Create a graph and fill implicit hydrogens from the valence rules"""
        bond_list = [Bond(a, b, order) for a, b, order in bonds]
        charges = list(charges) if charges is not None else [0] * len(elements)
        bond_sum = [0] * len(elements)
        for bond in bond_list:
            bond_sum[bond.begin] += bond.order
            bond_sum[bond.end] += bond.order
        atoms = []
        for index, element in enumerate(elements):
            h = hydrogen_fill(element, charges[index], bond_sum[index]) if element in MAX_VALENCE else 0
            atoms.append(Atom(element, charges[index], h))
        return cls(atoms, bond_list)

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        return f"MoleculeGraph(atoms={len(self.atoms)}, bonds={len(self.bonds)})"

    def neighbors(self, index: int) -> Tuple[Tuple[int, int], ...]:
        """(neighbor index, bond order) pairs of an atom"""
        return self.adjacency[index]

    def degree(self, index: int) -> int:
        return len(self.adjacency[index])

    def bond_order_sum(self, index: int) -> int:
        return sum(order for _, order in self.adjacency[index])

    @cached_property
    def _bond_lookup(self) -> Dict[FrozenSet[int], int]:
        return {frozenset((b.begin, b.end)): b.order for b in self.bonds}

    def bond_order(self, a: int, b: int) -> Optional[int]:
        return self._bond_lookup.get(frozenset((a, b)))

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        for index, atom in enumerate(self.atoms):
            graph.add_node(index, element=atom.element, charge=atom.charge, h=atom.implicit_h)
        for bond in self.bonds:
            graph.add_edge(bond.begin, bond.end, order=bond.order)
        return graph

    def permuted(self, order: Sequence[int]) -> "MoleculeGraph":
        """Same molecule with atom order[k] moved to position k"""
        position = {old: new for new, old in enumerate(order)}
        atoms = [self.atoms[old] for old in order]
        bonds = [Bond(position[b.begin], position[b.end], b.order) for b in self.bonds]
        return MoleculeGraph(atoms, bonds)

    # ---- rings -------------------------------------------------------------

    @cached_property
    def cycle_rank(self) -> int:
        parent = list(range(len(self.atoms)))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        components = len(self.atoms)
        for bond in self.bonds:
            ra, rb = find(bond.begin), find(bond.end)
            if ra != rb:
                parent[ra] = rb
                components -= 1
        return len(self.bonds) - len(self.atoms) + components

    @cached_property
    def rings(self) -> Tuple[FrozenSet[int], ...]:
        """Cycles of a minimum cycle basis, smallest first"""
        if self.cycle_rank <= 0:
            return ()
        basis = nx.minimum_cycle_basis(self.to_networkx())
        return tuple(sorted((frozenset(c) for c in basis), key=lambda r: (len(r), sorted(r))))

    @cached_property
    def ring_atoms(self) -> FrozenSet[int]:
        members: set = set()
        for ring in self.rings:
            members |= ring
        return frozenset(members)

    def ring_bonds(self, ring: FrozenSet[int]) -> List[Tuple[int, int]]:
        """Bonds of a basis ring (basis rings are chordless, so induced edges)"""
        return [(b.begin, b.end) for b in self.bonds if b.begin in ring and b.end in ring]

    @cached_property
    def _aromaticity(self) -> Tuple[FrozenSet[int], FrozenSet[FrozenSet[int]]]:
        atoms: set = set()
        bonds: set = set()
        for ring in self.rings:
            if len(ring) < 5:
                continue
            electrons = 0
            for index in ring:
                contribution = self._pi_electrons(index)
                if contribution is None:
                    break
                electrons += contribution
            else:
                if electrons % 4 == 2:
                    atoms |= ring
                    bonds.update(frozenset(pair) for pair in self.ring_bonds(ring))
        return frozenset(atoms), frozenset(bonds)

    def _pi_electrons(self, index: int) -> Optional[int]:
        atom = self.atoms[index]
        doubles = [(j, o) for j, o in self.adjacency[index] if o == 2]
        if any(o == 3 for _, o in self.adjacency[index]) or len(doubles) > 1:
            return None
        if doubles:
            partner = doubles[0][0]
            if partner in self.ring_atoms:
                return 1
            if atom.element == "C" and self.atoms[partner].element in ("O", "N", "S"):
                return 0
            return None
        if atom.charge == 0 and atom.element in ("N", "P") and self.bond_order_sum(index) + atom.implicit_h == 3:
            return 2
        if atom.charge == 0 and atom.element in ("O", "S") and self.bond_order_sum(index) == 2:
            return 2
        return None

    @property
    def aromatic_atoms(self) -> FrozenSet[int]:
        """Atoms in rings passing the 4n+2 electron count"""
        return self._aromaticity[0]

    def is_aromatic_bond(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self._aromaticity[1]

    # ---- canonical form ----------------------------------------------------

    @cached_property
    def _canonical(self) -> Tuple[str, Tuple[int, ...]]:
        if not self.atoms:
            return "", ()
        initial = [
            (atom.element, atom.charge, self.degree(i), atom.implicit_h,
             tuple(sorted(o for _, o in self.adjacency[i])))
            for i, atom in enumerate(self.atoms)
        ]
        serial, ranks = self._search(_dense_rank(initial))
        return serial, tuple(ranks)

    @property
    def canonical_ranks(self) -> Tuple[int, ...]:
        """A canonical labeling: rank[i] is the canonical position of atom i"""
        return self._canonical[1]

    @cached_property
    def canonical_key(self) -> str:
        return hashlib.sha256(self._canonical[0].encode("utf-8")).hexdigest()

    def _refine(self, ranks: List[int]) -> List[int]:
        classes = len(set(ranks))
        while True:
            keys = [
                (ranks[i], tuple(sorted((o, ranks[j]) for j, o in self.adjacency[i])))
                for i in range(len(ranks))
            ]
            ranks = _dense_rank(keys)
            refined = len(set(ranks))
            if refined == classes:
                return ranks
            classes = refined

    def _twins(self, a: int, b: int) -> bool:
        na = sorted((j, o) for j, o in self.adjacency[a] if j != b)
        nb = sorted((j, o) for j, o in self.adjacency[b] if j != a)
        return na == nb

    def _search(self, ranks: List[int]) -> Tuple[str, List[int]]:
        ranks = self._refine(ranks)
        counts: Dict[int, List[int]] = {}
        for index, rank in enumerate(ranks):
            counts.setdefault(rank, []).append(index)
        cell = next((counts[r] for r in sorted(counts) if len(counts[r]) > 1), None)
        if cell is None:
            return self._serialize(ranks), ranks

        # swapping twins is an automorphism, one representative per twin group suffices
        candidates: List[int] = []
        for index in cell:
            if not any(self._twins(index, kept) for kept in candidates):
                candidates.append(index)

        best: Optional[Tuple[str, List[int]]] = None
        for chosen in candidates:
            split = _dense_rank([(ranks[i], 0 if i == chosen else 1) for i in range(len(ranks))])
            result = self._search(split)
            if best is None or result[0] < best[0]:
                best = result
        return best

    def _serialize(self, ranks: List[int]) -> str:
        order = sorted(range(len(ranks)), key=lambda i: ranks[i])
        atoms = ".".join(
            f"{self.atoms[i].element}{self.atoms[i].charge:+d}H{self.atoms[i].implicit_h}" for i in order
        )
        bonds = sorted(
            (min(ranks[b.begin], ranks[b.end]), max(ranks[b.begin], ranks[b.end]), b.order)
            for b in self.bonds
        )
        return atoms + "|" + ",".join(f"{a}-{b}:{o}" for a, b, o in bonds)


def _dense_rank(keys: Sequence) -> List[int]:
    lookup = {key: rank for rank, key in enumerate(sorted(set(keys)))}
    return [lookup[key] for key in keys]


# ---- operations ------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    atom: Optional[int] = None


@dataclass(frozen=True)
class ValidationResult:
    violations: Tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(mol: MoleculeGraph) -> ValidationResult:
    """Check structural and valence invariants; never raises"""
    violations: List[Violation] = []
    seen_pairs = set()
    for bond in mol.bonds:
        if bond.begin == bond.end:
            violations.append(Violation("self-bond", f"atom {bond.begin} is bonded to itself", bond.begin))
            continue
        pair = frozenset((bond.begin, bond.end))
        if pair in seen_pairs:
            violations.append(Violation("duplicate-bond", f"atoms {bond.begin}-{bond.end} bonded twice", bond.begin))
        seen_pairs.add(pair)
        if bond.order not in BOND_ORDERS:
            violations.append(Violation("bond-order", f"bond {bond.begin}-{bond.end} has order {bond.order}", bond.begin))

    for index, atom in enumerate(mol.atoms):
        if atom.element not in MAX_VALENCE:
            violations.append(Violation("element", f"unsupported element {atom.element!r}", index))
            continue
        try:
            capacity = max_valence(atom.element, atom.charge)
        except ValenceError as exc:
            violations.append(Violation("charge", str(exc), index))
            continue
        bond_sum = mol.bond_order_sum(index)
        if atom.implicit_h < 0:
            violations.append(Violation("hydrogen", f"negative hydrogen count on atom {index}", index))
        if bond_sum + atom.implicit_h > capacity:
            violations.append(Violation(
                "valence",
                f"atom {index} ({atom.element}) uses {bond_sum + atom.implicit_h} of {capacity} valences",
                index,
            ))
        elif atom.implicit_h != hydrogen_fill(atom.element, atom.charge, bond_sum):
            violations.append(Violation(
                "hydrogen",
                f"atom {index} ({atom.element}) carries {atom.implicit_h} H, expected "
                f"{hydrogen_fill(atom.element, atom.charge, bond_sum)}",
                index,
            ))
    return ValidationResult(tuple(violations))


def max_ring_size(mol: MoleculeGraph) -> int:
    """Largest cycle of a minimum cycle basis; 0 when acyclic"""
    return max((len(ring) for ring in mol.rings), default=0)


def canonical_key(mol: MoleculeGraph) -> str:
    return mol.canonical_key


def heavy_atom_count(mol: MoleculeGraph) -> int:
    return len(mol.atoms)
