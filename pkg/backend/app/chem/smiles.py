"""
SMILES subset reader and canonical writer.

Supported: C N O F S P Cl Br (and aromatic c n o s p), bonds - = # :,
branches, ring closures (digits and %nn) and bracket atoms with H count and
charge. Aromatic input is kekulized through a perfect matching on the
aromatic subgraph. Stereo marks are read and dropped.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import networkx as nx

from app.chem.graph import MoleculeGraph, allowed_valences, hydrogen_fill
from app.errors import SmilesParseError, ValenceError

ORGANIC = ("Cl", "Br", "C", "N", "O", "S", "P", "F")
AROMATIC_ORGANIC = ("c", "n", "o", "s", "p")
BOND_SYMBOLS = {"-": 1, "=": 2, "#": 3, ":": 0, "/": 1, "\\": 1}
AROMATIC = 0  # pseudo bond order until kekulization


@dataclass
class _ParsedAtom:
    element: str
    aromatic: bool
    offset: int
    charge: int = 0
    explicit_h: Optional[int] = None


@dataclass
class _Parse:
    text: str
    strip_stereo: bool
    atoms: List[_ParsedAtom] = field(default_factory=list)
    bonds: Dict[Tuple[int, int], int] = field(default_factory=dict)

    def fail(self, offset: int, reason: str) -> SmilesParseError:
        return SmilesParseError(self.text, offset, reason)

    def add_bond(self, a: int, b: int, order: Optional[int], offset: int) -> None:
        if a == b:
            raise self.fail(offset, "ring closure onto the same atom")
        key = (min(a, b), max(a, b))
        if key in self.bonds:
            raise self.fail(offset, "duplicate bond")
        if order is None:
            order = AROMATIC if self.atoms[a].aromatic and self.atoms[b].aromatic else 1
        self.bonds[key] = order


def _read_bracket(state: _Parse, pos: int) -> Tuple[_ParsedAtom, int]:
    text = state.text
    start = pos
    close = text.find("]", pos)
    if close < 0:
        raise state.fail(start, "unterminated bracket atom")
    body = text[pos + 1:close]
    i = 0
    if i < len(body) and body[i].isdigit():
        raise state.fail(start + 1, "isotopes are not supported")
    element = None
    aromatic = False
    for candidate in ("Cl", "Br", "C", "N", "O", "S", "P", "F", "c", "n", "o", "s", "p"):
        if body.startswith(candidate, i):
            element = candidate
            break
    if element is None:
        raise state.fail(start + 1, f"unsupported bracket atom [{body}]")
    i += len(element)
    if element.islower():
        aromatic = True
        element = element.upper()
    if i < len(body) and body[i] == "@":
        if not state.strip_stereo:
            raise state.fail(start + 1 + i, "stereo centres are not supported")
        while i < len(body) and body[i] == "@":
            i += 1
        # tetrahedral class suffixes such as @TH1 are not part of the subset
        if i < len(body) and body[i].isalpha() and body[i] != "H":
            raise state.fail(start + 1 + i, "extended chirality is not supported")
    h_count = 0
    if i < len(body) and body[i] == "H":
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        h_count = int(digits) if digits else 1
    charge = 0
    if i < len(body) and body[i] in "+-":
        sign = 1 if body[i] == "+" else -1
        i += 1
        digits = ""
        while i < len(body) and body[i].isdigit():
            digits += body[i]
            i += 1
        if digits:
            charge = sign * int(digits)
        else:
            charge = sign
            while i < len(body) and body[i] == ("+" if sign > 0 else "-"):
                charge += sign
                i += 1
    if i != len(body):
        raise state.fail(start + 1 + i, f"unsupported bracket atom [{body}]")
    atom = _ParsedAtom(element, aromatic, start, charge=charge, explicit_h=h_count)
    return atom, close + 1


def _kekulize(state: _Parse) -> None:
    if not any(order == AROMATIC for order in state.bonds.values()) and not any(a.aromatic for a in state.atoms):
        return

    # an aromatic-looking bond outside every ring (biaryl link) is single
    skeleton = nx.Graph()
    skeleton.add_nodes_from(range(len(state.atoms)))
    skeleton.add_edges_from(state.bonds)
    for a, b in nx.bridges(skeleton):
        key = (min(a, b), max(a, b))
        if state.bonds[key] == AROMATIC:
            state.bonds[key] = 1
    aromatic_bonds = [key for key, order in state.bonds.items() if order == AROMATIC]

    needs_double = set()
    for index, atom in enumerate(state.atoms):
        if not atom.aromatic:
            continue
        fixed = 0
        for (a, b), order in state.bonds.items():
            if index in (a, b):
                fixed += 1 if order == AROMATIC else order
        fixed += atom.explicit_h or 0
        try:
            valences = allowed_valences(atom.element, atom.charge)
        except ValenceError as exc:
            raise state.fail(atom.offset, str(exc)) from None
        fitting = [v for v in valences if v >= fixed]
        if not fitting:
            raise state.fail(atom.offset, "aromatic atom exceeds its valence")
        if fitting[0] - fixed == 1 or (atom.explicit_h is None and fitting[0] - fixed >= 1):
            needs_double.add(index)

    graph = nx.Graph()
    graph.add_nodes_from(sorted(needs_double))
    for a, b in aromatic_bonds:
        if a in needs_double and b in needs_double:
            graph.add_edge(a, b)
    matching = nx.max_weight_matching(graph, maxcardinality=True)
    matched = {node for pair in matching for node in pair}
    if matched != needs_double:
        unmatched = min(needs_double - matched)
        raise state.fail(state.atoms[unmatched].offset, "cannot kekulize aromatic system")

    for a, b in aromatic_bonds:
        state.bonds[(a, b)] = 1
    for a, b in matching:
        state.bonds[(min(a, b), max(a, b))] = 2


def parse_smiles(text: str, strip_stereo: bool = True) -> MoleculeGraph:
    """Parse a single-component SMILES string into a kekulized molecule graph"""
    state = _Parse(text=text, strip_stereo=strip_stereo)
    pos = 0
    prev: Optional[int] = None
    pending_bond: Optional[int] = None
    pending_offset = 0
    branches: List[Optional[int]] = []
    rings: Dict[int, Tuple[int, Optional[int], int]] = {}

    if not text.strip():
        raise state.fail(0, "empty SMILES")

    while pos < len(text):
        ch = text[pos]

        if ch in " \t\r\n":
            raise state.fail(pos, "whitespace inside SMILES")

        if ch == "(":
            if prev is None:
                raise state.fail(pos, "branch before any atom")
            branches.append(prev)
            pos += 1
            continue
        if ch == ")":
            if not branches:
                raise state.fail(pos, "unmatched ')'")
            if pending_bond is not None:
                raise state.fail(pending_offset, "dangling bond")
            prev = branches.pop()
            pos += 1
            continue

        if ch in BOND_SYMBOLS:
            if pending_bond is not None:
                raise state.fail(pos, "two bond symbols in a row")
            if ch in "/\\" and not strip_stereo:
                raise state.fail(pos, "stereo bonds are not supported")
            pending_bond = BOND_SYMBOLS[ch]
            pending_offset = pos
            pos += 1
            continue

        if ch.isdigit() or ch == "%":
            if prev is None:
                raise state.fail(pos, "ring closure before any atom")
            if ch == "%":
                digits = text[pos + 1:pos + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise state.fail(pos, "malformed %nn ring closure")
                number = int(digits)
                width = 3
            else:
                number = int(ch)
                width = 1
            if number in rings:
                partner, partner_bond, opened_at = rings.pop(number)
                if partner_bond is not None and pending_bond is not None and partner_bond != pending_bond:
                    raise state.fail(pos, f"conflicting bond orders on ring closure {number}")
                order = pending_bond if pending_bond is not None else partner_bond
                state.add_bond(partner, prev, order, pos)
            else:
                rings[number] = (prev, pending_bond, pos)
            pending_bond = None
            pos += width
            continue

        if ch == "[":
            atom, pos_after = _read_bracket(state, pos)
        elif ch in ".*$":
            raise state.fail(pos, f"'{ch}' is not supported")
        else:
            symbol = next((s for s in ORGANIC + AROMATIC_ORGANIC if text.startswith(s, pos)), None)
            if symbol is None:
                raise state.fail(pos, f"unexpected character {ch!r}")
            aromatic = symbol in AROMATIC_ORGANIC
            atom = _ParsedAtom(symbol.upper() if aromatic else symbol, aromatic, pos)
            pos_after = pos + len(symbol)

        state.atoms.append(atom)
        index = len(state.atoms) - 1
        if prev is not None:
            state.add_bond(prev, index, pending_bond, pos)
        elif pending_bond is not None:
            raise state.fail(pending_offset, "bond before the first atom")
        pending_bond = None
        prev = index
        pos = pos_after

    if pending_bond is not None:
        raise state.fail(pending_offset, "dangling bond")
    if branches:
        raise state.fail(len(text), "unclosed branch")
    if rings:
        number, (_, _, opened_at) = next(iter(rings.items()))
        raise state.fail(opened_at, f"unclosed ring {number}")
    if not state.atoms:
        raise state.fail(0, "no atoms")

    _kekulize(state)

    elements = [a.element for a in state.atoms]
    charges = [a.charge for a in state.atoms]
    bonds = [(a, b, order) for (a, b), order in state.bonds.items()]
    bond_sum = [0] * len(elements)
    for a, b, order in bonds:
        bond_sum[a] += order
        bond_sum[b] += order
    for index, atom in enumerate(state.atoms):
        try:
            capacity = max(allowed_valences(atom.element, atom.charge))
        except ValenceError as exc:
            raise state.fail(atom.offset, str(exc)) from None
        if bond_sum[index] > capacity:
            raise state.fail(atom.offset, f"{atom.element} exceeds its valence")
        if atom.explicit_h is not None:
            expected = hydrogen_fill(atom.element, atom.charge, bond_sum[index])
            if atom.explicit_h != expected:
                raise state.fail(
                    atom.offset,
                    f"bracket atom has {atom.explicit_h} H, valence rules give {expected}",
                )
    return MoleculeGraph.build(elements, bonds, charges)


# ---- writer ----------------------------------------------------------------

BOND_TEXT = {1: "", 2: "=", 3: "#"}


def _atom_text(mol: MoleculeGraph, index: int) -> str:
    atom = mol.atoms[index]
    if atom.charge == 0:
        return atom.element
    h = "" if atom.implicit_h == 0 else ("H" if atom.implicit_h == 1 else f"H{atom.implicit_h}")
    sign = "+" if atom.charge > 0 else "-"
    charge = sign if abs(atom.charge) == 1 else f"{sign}{abs(atom.charge)}"
    return f"[{atom.element}{h}{charge}]"


def _ring_label(number: int) -> str:
    return str(number) if number < 10 else f"%{number:02d}"


def write_smiles(mol: MoleculeGraph) -> str:
    """Canonical Kekulé SMILES following the canonical atom ranks"""
    if not mol.atoms:
        return ""
    ranks = mol.canonical_ranks
    root = min(range(len(mol)), key=lambda i: ranks[i])

    visited: Dict[int, int] = {}
    children: Dict[int, List[int]] = {}
    closures: Dict[int, List[Tuple[int, int]]] = {}

    def walk(node: int, parent: Optional[int]) -> None:
        visited[node] = len(visited)
        children[node] = []
        closures.setdefault(node, [])
        for neighbor, order in sorted(mol.neighbors(node), key=lambda x: ranks[x[0]]):
            if neighbor == parent:
                continue
            if neighbor in visited:
                if visited[neighbor] < visited[node]:
                    # back edge, opened at the earlier atom
                    closures[neighbor].append((node, order))
                    closures[node].append((neighbor, order))
                continue
            children[node].append(neighbor)
            walk(neighbor, node)

    walk(root, None)

    free: List[int] = []
    next_label = [1]
    open_labels: Dict[Tuple[int, int], int] = {}
    out: List[str] = []

    def take_label() -> int:
        if free:
            free.sort()
            return free.pop(0)
        label = next_label[0]
        next_label[0] += 1
        return label

    def emit(node: int) -> None:
        out.append(_atom_text(mol, node))
        for partner, order in sorted(closures[node], key=lambda x: (visited[x[0]], ranks[x[0]])):
            key = (min(node, partner), max(node, partner))
            if key in open_labels:
                label = open_labels.pop(key)
                out.append(_ring_label(label))
                free.append(label)
            else:
                label = take_label()
                open_labels[key] = label
                out.append(BOND_TEXT[order] + _ring_label(label))
        kids = children[node]
        for position, child in enumerate(kids):
            text = BOND_TEXT[mol.bond_order(node, child)]
            if position < len(kids) - 1:
                out.append("(" + text)
                emit(child)
                out.append(")")
            else:
                out.append(text)
                emit(child)

    emit(root)
    return "".join(out)
