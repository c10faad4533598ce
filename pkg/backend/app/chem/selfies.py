"""
SELFIES grammar: alphabets, the decoder state machine, the encoder and the
random-string sampler.

Every symbol string over an alphabet decodes to a valence-valid molecule.
The decoder keeps a current attachment atom and clips every requested bond
by the remaining capacity of both atoms; when the current atom is saturated
the rest of the scope is discarded.
"""

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator

from app.chem.graph import MAX_VALENCE, MoleculeGraph
from app.config import DEFAULT_ALPHABET_PATH, resolve_alphabet_path
from app.errors import ConfigError, EncodingError, TokenError

logger = logging.getLogger(__name__)

DEFAULT_MAX_LENGTH = 81
TOKEN_PATTERN = re.compile(r"\[[^\[\]]*\]")


class SymbolSpec(BaseModel):
    """Semantic record of one alphabet symbol"""
    token: str
    kind: Literal["atom", "branch", "ring"]
    element: Optional[str] = None
    bond_order: int = Field(default=1, ge=1, le=3)
    length_digits: int = Field(default=0, ge=0, le=3)
    digit: int = Field(default=0, ge=0, le=15)

    @model_validator(mode="after")
    def check_semantics(self) -> "SymbolSpec":
        if not TOKEN_PATTERN.fullmatch(self.token):
            raise ValueError(f"symbol {self.token!r} must be a single bracketed token")
        if self.kind == "atom":
            if self.element not in MAX_VALENCE:
                raise ValueError(f"symbol {self.token} names unsupported element {self.element!r}")
            if self.bond_order > MAX_VALENCE[self.element]:
                raise ValueError(f"symbol {self.token} requests more bonds than {self.element} has")
        elif self.length_digits < 1:
            raise ValueError(f"{self.kind} symbol {self.token} needs at least one length digit")
        return self


class AlphabetFile(BaseModel):
    name: str
    description: str = ""
    max_length: int = Field(default=DEFAULT_MAX_LENGTH, ge=1)
    symbols: List[SymbolSpec]


class Alphabet:
    """Ordered symbol set with semantics and base-16 digit values"""

    def __init__(self, symbols: Sequence[SymbolSpec], name: str = "custom", max_length: int = DEFAULT_MAX_LENGTH):
        tokens = [s.token for s in symbols]
        if len(set(tokens)) != len(tokens):
            raise ConfigError(f"alphabet {name} has duplicate symbols")
        if not symbols:
            raise ConfigError(f"alphabet {name} is empty")
        self.name = name
        self.max_length = max_length
        self.symbols: Tuple[SymbolSpec, ...] = tuple(symbols)
        self.tokens: Tuple[str, ...] = tuple(tokens)
        self.index: Dict[str, int] = {t: i for i, t in enumerate(tokens)}
        self._specs: Dict[str, SymbolSpec] = {s.token: s for s in symbols}

        self._atom_tokens: Dict[Tuple[str, int], str] = {}
        self._branch_tokens: Dict[Tuple[int, int], str] = {}
        self._ring_tokens: Dict[Tuple[int, int], str] = {}
        self._digit_tokens: Dict[int, str] = {}
        for spec in symbols:
            if spec.kind == "atom":
                self._atom_tokens.setdefault((spec.element, spec.bond_order), spec.token)
            elif spec.kind == "branch":
                self._branch_tokens.setdefault((spec.bond_order, spec.length_digits), spec.token)
            else:
                self._ring_tokens.setdefault((spec.bond_order, spec.length_digits), spec.token)
            self._digit_tokens.setdefault(spec.digit, spec.token)

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "Alphabet":
        """Load an alphabet JSON file ('default', 'extended' or a path)"""
        resolved = resolve_alphabet_path(str(path) if path is not None else None)
        try:
            payload = AlphabetFile.model_validate_json(Path(resolved).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"alphabet file not found: {resolved}") from None
        except ValueError as exc:
            raise ConfigError(f"invalid alphabet file {resolved}: {exc}") from exc
        return cls(payload.symbols, name=payload.name, max_length=payload.max_length)

    @classmethod
    def default(cls) -> "Alphabet":
        return cls.load(DEFAULT_ALPHABET_PATH)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._specs

    def spec(self, token: str) -> SymbolSpec:
        try:
            return self._specs[token]
        except KeyError:
            raise TokenError(f"symbol {token} is not in alphabet {self.name}") from None

    def atom_token(self, element: str, bond_order: int) -> Optional[str]:
        return self._atom_tokens.get((element, bond_order))

    def branch_token(self, bond_order: int, length_digits: int) -> Optional[str]:
        return self._branch_tokens.get((bond_order, length_digits))

    def ring_token(self, bond_order: int, length_digits: int) -> Optional[str]:
        return self._ring_tokens.get((bond_order, length_digits))

    def digit_token(self, digit: int) -> Optional[str]:
        return self._digit_tokens.get(digit)

    def to_json(self) -> str:
        payload = AlphabetFile(name=self.name, max_length=self.max_length, symbols=list(self.symbols))
        return json.dumps(payload.model_dump(), indent=2)


@dataclass(frozen=True)
class SelfiesString:
    """Symbol sequence over an alphabet; the GA genotype"""
    symbols: Tuple[str, ...]
    max_length: int = DEFAULT_MAX_LENGTH

    def __post_init__(self):
        if len(self.symbols) > self.max_length:
            raise TokenError(f"SELFIES has {len(self.symbols)} symbols, max length is {self.max_length}")

    @classmethod
    def from_symbols(
        cls, symbols: Sequence[str], alphabet: Alphabet, max_length: Optional[int] = None
    ) -> "SelfiesString":
        for token in symbols:
            if token not in alphabet:
                raise TokenError(f"symbol {token} is not in alphabet {alphabet.name}")
        return cls(tuple(symbols), max_length if max_length is not None else alphabet.max_length)

    @classmethod
    def parse(cls, text: str, alphabet: Alphabet, max_length: Optional[int] = None) -> "SelfiesString":
        """Split '[C][=O]'-style text into symbols and validate them"""
        stripped = text.strip()
        tokens = TOKEN_PATTERN.findall(stripped)
        if "".join(tokens) != stripped:
            raise TokenError(f"malformed SELFIES text {text!r}")
        return cls.from_symbols(tokens, alphabet, max_length)

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        return "".join(self.symbols)


# ---- decoding --------------------------------------------------------------

class _Derivation:
    """Mutable scratch state of one decode"""

    def __init__(self):
        self.elements: List[str] = []
        self.remaining: List[int] = []
        self.bonds: Dict[Tuple[int, int], int] = {}

    def add_atom(self, element: str) -> int:
        self.elements.append(element)
        self.remaining.append(MAX_VALENCE[element])
        return len(self.elements) - 1

    def add_bond(self, a: int, b: int, order: int) -> None:
        self.bonds[(min(a, b), max(a, b))] = order
        self.remaining[a] -= order
        self.remaining[b] -= order

    def bonded(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.bonds


def _read_index(specs: Sequence[SymbolSpec], pos: int, end: int, length: int) -> Tuple[int, int]:
    digits = specs[pos:min(end, pos + length)]
    value = 0
    for spec in digits:
        value = value * 16 + spec.digit
    return value, pos + len(digits)


def _derive(
    specs: Sequence[SymbolSpec],
    pos: int,
    end: int,
    current: Optional[int],
    first_cap: Optional[int],
    state: _Derivation,
) -> None:
    # first_cap is set while a branch has not placed its first atom yet
    while pos < end:
        spec = specs[pos]
        pos += 1

        if spec.kind == "atom":
            if current is None:
                current = state.add_atom(spec.element)
                continue
            order = min(spec.bond_order, state.remaining[current], MAX_VALENCE[spec.element])
            if first_cap is not None:
                order = min(order, first_cap)
            if order <= 0:
                return
            atom = state.add_atom(spec.element)
            state.add_bond(current, atom, order)
            current = atom
            first_cap = None

        elif spec.kind == "branch":
            q, pos = _read_index(specs, pos, end, spec.length_digits)
            body_end = min(end, pos + q + 1)
            if current is not None and first_cap is None and state.remaining[current] >= 2:
                cap = min(spec.bond_order, state.remaining[current] - 1)
                _derive(specs, pos, body_end, current, cap, state)
            pos = body_end

        else:
            q, pos = _read_index(specs, pos, end, spec.length_digits)
            if current is None or first_cap is not None:
                continue
            target = max(0, current - (q + 1))
            if target == current or state.bonded(current, target):
                continue
            order = min(spec.bond_order, state.remaining[current], state.remaining[target])
            if order > 0:
                state.add_bond(current, target, order)


def decode(s: SelfiesString, alphabet: Alphabet) -> MoleculeGraph:
    """Derive the molecule of a SELFIES string; empty derivations give methane"""
    specs = [alphabet.spec(token) for token in s.symbols]
    state = _Derivation()
    _derive(specs, 0, len(specs), None, None, state)
    if not state.elements:
        return MoleculeGraph.build(["C"], [])
    return MoleculeGraph.build(
        state.elements, [(a, b, order) for (a, b), order in state.bonds.items()]
    )


# ---- encoding --------------------------------------------------------------

def _spanning_tree(mol: MoleculeGraph) -> Tuple[List[List[Tuple[int, int]]], List[Tuple[int, int, int]]]:
    """Spanning tree keeping multiple bonds as tree edges where possible"""
    ranks = mol.canonical_ranks
    parent = list(range(len(mol)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    tree: List[List[Tuple[int, int]]] = [[] for _ in range(len(mol))]
    closures: List[Tuple[int, int, int]] = []
    ordered = sorted(
        mol.bonds,
        key=lambda b: (-b.order, min(ranks[b.begin], ranks[b.end]), max(ranks[b.begin], ranks[b.end])),
    )
    for bond in ordered:
        ra, rb = find(bond.begin), find(bond.end)
        if ra == rb:
            closures.append((bond.begin, bond.end, bond.order))
            continue
        parent[ra] = rb
        tree[bond.begin].append((bond.end, bond.order))
        tree[bond.end].append((bond.begin, bond.order))
    return tree, closures


def _length_symbols(
    alphabet: Alphabet, kind: str, bond_order: int, value: int, atom: int
) -> List[str]:
    for digits in (1, 2, 3):
        if value >= 16 ** digits:
            continue
        lookup = alphabet.branch_token if kind == "branch" else alphabet.ring_token
        token = lookup(bond_order, digits)
        if token is None:
            continue
        out = [token]
        for position in reversed(range(digits)):
            digit = (value // 16 ** position) % 16
            digit_token = alphabet.digit_token(digit)
            if digit_token is None:
                raise EncodingError(atom, f"alphabet {alphabet.name} has no symbol for digit {digit}")
            out.append(digit_token)
        return out
    raise EncodingError(atom, f"no {kind} symbol with bond order {bond_order} spans {value + 1}")


Tree = List[List[Tuple[int, int]]]
Closures = List[Tuple[int, int, int]]


def _enterable(mol: MoleculeGraph, alphabet: Alphabet, atom: int, order: int) -> bool:
    return alphabet.atom_token(mol.atoms[atom].element, order) is not None


def _orientable(mol: MoleculeGraph, alphabet: Alphabet, tree: Tree, root: int) -> bool:
    """Every non-root atom has a symbol for the bond order it is entered by"""
    stack: List[Tuple[int, Optional[int]]] = [(root, None)]
    while stack:
        node, parent = stack.pop()
        for child, order in tree[node]:
            if child == parent:
                continue
            if not _enterable(mol, alphabet, child, order):
                return False
            stack.append((child, node))
    return True


def _multiple_bond_tree(mol: MoleculeGraph, alphabet: Alphabet, entry: int) -> Optional[List[Tuple[int, int, int]]]:
    """Parent-first edges of the multiple-bond component entered at `entry`, or None if some atom cannot be entered"""
    edges: List[Tuple[int, int, int]] = []
    seen = {entry}
    stack = [entry]
    while stack:
        node = stack.pop()
        for partner, order in mol.neighbors(node):
            if order < 2 or partner in seen:
                continue
            if not _enterable(mol, alphabet, partner, order):
                return None
            seen.add(partner)
            edges.append((node, partner, order))
            stack.append(partner)
    return edges


def _rooted_tree(mol: MoleculeGraph, alphabet: Alphabet, root: int) -> Optional[Tuple[Tree, Closures]]:
    """Tree grown from `root` that enters every multiple-bond component at an atom it can be written from"""
    tree: Tree = [[] for _ in range(len(mol))]
    used = set()
    reached = set()
    components: Dict[int, Optional[List[Tuple[int, int, int]]]] = {}

    def component(entry: int) -> Optional[List[Tuple[int, int, int]]]:
        if entry not in components:
            components[entry] = _multiple_bond_tree(mol, alphabet, entry)
        return components[entry]

    def absorb(entry: int, edges: List[Tuple[int, int, int]]) -> List[int]:
        reached.add(entry)
        added = [entry]
        for parent, child, order in edges:
            reached.add(child)
            added.append(child)
            used.add(frozenset((parent, child)))
            tree[parent].append((child, order))
            tree[child].append((parent, order))
        return added

    start = component(root)
    if start is None:
        return None
    queue = absorb(root, start)
    while queue:
        node = queue.pop(0)
        for partner, order in mol.neighbors(node):
            if order != 1 or partner in reached:
                continue
            edges = component(partner)
            if edges is None:
                continue
            used.add(frozenset((node, partner)))
            tree[node].append((partner, 1))
            tree[partner].append((node, 1))
            queue.extend(absorb(partner, edges))
    if len(reached) < len(mol):
        return None

    closures: Closures = []
    for bond in mol.bonds:
        if frozenset((bond.begin, bond.end)) in used:
            continue
        if all(alphabet.ring_token(bond.order, digits) is None for digits in (1, 2, 3)):
            return None
        closures.append((bond.begin, bond.end, bond.order))
    return tree, closures


def _layouts(mol: MoleculeGraph, alphabet: Alphabet) -> Iterator[Tuple[int, Tree, Closures]]:
    """Candidate (root, tree, closures) triples, canonical layout first.

    Atoms like P or S may lack a symbol for a multiple bond, so such a bond has
    to be written from their side. Later candidates try other roots on the
    same tree, then trees grown from each root that respect this.
    """
    ranks = mol.canonical_ranks
    tree, closures = _spanning_tree(mol)
    leaves = [i for i in range(len(mol)) if len(tree[i]) <= 1]
    preferred = min(leaves or range(len(mol)), key=lambda i: ranks[i])
    yield preferred, tree, closures

    by_rank = sorted(range(len(mol)), key=lambda i: ranks[i])
    for root in by_rank:
        if root != preferred and _orientable(mol, alphabet, tree, root):
            yield root, tree, closures
    for root in by_rank:
        layout = _rooted_tree(mol, alphabet, root)
        if layout is not None:
            yield (root, *layout)


def _emit(mol: MoleculeGraph, alphabet: Alphabet, root: int, tree: Tree, closures: Closures) -> List[str]:
    ranks = mol.canonical_ranks
    closure_map: Dict[int, List[Tuple[int, int]]] = {i: [] for i in range(len(mol))}
    for a, b, order in closures:
        closure_map[a].append((b, order))
        closure_map[b].append((a, order))

    # subtree sizes decide which child continues the main chain
    sizes: Dict[int, int] = {}

    def subtree_size(node: int, parent: Optional[int]) -> int:
        total = 1
        for child, _ in tree[node]:
            if child != parent:
                total += subtree_size(child, node)
        sizes[node] = total
        return total

    subtree_size(root, None)

    preorder: Dict[int, int] = {}

    def emit(node: int, parent: Optional[int], order: int) -> List[str]:
        token = alphabet.atom_token(mol.atoms[node].element, order)
        if token is None:
            raise EncodingError(node, f"no symbol for {mol.atoms[node].element} with bond order {order}")
        preorder[node] = len(preorder)
        out = [token]
        for partner, ring_order in sorted(closure_map[node], key=lambda x: preorder.get(x[0], -1)):
            if partner in preorder and partner != node:
                distance = preorder[node] - preorder[partner] - 1
                out.extend(_length_symbols(alphabet, "ring", ring_order, distance, node))
        children = sorted(
            ((child, o) for child, o in tree[node] if child != parent),
            key=lambda x: (sizes[x[0]], ranks[x[0]]),
        )
        for position, (child, child_order) in enumerate(children):
            body = emit(child, node, child_order)
            if position < len(children) - 1:
                out.extend(_length_symbols(alphabet, "branch", child_order, len(body) - 1, child))
            out.extend(body)
        return out

    return emit(root, None, 1)


def encode(mol: MoleculeGraph, alphabet: Alphabet, max_length: Optional[int] = None) -> SelfiesString:
    """Write a molecule as a SELFIES string that decodes back to the same graph"""
    if not mol.atoms:
        raise EncodingError(0, "molecule has no atoms")
    for index, atom in enumerate(mol.atoms):
        if atom.charge != 0:
            raise EncodingError(index, f"charged atom {atom.element}{atom.charge:+d} has no symbol")
        if atom.element not in MAX_VALENCE or alphabet.atom_token(atom.element, 1) is None:
            raise EncodingError(index, f"element {atom.element} is not in alphabet {alphabet.name}")

    limit = max_length if max_length is not None else alphabet.max_length
    failure: Optional[EncodingError] = None
    for root, tree, closures in _layouts(mol, alphabet):
        try:
            tokens = _emit(mol, alphabet, root, tree, closures)
        except EncodingError as exc:
            failure = failure or exc
            continue
        if len(tokens) > limit:
            failure = failure or EncodingError(root, f"encoding needs {len(tokens)} symbols, max length is {limit}")
            continue
        return SelfiesString(tuple(tokens), limit)
    raise failure


def random_selfies(
    length: int,
    alphabet: Alphabet,
    rng: np.random.Generator,
    max_length: Optional[int] = None,
) -> SelfiesString:
    """Uniform i.i.d. symbols; deterministic for a seeded generator"""
    limit = max_length if max_length is not None else alphabet.max_length
    if length < 0 or length > limit:
        raise TokenError(f"length {length} outside 0..{limit}")
    picks = rng.integers(0, len(alphabet), size=length)
    return SelfiesString(tuple(alphabet.tokens[i] for i in picks), limit)
