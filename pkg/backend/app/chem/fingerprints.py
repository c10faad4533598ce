"""
Morgan fingerprints, Tanimoto similarity and population diversity metrics
"""

import hashlib
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple, Union

import numpy as np

from app.chem.graph import MoleculeGraph, canonical_key
from app.errors import FingerprintError

DEFAULT_RADIUS = 2
DEFAULT_WIDTH = 2048


def _stable_hash(values: tuple) -> int:
    digest = hashlib.sha256(repr(values).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def atom_invariants(mol: MoleculeGraph) -> List[int]:
    """Initial identifiers: element, degree, H count, charge, ring membership"""
    ring_atoms = mol.ring_atoms
    return [
        _stable_hash((atom.element, mol.degree(i), atom.implicit_h, atom.charge, i in ring_atoms))
        for i, atom in enumerate(mol.atoms)
    ]


def morgan_environments(mol: MoleculeGraph, radius: int = DEFAULT_RADIUS) -> Dict[int, int]:
    """Unfolded environment identifiers with occurrence counts.

    Environments covering a bond set already seen (in an earlier round or for
    another atom this round) are dropped, keeping the smallest identifier; an
    atom whose environment stops growing is retired. This is RDKit's
    duplicate rule, so the result is not one id per atom per radius: ethane
    counts its methyl id twice but its radius-1 id only once. Fragment
    statistics for the SA score assume these counts.
    """
    if radius < 0:
        raise FingerprintError(f"radius must be non-negative, got {radius}")
    ids = atom_invariants(mol)
    counts: Dict[int, int] = {}
    for identifier in ids:
        counts[identifier] = counts.get(identifier, 0) + 1

    bond_index = {frozenset((b.begin, b.end)): k for k, b in enumerate(mol.bonds)}
    environments: List[FrozenSet[int]] = [frozenset() for _ in mol.atoms]
    alive = [True] * len(mol.atoms)
    seen: set = set()

    for round_number in range(1, radius + 1):
        new_ids = list(ids)
        new_envs = list(environments)
        candidates: Dict[FrozenSet[int], Tuple[int, int]] = {}
        for i in range(len(mol.atoms)):
            if not alive[i]:
                continue
            neighbors = mol.neighbors(i)
            env = set(environments[i])
            for j, _ in neighbors:
                env |= environments[j]
                env.add(bond_index[frozenset((i, j))])
            env_key = frozenset(env)
            if env_key == environments[i]:
                alive[i] = False
                continue
            new_ids[i] = _stable_hash(
                (round_number, ids[i], tuple(sorted((order, ids[j]) for j, order in neighbors)))
            )
            new_envs[i] = env_key
            if env_key in seen:
                continue
            previous = candidates.get(env_key)
            if previous is None or new_ids[i] < previous[0]:
                candidates[env_key] = (new_ids[i], i)
        for env_key, (identifier, _) in candidates.items():
            seen.add(env_key)
            counts[identifier] = counts.get(identifier, 0) + 1
        ids = new_ids
        environments = new_envs
    return counts


@dataclass(frozen=True, eq=False)
class Fingerprint:
    """Folded bit vector; width and radius travel with the bits"""
    bits: np.ndarray
    radius: int = DEFAULT_RADIUS

    @property
    def width(self) -> int:
        return int(self.bits.shape[0])

    @property
    def on_bits(self) -> Tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.bits))

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Fingerprint):
            return NotImplemented
        return self.radius == other.radius and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.radius, self.on_bits))

    @classmethod
    def from_bits(cls, on_bits: Sequence[int], width: int = DEFAULT_WIDTH, radius: int = DEFAULT_RADIUS) -> "Fingerprint":
        if width <= 0:
            raise FingerprintError(f"fingerprint width must be positive, got {width}")
        bits = np.zeros(width, dtype=bool)
        bits[list(on_bits)] = True
        bits.setflags(write=False)
        return cls(bits, radius)


def morgan_fp(mol: MoleculeGraph, radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH) -> Fingerprint:
    """Hashed circular fingerprint folded modulo width"""
    if width <= 0:
        raise FingerprintError(f"fingerprint width must be positive, got {width}")
    return Fingerprint.from_bits(
        [identifier % width for identifier in morgan_environments(mol, radius)], width, radius
    )


def _check_compatible(a: Fingerprint, b: Fingerprint) -> None:
    if a.width != b.width or a.radius != b.radius:
        raise FingerprintError(
            f"fingerprints differ: width {a.width}/{b.width}, radius {a.radius}/{b.radius}"
        )


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    """|a AND b| / |a OR b|, 1.0 for two empty vectors"""
    _check_compatible(a, b)
    union = int(np.logical_or(a.bits, b.bits).sum())
    if union == 0:
        return 1.0
    return int(np.logical_and(a.bits, b.bits).sum()) / union


def bulk_tanimoto(query: Fingerprint, fps: Sequence[Fingerprint]) -> np.ndarray:
    if not fps:
        return np.zeros(0)
    for fp in fps:
        _check_compatible(query, fp)
    matrix = np.stack([fp.bits for fp in fps]).astype(np.int32)
    q = query.bits.astype(np.int32)
    inter = matrix @ q
    union = matrix.sum(axis=1) + q.sum() - inter
    return np.where(union == 0, 1.0, inter / np.maximum(union, 1))


def similarity_matrix(fps: Sequence[Fingerprint]) -> np.ndarray:
    """Pairwise Tanimoto similarities as an N x N array"""
    if not fps:
        raise FingerprintError("similarity of an empty set")
    for fp in fps[1:]:
        _check_compatible(fps[0], fp)
    matrix = np.stack([fp.bits for fp in fps]).astype(np.int32)
    inter = matrix @ matrix.T
    counts = matrix.sum(axis=1)
    union = counts[:, None] + counts[None, :] - inter
    return np.where(union == 0, 1.0, inter / np.maximum(union, 1))


MolOrFp = Union[MoleculeGraph, Fingerprint]


def _as_fps(items: Sequence[MolOrFp], radius: int, width: int) -> List[Fingerprint]:
    return [item if isinstance(item, Fingerprint) else morgan_fp(item, radius, width) for item in items]


def internal_diversity(
    items: Sequence[MolOrFp],
    include_diagonal: bool = True,
    radius: int = DEFAULT_RADIUS,
    width: int = DEFAULT_WIDTH,
) -> float:
    """Mean Tanimoto distance over ordered pairs.

    With include_diagonal the self pairs (distance 0) are part of the |A|^2
    denominator; without it the mean runs over the |A|^2 - |A| distinct pairs.
    """
    if not items:
        raise FingerprintError("internal diversity of an empty set")
    distances = 1.0 - similarity_matrix(_as_fps(items, radius, width))
    n = len(items)
    if include_diagonal:
        return float(distances.sum() / (n * n))
    if n == 1:
        return 0.0
    return float((distances.sum() - np.trace(distances)) / (n * n - n))


def mean_pairwise_similarity(
    items: Sequence[MolOrFp], radius: int = DEFAULT_RADIUS, width: int = DEFAULT_WIDTH
) -> float:
    """Mean similarity over distinct unordered pairs; 1.0 for fewer than two items"""
    if len(items) < 2:
        return 1.0
    sims = similarity_matrix(_as_fps(items, radius, width))
    upper = np.triu_indices(len(items), k=1)
    return float(sims[upper].mean())


def fraction_unique(population: Sequence[MoleculeGraph]) -> float:
    if not population:
        raise FingerprintError("fraction unique of an empty population")
    return len({canonical_key(mol) for mol in population}) / len(population)
