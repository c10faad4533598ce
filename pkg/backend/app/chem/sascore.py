"""
Synthetic accessibility score: fragment contributions from a reference
fragment-frequency table minus complexity penalties, rescaled to [1, 10].
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from app.chem.fingerprints import morgan_environments
from app.chem.graph import MoleculeGraph
from app.errors import DescriptorError

logger = logging.getLogger(__name__)

TABLE_FORMAT = "molga-fragments"
TABLE_VERSION = 2
FRAGMENT_RADIUS = 2
COVERAGE = 0.8

# raw-score window mapped onto 1..10 when a table carries no calibration
RAW_MIN = -4.0
RAW_MAX = 2.5

# reference-set SA statistics a calibrated window reproduces
REFERENCE_SA_MEAN = 3.05
REFERENCE_SA_STD = 0.831
CALIBRATION_ROUNDS = 25


def scale_raw(raw: float, window: Tuple[float, float]) -> float:
    """Map a raw score onto [1, 10], compressing everything above 8"""
    raw_min, raw_max = window
    score = 11.0 - (raw - raw_min + 1.0) / (raw_max - raw_min) * 9.0
    if score > 8.0:
        score = 8.0 + math.log(score + 1.0 - 9.0)
    return float(min(10.0, max(1.0, score)))


def fit_window(raws: Sequence[float], mean: float = REFERENCE_SA_MEAN,
               std: float = REFERENCE_SA_STD) -> Optional[Tuple[float, float]]:
    """Raw-score window whose scaled scores over `raws` have the given mean and std.

    Scores are affine in the raw value until the clamp at 1 and the compression
    above 8 bite, so slope and offset are refit a few rounds against the
    finished scores. Returns None when the raw values have no spread.
    """
    values = np.asarray(raws, dtype=float)
    if len(values) < 2 or values.std() <= 0:
        return None
    # score = offset - slope * raw before clamping
    slope = std / float(values.std())
    offset = mean + slope * float(values.mean())

    def window(slope: float, offset: float) -> Tuple[float, float]:
        raw_min = 1.0 - (11.0 - offset) / slope
        return raw_min, raw_min + 9.0 / slope

    for _ in range(CALIBRATION_ROUNDS):
        scores = np.array([scale_raw(r, window(slope, offset)) for r in values])
        if abs(scores.mean() - mean) < 1e-4 and abs(scores.std() - std) < 1e-4:
            break
        if scores.std() > 0:
            slope *= std / float(scores.std())
        scores = np.array([scale_raw(r, window(slope, offset)) for r in values])
        offset += mean - float(scores.mean())
    return window(slope, offset)


class FragmentTable:
    """Fragment id -> occurrence count with derived log-frequency scores.

    A fragment scores log10(count / c80) where c80 is the count of the rarest
    fragment among those that together cover 80% of all occurrences. Unseen
    fragments score the floor, one below the lowest observed score. The
    raw-score window defaults to [RAW_MIN, RAW_MAX]; `calibrate` refits it on
    reference molecules.
    """

    def __init__(self, counts: Dict[int, int], radius: int = FRAGMENT_RADIUS, source: str = "memory",
                 window: Optional[Tuple[float, float]] = None):
        if not counts:
            raise DescriptorError("fragment table is empty")
        self.counts = dict(counts)
        self.radius = radius
        self.source = source
        self.window = tuple(window) if window is not None else (RAW_MIN, RAW_MAX)
        if self.window[1] <= self.window[0]:
            raise DescriptorError(f"fragment table window {self.window} is empty")

        ordered = sorted(self.counts.values(), reverse=True)
        total = sum(ordered)
        covered = 0
        threshold = ordered[-1]
        for count in ordered:
            covered += count
            threshold = count
            if covered >= COVERAGE * total:
                break
        self.threshold = threshold
        self.scores: Dict[int, float] = {
            key: math.log10(count / threshold) for key, count in self.counts.items()
        }
        self.floor = min(self.scores.values()) - 1.0

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def calibrated(self) -> bool:
        return self.window != (RAW_MIN, RAW_MAX)

    def score(self, fragment: int) -> float:
        return self.scores.get(fragment, self.floor)

    def calibrate(self, molecules: Iterable[MoleculeGraph]) -> "FragmentTable":
        """Refit the window so the molecules' SA mean and std match the reference values"""
        fitted = fit_window([raw_sa_score(mol, self) for mol in molecules])
        if fitted is None:
            logger.warning(f"⚠️  [Fragments] No SA spread in {self.source}, keeping the default window")
            return self
        self.window = fitted
        logger.info(f"[Fragments] SA window fitted on {self.source}: [{fitted[0]:.3f}, {fitted[1]:.3f}]")
        return self

    @classmethod
    def from_molecules(cls, molecules: Iterable[MoleculeGraph], radius: int = FRAGMENT_RADIUS,
                       source: str = "memory", calibrate: bool = True) -> "FragmentTable":
        molecules = list(molecules)
        counts: Dict[int, int] = {}
        for mol in molecules:
            for fragment, count in morgan_environments(mol, radius).items():
                counts[fragment] = counts.get(fragment, 0) + count
        table = cls(counts, radius, source)
        return table.calibrate(molecules) if calibrate else table

    def save(self, path: Union[str, Path]) -> None:
        payload = {
            "format": TABLE_FORMAT,
            "version": TABLE_VERSION,
            "radius": self.radius,
            "window": list(self.window),
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
        }
        Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "FragmentTable":
        path = Path(path)
        if not path.exists():
            raise DescriptorError(f"fragment table not found: {path}")
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DescriptorError(f"fragment table {path} is not valid JSON: {exc}") from exc
        if payload.get("format") != TABLE_FORMAT or payload.get("version") != TABLE_VERSION:
            raise DescriptorError(
                f"fragment table {path} has header {payload.get('format')} v{payload.get('version')}, "
                f"expected {TABLE_FORMAT} v{TABLE_VERSION}"
            )
        window = payload.get("window")
        if window is not None and len(window) != 2:
            raise DescriptorError(f"fragment table {path} window must hold two numbers, got {window}")
        counts = {int(k): int(v) for k, v in payload["counts"].items()}
        return cls(
            counts,
            int(payload.get("radius", FRAGMENT_RADIUS)),
            str(path),
            (float(window[0]), float(window[1])) if window is not None else None,
        )


def bridgehead_and_spiro(mol: MoleculeGraph) -> Tuple[int, int]:
    """Counts of bridgehead atoms and spiro atoms over the basis rings"""
    rings = mol.rings
    bridgeheads = set()
    spiro = set()
    for i in range(len(rings)):
        for j in range(i + 1, len(rings)):
            shared = rings[i] & rings[j]
            if len(shared) == 1:
                spiro |= shared
            elif len(shared) > 2:
                union = rings[i] | rings[j]
                for atom in shared:
                    in_union = sum(1 for k, _ in mol.neighbors(atom) if k in union)
                    if in_union >= 3:
                        bridgeheads.add(atom)
    return len(bridgeheads), len(spiro)


def raw_sa_score(mol: MoleculeGraph, fragments: FragmentTable) -> float:
    """Mean fragment score minus complexity penalties plus the symmetry bonus; higher is easier"""
    environments = morgan_environments(mol, fragments.radius)
    occurrences = sum(environments.values())
    contribution = sum(fragments.score(k) * v for k, v in environments.items()) / occurrences

    n_atoms = len(mol.atoms)
    n_bridge, n_spiro = bridgehead_and_spiro(mol)
    size_penalty = n_atoms ** 1.005 - n_atoms
    # graphs are achiral, so the stereo term log10(centres + 1) is zero
    stereo_penalty = 0.0
    spiro_penalty = math.log10(n_spiro + 1)
    bridge_penalty = math.log10(n_bridge + 1)
    macrocycle_penalty = math.log10(2) if any(len(r) > 8 for r in mol.rings) else 0.0
    complexity = -size_penalty - stereo_penalty - spiro_penalty - bridge_penalty - macrocycle_penalty

    symmetry = 0.0
    if n_atoms > len(environments):
        symmetry = math.log(n_atoms / len(environments)) * 0.5

    return contribution + complexity + symmetry


def sa_score(mol: MoleculeGraph, fragments: Optional[FragmentTable]) -> float:
    """Synthetic accessibility in [1, 10]; lower is easier"""
    if fragments is None:
        raise DescriptorError("sa_score needs a fragment table")
    return scale_raw(raw_sa_score(mol, fragments), fragments.window)
