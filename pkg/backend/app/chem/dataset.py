"""
Reference dataset loading (one SMILES per line, optional ID column)
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.chem.graph import MoleculeGraph, validate
from app.chem.smiles import parse_smiles
from app.errors import DatasetError, MolgaError

logger = logging.getLogger(__name__)

MAX_SKIP_FRACTION = 0.10


@dataclass(frozen=True)
class SkipRecord:
    line_number: int
    text: str
    reason: str


@dataclass(frozen=True)
class Dataset:
    """Parsed reference molecules; every entry passed validate()"""
    molecules: Tuple[MoleculeGraph, ...]
    smiles: Tuple[str, ...]
    source: Path
    skipped: Tuple[SkipRecord, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.molecules)

    def sample(self, count: int, rng: np.random.Generator) -> List[MoleculeGraph]:
        """Draw up to `count` molecules without replacement"""
        if count >= len(self.molecules):
            return list(self.molecules)
        picks = rng.choice(len(self.molecules), size=count, replace=False)
        return [self.molecules[i] for i in picks]

    @classmethod
    def from_smiles(cls, lines: Sequence[str], source: Union[str, Path] = "<memory>") -> "Dataset":
        return _build(list(enumerate(lines, start=1)), Path(source), MAX_SKIP_FRACTION)


def _records(path: Path, limit: Optional[int]) -> List[Tuple[int, str]]:
    records: List[Tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            text = line.split()[0]
            if not records and text.lower() == "smiles":
                continue
            records.append((line_number, text))
            if limit is not None and len(records) >= limit:
                break
    return records


def _build(records: List[Tuple[int, str]], source: Path, max_skip_fraction: float) -> Dataset:
    molecules: List[MoleculeGraph] = []
    texts: List[str] = []
    skipped: List[SkipRecord] = []
    for line_number, text in records:
        text = text.strip()
        if not text:
            continue
        try:
            mol = parse_smiles(text)
        except MolgaError as exc:
            skipped.append(SkipRecord(line_number, text, str(exc)))
            continue
        verdict = validate(mol)
        if not verdict:
            skipped.append(SkipRecord(line_number, text, verdict.violations[0].message))
            continue
        molecules.append(mol)
        texts.append(text)

    for record in skipped:
        logger.warning(f"⚠️  [Dataset] Skipping line {record.line_number} ({record.text}): {record.reason}")

    total = len(molecules) + len(skipped)
    if not molecules:
        raise DatasetError(f"no parseable molecules in {source}")
    if len(skipped) / total > max_skip_fraction:
        raise DatasetError(
            f"{len(skipped)} of {total} lines in {source} are unparseable "
            f"(more than {max_skip_fraction:.0%}); is this a SMILES file?"
        )
    logger.info(f"[Dataset] Loaded {len(molecules)} molecules from {source} ({len(skipped)} skipped)")
    return Dataset(tuple(molecules), tuple(texts), source, tuple(skipped))


def load_dataset(
    path: Union[str, Path],
    limit: Optional[int] = None,
    max_skip_fraction: float = MAX_SKIP_FRACTION,
) -> Dataset:
    """Parse a SMILES file; a missing file raises FileNotFoundError"""
    source = Path(path)
    return _build(_records(source, limit), source, max_skip_fraction)
