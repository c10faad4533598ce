"""
Reference logP / SA values for a SMILES file, computed with RDKit or read
from a CSV that already carries them (the ZINC 250k layout: smiles, logP, SAS).

The descriptor fidelity test reads the CSV this script writes
(tests/data/oracle_fixture.csv by default, or MOLGA_ORACLE_FIXTURE) and is
skipped when the file is absent.
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.chem.dataset import load_dataset  # noqa: E402
from app.chem.graph import canonical_key  # noqa: E402
from app.chem.smiles import parse_smiles  # noqa: E402
from app.errors import DatasetError, MolgaError  # noqa: E402
from app.logger import configure_logging  # noqa: E402

try:
    from rdkit import Chem, RDConfig, RDLogger
    from rdkit.Chem import Crippen

    RDLogger.DisableLog("rdApp.*")
    sys.path.append(os.path.join(RDConfig.RDContribDir, "SA_Score"))
    import sascorer

    _RDKIT_AVAILABLE = True
except ImportError:
    _RDKIT_AVAILABLE = False

logger = logging.getLogger("build_oracle_fixture")

DEFAULT_OUTPUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "oracle_fixture.csv"
PRECOMPUTED_COLUMNS = {"smiles": "smiles", "logP": "logp", "SAS": "sa"}


def rows_from_rdkit(smiles_file: str, limit: int) -> list:
    dataset = load_dataset(smiles_file, limit=limit)
    rows = []
    for mol, smiles in zip(dataset.molecules, dataset.smiles):
        reference = Chem.MolFromSmiles(smiles)
        if reference is None:
            logger.warning(f"⚠️  [Oracle] RDKit cannot parse {smiles}, skipped")
            continue
        rows.append({
            "canonical_key": canonical_key(mol),
            "smiles": smiles,
            "logp": Crippen.MolLogP(reference),
            "sa": sascorer.calculateScore(reference),
        })
    return rows


def rows_from_csv(csv_file: str, limit: int) -> list:
    frame = pd.read_csv(csv_file)
    missing = set(PRECOMPUTED_COLUMNS) - set(frame.columns)
    if missing:
        raise DatasetError(f"{csv_file} lacks columns {sorted(missing)}")
    frame = frame[list(PRECOMPUTED_COLUMNS)].rename(columns=PRECOMPUTED_COLUMNS)
    rows = []
    for record in frame.itertuples(index=False):
        smiles = str(record.smiles).strip()
        try:
            key = canonical_key(parse_smiles(smiles))
        except MolgaError as exc:
            logger.warning(f"⚠️  [Oracle] Cannot parse {smiles}: {exc}, skipped")
            continue
        rows.append({"canonical_key": key, "smiles": smiles, "logp": float(record.logp), "sa": float(record.sa)})
        if len(rows) >= limit:
            break
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description="Write canonical_key,smiles,logp,sa reference values")
    parser.add_argument("smiles_file", help="SMILES file, or a CSV with smiles/logP/SAS columns with --precomputed")
    parser.add_argument("--output", default=str(DEFAULT_OUTPUT))
    parser.add_argument("--limit", type=int, default=100)
    parser.add_argument("--precomputed", action="store_true",
                        help="read logP and SA from the input CSV instead of computing them with RDKit")
    args = parser.parse_args()

    configure_logging()
    if args.precomputed:
        try:
            rows = rows_from_csv(args.smiles_file, args.limit)
        except (MolgaError, FileNotFoundError) as exc:
            logger.error(f"❌ [Oracle] {exc}")
            return 2
    elif not _RDKIT_AVAILABLE:
        logger.error("❌ RDKit is required without --precomputed: pip install rdkit")
        return 1
    else:
        rows = rows_from_rdkit(args.smiles_file, args.limit)

    output = Path(args.output)
    output.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(output, index=False)
    logger.info(f"✅ [Oracle] {len(rows)} reference rows written to {output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
