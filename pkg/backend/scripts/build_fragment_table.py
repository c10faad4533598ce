"""
Count radius-2 Morgan environments over a SMILES file and write the SA fragment table
"""

import argparse
import logging
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from app.chem.dataset import load_dataset  # noqa: E402
from app.chem.sascore import FRAGMENT_RADIUS, FragmentTable  # noqa: E402
from app.logger import configure_logging  # noqa: E402

logger = logging.getLogger("build_fragment_table")


def main() -> int:
    parser = argparse.ArgumentParser(description="Build a fragment table JSON for the SA score")
    parser.add_argument("smiles_file", help="reference SMILES file, one molecule per line")
    parser.add_argument("output", help="fragment table JSON to write")
    parser.add_argument("--limit", type=int, default=None, help="read at most this many lines")
    parser.add_argument("--radius", type=int, default=FRAGMENT_RADIUS)
    args = parser.parse_args()

    configure_logging()
    dataset = load_dataset(args.smiles_file, limit=args.limit)
    table = FragmentTable.from_molecules(dataset.molecules, radius=args.radius, source=str(args.smiles_file))
    table.save(args.output)
    logger.info(
        f"✅ [Fragments] {len(table)} fragments from {len(dataset)} molecules written to {args.output} "
        f"(c80 count {table.threshold}, SA window [{table.window[0]:.3f}, {table.window[1]:.3f}])"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
