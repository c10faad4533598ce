"""
Configuration management: environment settings and bundled data paths
"""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Try multiple paths to find .env file
env_paths = [
    Path(__file__).parent.parent / '.env',  # backend/.env
    Path('.env'),  # Current directory
]
for env_path in env_paths:
    if env_path.exists():
        load_dotenv(dotenv_path=env_path)
        break

DATA_DIR = Path(__file__).parent / "data"
ALPHABET_DIR = DATA_DIR / "alphabets"
DEFAULT_ALPHABET_PATH = ALPHABET_DIR / "default.json"
EXTENDED_ALPHABET_PATH = ALPHABET_DIR / "extended.json"
DEFAULT_DATASET_PATH = DATA_DIR / "reference_fixture.smi"


class Settings(BaseModel):
    """Ambient settings read from the environment"""
    log_level: str = "INFO"
    output_dir: Path = Path("runs")
    workers: int = Field(default=1, ge=1)
    dataset: Path = DEFAULT_DATASET_PATH
    host: str = "0.0.0.0"
    port: int = 8000


def get_settings() -> Settings:
    """Build settings from MOLGA_* environment variables"""
    return Settings(
        log_level=os.getenv("MOLGA_LOG_LEVEL", "INFO"),
        output_dir=Path(os.getenv("MOLGA_OUTPUT_DIR", "runs")),
        workers=int(os.getenv("MOLGA_WORKERS", "1")),
        dataset=Path(os.getenv("MOLGA_DATASET", str(DEFAULT_DATASET_PATH))),
        host=os.getenv("HOST", "0.0.0.0"),
        port=int(os.getenv("PORT", "8000")),
    )


def resolve_alphabet_path(name_or_path: Optional[str]) -> Path:
    """Map 'default' / 'extended' to the bundled files, anything else to a path"""
    if not name_or_path or name_or_path == "default":
        return DEFAULT_ALPHABET_PATH
    if name_or_path == "extended":
        return EXTENDED_ALPHABET_PATH
    return Path(name_or_path)
