"""
File-backed run store: one run.json per run directory
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Union

from app.database.models import RunSession

logger = logging.getLogger(__name__)

RUN_FILE = "run.json"


class RunStore:
    """Mirrors run sessions to <output_dir>/<run_id>/run.json"""

    def __init__(self, output_dir: Union[str, Path]):
        self.output_dir = Path(output_dir)

    def path(self, run_id: str) -> Path:
        return self.output_dir / run_id / RUN_FILE

    def save(self, session: RunSession) -> Path:
        target = self.path(session.id)
        target.parent.mkdir(parents=True, exist_ok=True)
        tmp = target.with_suffix(".tmp")
        tmp.write_text(session.model_dump_json(indent=2), encoding="utf-8")
        tmp.replace(target)
        return target

    def load(self, run_id: str) -> Optional[RunSession]:
        target = self.path(run_id)
        if not target.exists():
            return None
        try:
            return RunSession.model_validate_json(target.read_text(encoding="utf-8"))
        except ValueError as e:
            logger.warning(f"⚠️  [RunStore] Unreadable {target}: {e}")
            return None

    def load_all(self) -> Dict[str, RunSession]:
        """Every readable run.json under the output directory"""
        sessions: Dict[str, RunSession] = {}
        if not self.output_dir.is_dir():
            return sessions
        for target in sorted(self.output_dir.glob(f"*/{RUN_FILE}")):
            session = self.load(target.parent.name)
            if session is not None:
                sessions[session.id] = session
        return sessions
