"""
Run session model persisted as run.json
"""

from pydantic import BaseModel
from typing import Dict, Any, Optional, List


class RunSession(BaseModel):
    """Run session model"""
    id: str
    kind: str
    status: str = "preparing"  # preparing, running, paused, completed, failed, stopped, interrupted
    run_dir: Optional[str] = None
    progress: Dict[str, Any] = {}
    generation_metrics: List[Dict[str, Any]] = []
    result: Optional[Dict[str, Any]] = None
    error: Optional[str] = None
    start_time: Optional[str] = None
    end_time: Optional[str] = None
