"""
Run service: in-memory sessions mirrored to the file-backed run store
"""

import logging
import threading
from datetime import datetime
from typing import Any, Dict, List, Optional

from app.config import get_settings
from app.database.models import RunSession
from app.database.store import RunStore
from app.errors import MolgaError
from app.experiments.spec import ExperimentSpec
from app.ga.engine import GenerationStats, RunControl

logger = logging.getLogger(__name__)

ACTIVE = ("preparing", "running", "paused")


class SessionControl(RunControl):
    """Pause / resume / stop flags checked by the GA between generations"""

    def __init__(self, service: "RunService", run_id: str):
        self.service = service
        self.run_id = run_id
        self._running = threading.Event()
        self._running.set()
        self._stop = threading.Event()

    def pause(self) -> None:
        self._running.clear()

    def resume(self) -> None:
        self._running.set()

    def stop(self) -> None:
        self._stop.set()
        self._running.set()

    @property
    def stopped(self) -> bool:
        return self._stop.is_set()

    def should_stop(self) -> bool:
        return self._stop.is_set()

    def wait_if_paused(self) -> None:
        self._running.wait()

    def on_generation(self, stats: GenerationStats) -> None:
        self.service.record_generation(self.run_id, stats)


class RunService:
    """Service for run session operations"""

    def __init__(self, store: Optional[RunStore] = None):
        self.store = store or RunStore(get_settings().output_dir)
        self.sessions: Dict[str, RunSession] = {}
        self.controls: Dict[str, SessionControl] = {}
        self.specs: Dict[str, ExperimentSpec] = {}
        self._lock = threading.Lock()

    def restore(self) -> int:
        """Load earlier sessions; runs that were active when the service died are marked interrupted"""
        for run_id, session in self.store.load_all().items():
            if session.status in ACTIVE:
                session.status = "interrupted"
                session.error = "Service stopped while the run was active"
                self.store.save(session)
            self.sessions[run_id] = session
        return len(self.sessions)

    def create_run(self, run_id: str, spec: ExperimentSpec) -> RunSession:
        """Create a new run session; the run directory is <output>/<run_id>"""
        spec = spec.model_copy(update={"run_name": run_id, "out": str(self.store.output_dir), "workers": 1})
        session = RunSession(
            id=run_id,
            kind=spec.kind,
            run_dir=str(self.store.output_dir / run_id),
            start_time=datetime.utcnow().isoformat(),
            progress={"generation": 0, "generations": spec.ga.generations, "percentage": 0.0},
        )
        with self._lock:
            self.sessions[run_id] = session
            self.specs[run_id] = spec
            self.controls[run_id] = SessionControl(self, run_id)
            self.store.save(session)
        return session

    def get_run(self, run_id: str) -> Optional[RunSession]:
        return self.sessions.get(run_id)

    def list_runs(self) -> List[RunSession]:
        return sorted(self.sessions.values(), key=lambda s: s.start_time or "", reverse=True)

    def update_run(self, run_id: str, **update_data: Any) -> Optional[RunSession]:
        """Update a run session and mirror it to run.json"""
        with self._lock:
            session = self.sessions.get(run_id)
            if session is None:
                return None
            session = session.model_copy(update=update_data)
            self.sessions[run_id] = session
            self.store.save(session)
            return session

    def record_generation(self, run_id: str, stats: GenerationStats) -> None:
        session = self.sessions.get(run_id)
        if session is None:
            return
        generations = max(1, self.specs[run_id].ga.generations)
        metrics = stats.model_dump(exclude={"best_selfies"})
        metrics["timestamp"] = datetime.utcnow().isoformat()
        self.update_run(
            run_id,
            progress={
                "generation": stats.generation,
                "generations": generations,
                "percentage": min(100.0, stats.generation / generations * 100),
                "max_J": stats.max_J,
                "beta": stats.beta_used,
            },
            generation_metrics=[*session.generation_metrics, metrics],
        )

    def pause(self, run_id: str) -> bool:
        control = self.controls.get(run_id)
        if control is None:
            return False
        control.pause()
        self.update_run(run_id, status="paused")
        return True

    def resume(self, run_id: str) -> bool:
        control = self.controls.get(run_id)
        if control is None:
            return False
        control.resume()
        self.update_run(run_id, status="running")
        return True

    def stop(self, run_id: str) -> bool:
        control = self.controls.get(run_id)
        if control is None:
            return False
        control.stop()
        self.update_run(run_id, status="stopped", error="Run stopped by user")
        return True

    def execute(self, run_id: str) -> None:
        """Background task body (runs in a worker thread)"""
        from app.experiments.commands import run_experiment

        spec = self.specs[run_id]
        control = self.controls[run_id]
        label = f"Run {run_id[:8]}"
        logger.info(f"[{label}] Starting {spec.kind}...")
        self.update_run(run_id, status="running")
        try:
            result = run_experiment(spec, control)
        except (MolgaError, FileNotFoundError) as e:
            logger.error(f"❌ [{label}] Failed: {e}")
            self.update_run(run_id, status="failed", error=str(e), end_time=datetime.utcnow().isoformat())
            return
        except Exception as e:
            logger.exception(f"❌ [{label}] Crashed: {e}")
            self.update_run(
                run_id, status="failed", error=f"{type(e).__name__}: {e}", end_time=datetime.utcnow().isoformat()
            )
            return
        finally:
            self.controls.pop(run_id, None)

        if control.stopped:
            status = "stopped"
        else:
            status = "completed" if result.completed else "failed"
        self.update_run(
            run_id,
            status=status,
            result={"run_dir": str(result.run_dir), "summary": result.summary},
            end_time=datetime.utcnow().isoformat(),
        )
        if status == "completed":
            logger.info(f"✅ [{label}] Completed - outputs in {result.run_dir}")
        else:
            logger.warning(f"⚠️  [{label}] Ended with status {status}, partial outputs in {result.run_dir}")


_service: Optional[RunService] = None


def get_run_service() -> RunService:
    global _service
    if _service is None:
        _service = RunService()
    return _service
