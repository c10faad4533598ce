"""
Experiment run API endpoints
"""

import logging
import uuid
from datetime import datetime
from typing import Any, Dict, Optional

from fastapi import APIRouter, BackgroundTasks, Depends, HTTPException
from fastapi.concurrency import run_in_threadpool
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ValidationError

from app.experiments.spec import ExperimentKind, ExperimentSpec
from app.services.run_service import RunService, get_run_service

logger = logging.getLogger(__name__)

router = APIRouter()

MAX_GENERATIONS = 10_000
MAX_POPULATION = 10_000


class ExperimentRequest(BaseModel):
    kind: ExperimentKind = "evolve"
    ga: Dict[str, Any] = {}
    dataset: Optional[str] = None
    repeats: int = 1
    descriptors: Optional[str] = None
    fragments: Optional[str] = None
    renormalize: bool = False
    samples: Optional[int] = None
    length: Optional[int] = None
    targets: Optional[int] = None
    delta: Optional[float] = None
    target: Optional[str] = None


def _spec(request: ExperimentRequest) -> ExperimentSpec:
    payload = request.model_dump(exclude_none=True)
    try:
        spec = ExperimentSpec.model_validate(payload)
    except ValidationError as e:
        raise HTTPException(status_code=400, detail=f"Invalid experiment: {e.errors()[0]['msg']}")
    if spec.ga.generations > MAX_GENERATIONS:
        raise HTTPException(status_code=400, detail=f"Generations must be at most {MAX_GENERATIONS}")
    if spec.ga.population_size > MAX_POPULATION:
        raise HTTPException(status_code=400, detail=f"Population size must be at most {MAX_POPULATION}")
    return spec


def _session_or_404(service: RunService, run_id: str):
    session = service.get_run(run_id)
    if session is None:
        raise HTTPException(status_code=404, detail="Run not found")
    return session


@router.post("/start")
async def start_experiment(
    request: ExperimentRequest,
    background_tasks: BackgroundTasks,
    service: RunService = Depends(get_run_service),
):
    spec = _spec(request)
    run_id = str(uuid.uuid4())
    session = service.create_run(run_id, spec)

    # Run the GA in a real background thread
    background_tasks.add_task(run_in_threadpool, service.execute, run_id)
    logger.info(f"[API] ✅ {spec.kind} run {run_id} started")

    return JSONResponse(content={
        "success": True,
        "run_id": run_id,
        "status": session.status,
        "run_dir": session.run_dir,
        "message": f"{spec.kind} run started",
        "timestamp": datetime.utcnow().isoformat(),
    })


@router.get("/status/{run_id}")
async def get_status(run_id: str, service: RunService = Depends(get_run_service)):
    session = _session_or_404(service, run_id)
    return JSONResponse(content={
        "success": True,
        "status": session.status,
        "kind": session.kind,
        "progress": session.progress,
        "generationMetrics": session.generation_metrics,
        "result": session.result,
        "error": session.error,
    })


@router.get("/")
async def list_experiments(service: RunService = Depends(get_run_service)):
    runs = [
        {"run_id": s.id, "kind": s.kind, "status": s.status, "start_time": s.start_time, "run_dir": s.run_dir}
        for s in service.list_runs()
    ]
    return {"success": True, "runs": runs}


@router.post("/pause/{run_id}")
async def pause_experiment(run_id: str, service: RunService = Depends(get_run_service)):
    _session_or_404(service, run_id)
    if not service.pause(run_id):
        raise HTTPException(status_code=400, detail="Run is not active")
    return {"success": True, "status": "paused", "run_id": run_id}


@router.post("/resume/{run_id}")
async def resume_experiment(run_id: str, service: RunService = Depends(get_run_service)):
    _session_or_404(service, run_id)
    if not service.resume(run_id):
        raise HTTPException(status_code=400, detail="Run is not active")
    return {"success": True, "status": "running", "run_id": run_id}


@router.post("/stop/{run_id}")
async def stop_experiment(run_id: str, service: RunService = Depends(get_run_service)):
    _session_or_404(service, run_id)
    if not service.stop(run_id):
        raise HTTPException(status_code=400, detail="Run is not active")
    return {"success": True, "status": "stopped", "run_id": run_id}
