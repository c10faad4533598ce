"""
FastAPI application for the molga run service
Local experiment runs with live per-generation metrics
"""

import logging
import os
from contextlib import asynccontextmanager

import uvicorn
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.config import get_settings
from app.logger import configure_logging
from app.routers import experiments
from app.services.run_service import get_run_service

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan manager"""
    # Startup
    settings = get_settings()
    configure_logging(settings.log_level)
    logger.info("🚀 molga run service starting...")
    restored = get_run_service().restore()
    logger.info(f"✅ Run store at {settings.output_dir} ({restored} earlier runs)")
    yield
    # Shutdown
    logger.info("🛑 molga run service shutting down")


# Create FastAPI app
app = FastAPI(
    title="molga API",
    description="SELFIES genetic algorithm with a discriminator penalty - local experiment runs",
    version="1.0.0",
    lifespan=lifespan,
)

# CORS middleware
allowed_origins = os.getenv("ALLOWED_ORIGINS", "http://localhost:3000,http://127.0.0.1:3000").split(",")
app.add_middleware(
    CORSMiddleware,
    allow_origins=allowed_origins,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


# Global exception handler
@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Handle all uncaught exceptions"""
    logger.exception(f"❌ Error: {exc}")
    return JSONResponse(
        status_code=500,
        content={
            "success": False,
            "detail": str(exc),
            "error_type": type(exc).__name__,
        },
    )


app.include_router(experiments.router, prefix="/api/experiments", tags=["experiments"])


@app.get("/")
async def root():
    """Root endpoint"""
    return JSONResponse(content={
        "message": "molga API",
        "version": "1.0.0",
        "status": "running",
        "description": "SELFIES genetic algorithm with a discriminator penalty",
    })


@app.get("/health")
async def health():
    """Health check endpoint"""
    return JSONResponse(content={"status": "healthy"})


if __name__ == "__main__":
    settings = get_settings()
    uvicorn.run(
        "app.main:app",
        host=settings.host,
        port=settings.port,
        reload=os.getenv("ENVIRONMENT", "development") == "development",
    )
