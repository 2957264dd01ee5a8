from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from contextlib import asynccontextmanager
import uvicorn

from config.settings import get_settings
from routes import evaluation, segmentation, synthetic
from utils.logger import logger

@asynccontextmanager
async def lifespan(app: FastAPI):
    """Startup and shutdown events"""
    logger.info("🚀 NLS segmentation service starting...")
    logger.info(f"✅ Worker threads per request: {get_settings().NLS_THREADS or 'auto'}")
    
    yield
    
    logger.info("👋 Shutting down NLS segmentation service...")

# Create app
app = FastAPI(
    title="NLS Segmentation Service",
    description="Subspace and motion segmentation by nearness to local subspaces",
    version="1.0.0",
    lifespan=lifespan
)

# CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# Include routers
app.include_router(segmentation.router)
app.include_router(evaluation.router)
app.include_router(synthetic.router)

@app.get("/")
async def root():
    """Root endpoint"""
    return {
        "message": "NLS Segmentation Service",
        "status": "running",
        "docs": "/docs"
    }

@app.get("/health")
async def health_check():
    """Health check"""
    return {"status": "healthy"}

if __name__ == "__main__":
    settings = get_settings()
    
    uvicorn.run(
        "main:app",
        host=settings.HOST,
        port=settings.PORT,
        reload=False,
        log_level="info"
    )
