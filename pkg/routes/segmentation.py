from fastapi import APIRouter, Depends, File, HTTPException, UploadFile
from pydantic import BaseModel, ValidationError
from typing import List, Optional

from config.settings import resolve_workers
from core.exceptions import NlsError
from core.nls import NlsConfig, nls_segment
from routes.errors import to_http
from storage.matrix_file import decode_text, parse_matrix
from utils.logger import logger

router = APIRouter(prefix="/api/segment", tags=["segment"])

class SegmentRequest(BaseModel):
    matrix: List[List[float]]
    config: NlsConfig

class SegmentResponse(BaseModel):
    labels: List[int]
    r: int
    T_d: int
    threshold_index: int
    eta: float

def _segment(W, cfg: NlsConfig) -> SegmentResponse:
    try:
        labels, diagnostics = nls_segment(W, cfg)
    except NlsError as e:
        logger.error(f"Segmentation request failed: {str(e)}")
        raise to_http(e)
    
    return SegmentResponse(
        labels=labels.tolist(),
        r=diagnostics.rank,
        T_d=diagnostics.data_driven_index,
        threshold_index=diagnostics.threshold_index,
        eta=diagnostics.eta,
    )

@router.post("/", response_model=SegmentResponse)
def segment(request: SegmentRequest):
    """Segment the columns of a matrix"""
    cfg = request.config.with_updates(workers=resolve_workers())
    return _segment(request.matrix, cfg)

def upload_config(
    clusters: int,
    dim: int = 4,
    neighbors: int = 3,
    rank: Optional[int] = None,
    kappa: float = 0.1,
    norm: float = 2.0,
    seed: int = 0,
) -> NlsConfig:
    """Pipeline configuration from query parameters"""
    try:
        return NlsConfig(
            subspace_dim=dim,
            num_clusters=clusters,
            neighbors=neighbors,
            rank=rank,
            kappa=kappa,
            norm_p=norm,
            seed=seed,
            workers=resolve_workers(),
        )
    except ValidationError as e:
        raise HTTPException(status_code=422, detail=e.errors()[0]["msg"])

@router.post("/upload", response_model=SegmentResponse)
async def segment_upload(file: UploadFile = File(...),
                         cfg: NlsConfig = Depends(upload_config)):
    """Segment a matrix uploaded as a MatrixFile CSV"""
    if not file.filename.endswith('.csv'):
        raise HTTPException(status_code=400, detail="Only CSV files allowed")
    
    content = await file.read()
    try:
        W = parse_matrix(decode_text(content, file.filename).splitlines(), path=file.filename)
    except NlsError as e:
        raise to_http(e)
    
    return _segment(W, cfg)
