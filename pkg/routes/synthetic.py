from fastapi import APIRouter

from core.datagen import UnionSpec, sample_union
from core.exceptions import NlsError
from routes.errors import to_http

router = APIRouter(prefix="/api/synth", tags=["synth"])

@router.post("/union")
def synth_union(spec: UnionSpec):
    """Points on a union of random subspaces, with their labels"""
    try:
        W, labels = sample_union(spec)
    except NlsError as e:
        raise to_http(e)
    
    return {
        "matrix": W.tolist(),
        "labels": labels.tolist()
    }
