from fastapi import APIRouter
from pydantic import BaseModel
from typing import List

from core.evaluation import misclassification_rate
from core.exceptions import NlsError
from routes.errors import to_http

router = APIRouter(prefix="/api/evaluate", tags=["evaluate"])

class EvaluateRequest(BaseModel):
    pred: List[int]
    truth: List[int]

@router.post("/")
def evaluate(request: EvaluateRequest):
    """Misclassification rate under the best label matching"""
    try:
        error = misclassification_rate(request.pred, request.truth)
    except NlsError as e:
        raise to_http(e)
    
    return {
        "error": error,
        "error_percentage": round(100 * error, 2)
    }
