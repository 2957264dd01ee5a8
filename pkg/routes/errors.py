from fastapi import HTTPException

from core.exceptions import DegenerateInputError, InvariantViolation, NlsError


def to_http(error: NlsError) -> HTTPException:
    """Map library errors to HTTP errors"""
    if isinstance(error, (DegenerateInputError, InvariantViolation)):
        return HTTPException(status_code=422, detail=str(error))
    return HTTPException(status_code=400, detail=str(error))
