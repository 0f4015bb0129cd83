from typing import Any, Dict, Optional

from pydantic import BaseModel, Extra


class CalculatorRequest(BaseModel):
    """
    Base class for all calculator request models.
    Subclass this in each calculator to define its parameters and their
    preconditions; unknown keys are rejected so a misspelt parameter never
    falls back to a silent default.
    """
    metadata: Optional[Dict[str, Any]] = None

    class Config:
        extra = Extra.forbid
