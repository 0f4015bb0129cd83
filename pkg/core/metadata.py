from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Dict


PACKAGE_VERSION = "0.1.0"


def build_metadata(calculator_name: str, **extra: Any) -> Dict[str, Any]:
    """Return common metadata for responses.

    Includes ISO8601 timestamp (UTC), version, calculator name and any
    run-specific keys (seed, tolerances) passed by the caller.
    """
    metadata: Dict[str, Any] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "version": PACKAGE_VERSION,
        "calculator_name": calculator_name,
    }
    metadata.update(extra)
    return metadata
