"""Wall-clock stage timing shared by the decomposition, pipeline and bench code."""
import time
from contextlib import contextmanager
from typing import Dict, Optional


@contextmanager
def stage_timer(timings: Optional[Dict[str, float]], stage: str):
    """Accumulate the wall time of the enclosed block into timings[stage] (milliseconds)."""
    start = time.perf_counter()
    try:
        yield
    finally:
        if timings is not None:
            timings[stage] = timings.get(stage, 0.0) + (time.perf_counter() - start) * 1000.0


def rounded(timings: Dict[str, float]) -> Dict[str, float]:
    """Round a stage-timing map for reporting."""
    return {stage: round(ms, 3) for stage, ms in timings.items()}
