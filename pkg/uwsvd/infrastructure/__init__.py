from uwsvd.infrastructure.logging import configure_logging
from uwsvd.infrastructure.monitoring import FLOP_BUCKETS, FlopCounter, RunMetrics

__all__ = ["configure_logging", "FLOP_BUCKETS", "FlopCounter", "RunMetrics"]
