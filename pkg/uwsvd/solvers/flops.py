"""Closed-form multiply-accumulate counts per detector (one complex MAC = 1)."""
from dataclasses import asdict, dataclass
from typing import Dict

from uwsvd.errors import UnknownNameError, ValidationError

EXACT_DETECTORS = ("zf", "lmmse")


@dataclass(frozen=True)
class FlopBreakdown:
    algorithm: str
    gram_build: float
    matrix_inverse: float
    per_iteration: float
    uw_svd_overhead: float
    iterations: int

    def total(self, with_uw_svd: bool = False) -> float:
        iterative = self.per_iteration * self.iterations
        return self.gram_build + self.matrix_inverse + iterative + (self.uw_svd_overhead if with_uw_svd else 0.0)

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def uw_svd_overhead(m: int, n: int, n_ue: int) -> float:
    """Per-user SVDs (N_ue M N) plus post-processing (N_ue N + 2N)."""
    return float(n_ue * m * n + n_ue * n + 2 * n)


def _table(m: int, n: int) -> Dict[str, tuple]:
    return {
        "zf": (m * n * n, n**3, 0),
        "lmmse": (m * n * n, n**3, 0),
        "ri": (0, 0, 2 * m * n),
        "ji": (0, 0, 2 * m * n + n),
        "gs": (m * n * n, n**2, 1.5 * n**2),
        "ssor": (m * n * n, n**2, 2 * n**2 + n),
        "lbfgs": (0, 0, 4 * m * n + n**2 + 5 * n),
        "cg": (0, 0, 2 * m * n + 5 * n),
    }


def flop_estimate(algorithm: str, m: int, n: int, n_ue: int, t: int = 1) -> FlopBreakdown:
    if min(m, n, n_ue) < 1 or t < 0:
        raise ValidationError("dimensions must be positive and t non-negative")
    table = _table(m, n)
    name = str(getattr(algorithm, "value", algorithm)).lower()
    if name not in table:
        raise UnknownNameError("algorithm", name, table)
    gram, inverse, per_iteration = table[name]
    return FlopBreakdown(
        algorithm=name,
        gram_build=float(gram),
        matrix_inverse=float(inverse),
        per_iteration=float(per_iteration),
        uw_svd_overhead=uw_svd_overhead(m, n, n_ue),
        iterations=0 if name in EXACT_DETECTORS else t,
    )


def overhead_in_iterations(algorithm: str, m: int, n: int, n_ue: int) -> float:
    """UW-SVD overhead expressed in iterations of the given algorithm."""
    estimate = flop_estimate(algorithm, m, n, n_ue)
    if estimate.per_iteration == 0:
        raise ValidationError(f"{estimate.algorithm} has no per-iteration cost")
    return estimate.uw_svd_overhead / estimate.per_iteration
