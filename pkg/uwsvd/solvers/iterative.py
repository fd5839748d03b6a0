"""Iterative solvers for Hermitian positive definite detection systems.

Every solver works on a DetectionProblem and only touches the Gram matrix
through its operator: RI, JI, L-BFGS and CG use matvecs, GS and SSOR
materialize once and then use triangular solves.
"""
import csv
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import numpy.typing as npt
import structlog

from uwsvd.detection.problem import DetectionProblem
from uwsvd.errors import NumericalError, SingularMatrixError, ValidationError
from uwsvd.infrastructure.monitoring import FlopCounter, charge
from uwsvd.linalg import ComplexMatrix, ComplexVector, solve_lower_triangular, solve_upper_triangular

log = structlog.get_logger(__name__)

CURVATURE_FLOOR = 1e-14
SECANT_FLOOR = 1e-30
RESIDUAL_FLOOR = np.finfo(np.float64).eps

IterationCallback = Callable[[int, ComplexVector], None]


class Algorithm(str, Enum):
    RI = "ri"
    JI = "ji"
    GS = "gs"
    SSOR = "ssor"
    LBFGS = "lbfgs"
    CG = "cg"

    @property
    def needs_materialized(self) -> bool:
        return self in (Algorithm.GS, Algorithm.SSOR)


@dataclass(frozen=True)
class SolverSpec:
    algorithm: Algorithm
    max_iterations: int
    initial_iterate: Optional[ComplexVector] = None
    omega: float = 1.0
    lbfgs_textbook: bool = False
    cg_preconditioned: bool = False

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not 0.0 < self.omega < 2.0:
            raise ValidationError(f"SSOR omega must lie in (0, 2), got {self.omega}")


@dataclass
class SolverTrace:
    algorithm: Algorithm
    initial_residual: float
    residual_norms: List[float] = field(default_factory=list)
    flops: List[float] = field(default_factory=list)
    stagnated: List[bool] = field(default_factory=list)
    iterates: List[ComplexVector] = field(default_factory=list)
    ser: List[float] = field(default_factory=list)
    solution: Optional[ComplexVector] = None

    @property
    def iterations(self) -> int:
        return len(self.residual_norms)

    @property
    def stagnations(self) -> int:
        return sum(self.stagnated)

    def relative_residuals(self) -> npt.NDArray[np.float64]:
        scale = self.initial_residual if self.initial_residual > 0 else 1.0
        return np.asarray(self.residual_norms) / scale

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["iteration", "residual_norm", "cumulative_flops"])
            for t, (res, flops) in enumerate(zip(self.residual_norms, self.flops), start=1):
                writer.writerow([t, f"{res:.17g}", f"{flops:.17g}"])
        return path


class Preconditioner(ABC):
    """Applies M^-1 r without forming M^-1."""

    @abstractmethod
    def apply(self, r: ComplexVector, counter: Optional[FlopCounter] = None) -> ComplexVector:
        pass

    @abstractmethod
    def matrix(self) -> ComplexMatrix:
        """Dense M, for consistency checks only."""


class JacobiPreconditioner(Preconditioner):
    def __init__(self, diagonal: np.ndarray, unit_diagonal: bool = False):
        if np.any(diagonal == 0):
            raise SingularMatrixError("Jacobi preconditioner has a zero diagonal entry")
        self.diagonal = diagonal
        self.unit_diagonal = unit_diagonal

    def apply(self, r, counter=None):
        # D = I on e-signal ZF problems: JI collapses to RI.
        if self.unit_diagonal:
            return r
        charge(counter, "per_iteration", r.size)
        return r / self.diagonal

    def matrix(self):
        return np.diag(self.diagonal).astype(np.complex128)


class GaussSeidelPreconditioner(Preconditioner):
    def __init__(self, lower: ComplexMatrix):
        self.lower = lower

    def apply(self, r, counter=None):
        n = r.size
        charge(counter, "per_iteration", n * (n + 1) // 2)
        return solve_lower_triangular(self.lower, r)

    def matrix(self):
        return self.lower.copy()


class SsorPreconditioner(Preconditioner):
    """M = omega/(2-omega) (D/omega + L_s) D^-1 (D/omega + L_s)^H, L_s strictly lower.

    With omega = 1 this is L D^-1 L^H; with a unit diagonal it is L L^H.
    """

    def __init__(self, lower: ComplexMatrix, omega: float = 1.0, unit_diagonal: bool = False):
        self.diagonal = np.diag(lower).real.copy()
        if np.any(self.diagonal == 0):
            raise SingularMatrixError("SSOR preconditioner has a zero diagonal entry")
        self.omega = omega
        self.unit_diagonal = unit_diagonal
        strict = np.tril(lower, -1)
        self.sweep = np.diag(self.diagonal).astype(np.complex128) + omega * strict
        self.sweep_h = self.sweep.conj().T

    def apply(self, r, counter=None):
        n = r.size
        z = solve_lower_triangular(self.sweep, r)
        if not self.unit_diagonal:
            z = self.diagonal * z
            charge(counter, "per_iteration", n)
        z = solve_upper_triangular(self.sweep_h, z)
        if self.omega != 1.0:
            z = self.omega * (2.0 - self.omega) * z
            charge(counter, "per_iteration", n)
        charge(counter, "per_iteration", n * (n + 1))
        return z

    def matrix(self):
        d_inv = np.diag(1.0 / self.diagonal)
        return (self.sweep @ d_inv @ self.sweep_h) / (self.omega * (2.0 - self.omega))


def build_preconditioner(
    problem: DetectionProblem,
    kind: Union[Algorithm, str],
    omega: float = 1.0,
    counter: Optional[FlopCounter] = None,
) -> Preconditioner:
    kind = Algorithm(kind)
    unit = problem.operator.unit_diagonal
    if kind is Algorithm.JI:
        return JacobiPreconditioner(problem.operator.diagonal(counter), unit_diagonal=unit)
    if kind not in (Algorithm.GS, Algorithm.SSOR):
        raise ValidationError(f"{kind.value} is not a matrix-splitting method")
    lower = problem.operator.lower(counter)
    charge(counter, "matrix_inverse", problem.size**2)
    if kind is Algorithm.GS:
        return GaussSeidelPreconditioner(lower)
    return SsorPreconditioner(lower, omega=omega, unit_diagonal=unit)


def step_richardson(
    problem: DetectionProblem, x_t: ComplexVector, counter: Optional[FlopCounter] = None
) -> ComplexVector:
    return x_t + (problem.rhs - problem.operator.matvec(x_t, counter))


def step_matrix_splitting(
    problem: DetectionProblem,
    x_t: ComplexVector,
    preconditioner: Union[Preconditioner, Algorithm, str],
    counter: Optional[FlopCounter] = None,
) -> ComplexVector:
    if not isinstance(preconditioner, Preconditioner):
        preconditioner = build_preconditioner(problem, preconditioner, counter=counter)
    residual = problem.rhs - problem.operator.matvec(x_t, counter)
    return x_t + preconditioner.apply(residual, counter)


@dataclass
class LbfgsState:
    theta0: np.ndarray
    unit_theta0: bool = False
    textbook: bool = False
    prev_x: Optional[ComplexVector] = None
    prev_g: Optional[ComplexVector] = None
    stagnated: bool = False

    def __post_init__(self):
        if np.any(self.theta0 <= 0):
            raise ValidationError("theta0 entries must be positive")

    @classmethod
    def for_problem(cls, problem: DetectionProblem, textbook: bool = False, counter=None) -> "LbfgsState":
        """Theta_0 = D(G)^-1."""
        diag = problem.operator.diagonal(counter)
        return cls(theta0=1.0 / diag, unit_theta0=problem.operator.unit_diagonal, textbook=textbook)

    def scale(self, v: ComplexVector, counter=None) -> ComplexVector:
        if self.unit_theta0:
            return v
        charge(counter, "per_iteration", v.size)
        return self.theta0 * v


def _lbfgs_direction(state: LbfgsState, x_t, g, counter) -> ComplexVector:
    n = g.size
    if state.prev_x is None:
        return state.scale(g, counter)

    ds = x_t - state.prev_x
    dg = g - state.prev_g
    curvature_pair = np.vdot(ds, dg)
    charge(counter, "per_iteration", n)
    if abs(curvature_pair) <= SECANT_FLOOR:
        return state.scale(g, counter)

    if state.textbook:
        # d = -H g, H = (I - r s y^H) Theta0 (I - r y s^H) + r s s^H, r = 1/(y^H s)
        rho = 1.0 / np.conj(curvature_pair)
        s_dot_g = np.vdot(ds, g)
        q = g - rho * s_dot_g * dg
        z = state.scale(q, counter)
        z = z - rho * np.vdot(dg, z) * ds + rho * s_dot_g * ds
        charge(counter, "per_iteration", 5 * n)
        return -z

    theta_g = state.scale(g, counter)
    coefficient = np.vdot(dg, theta_g) / curvature_pair
    charge(counter, "per_iteration", 2 * n)
    return coefficient * ds - theta_g


def step_lbfgs(
    problem: DetectionProblem,
    state: LbfgsState,
    x_t: ComplexVector,
    counter: Optional[FlopCounter] = None,
) -> Tuple[ComplexVector, LbfgsState]:
    """One L-BFGS step on f(x) = x^H G x / 2 - Re(b^H x) with exact line search.

    Direction d_t = Theta_t g_t with Theta_t the memory-one rank-one correction of
    Theta_0 (first step d_0 = Theta_0 g_0); step xi_t = -(d^H g)/(d^H G d).
    """
    n = x_t.size
    g = problem.operator.matvec(x_t, counter) - problem.rhs
    d = _lbfgs_direction(state, x_t, g, counter)

    ad = problem.operator.matvec(d, counter)
    curvature = np.vdot(d, ad).real
    charge(counter, "per_iteration", n)
    if curvature <= CURVATURE_FLOOR * np.vdot(d, d).real:
        return x_t, LbfgsState(
            state.theta0, state.unit_theta0, state.textbook, state.prev_x, state.prev_g, stagnated=True
        )

    xi = -np.vdot(d, g) / curvature
    charge(counter, "per_iteration", 2 * n)
    x_next = x_t + xi * d
    return x_next, LbfgsState(state.theta0, state.unit_theta0, state.textbook, x_t, g)


@dataclass
class CgState:
    residual: ComplexVector
    direction: ComplexVector
    rz: complex
    theta0: Optional[np.ndarray] = None
    stagnated: bool = False

    @classmethod
    def start(
        cls, problem: DetectionProblem, x0: ComplexVector, preconditioned: bool = False, counter=None
    ) -> "CgState":
        theta0 = None
        if preconditioned and not problem.operator.unit_diagonal:
            theta0 = 1.0 / problem.operator.diagonal(counter)
        r = problem.rhs - problem.operator.matvec(x0, counter)
        z = r if theta0 is None else theta0 * r
        return cls(residual=r, direction=z.copy(), rz=np.vdot(r, z), theta0=theta0)


def step_cg(
    problem: DetectionProblem,
    cg_state: CgState,
    x_t: ComplexVector,
    counter: Optional[FlopCounter] = None,
) -> Tuple[ComplexVector, CgState]:
    n = x_t.size
    # past the roundoff floor rz underflows and beta overflows
    rz_old = cg_state.rz
    floor = RESIDUAL_FLOOR * np.linalg.norm(problem.rhs)
    if not np.isfinite(rz_old) or rz_old == 0 or np.linalg.norm(cg_state.residual) <= floor:
        return x_t, replace(cg_state, stagnated=True)

    p = cg_state.direction
    ap = problem.operator.matvec(p, counter)
    curvature = np.vdot(p, ap).real
    charge(counter, "per_iteration", n)
    if curvature <= CURVATURE_FLOOR * np.vdot(p, p).real:
        return x_t, replace(cg_state, stagnated=True)

    alpha = rz_old / curvature
    x_next = x_t + alpha * p
    r = cg_state.residual - alpha * ap
    z = r if cg_state.theta0 is None else cg_state.theta0 * r
    rz = np.vdot(r, z)
    beta = rz / rz_old
    charge(counter, "per_iteration", 4 * n + (0 if cg_state.theta0 is None else n))
    return x_next, CgState(r, z + beta * p, rz, cg_state.theta0)


def run(
    problem: DetectionProblem,
    spec: SolverSpec,
    per_iteration_callback: Optional[IterationCallback] = None,
    counter: Optional[FlopCounter] = None,
    keep_iterates: bool = False,
) -> SolverTrace:
    """Execute exactly spec.max_iterations steps; stagnated steps are no-ops flagged in the trace."""
    counter = counter if counter is not None else FlopCounter()
    algorithm = spec.algorithm
    if algorithm.needs_materialized:
        problem = problem.materialized(counter)

    n = problem.size
    x = np.zeros(n, dtype=np.complex128) if spec.initial_iterate is None else np.array(spec.initial_iterate, dtype=np.complex128)
    if x.shape != (n,):
        raise ValidationError(f"initial iterate has shape {x.shape}, expected ({n},)")

    trace = SolverTrace(algorithm=algorithm, initial_residual=float(np.linalg.norm(problem.residual(x))))

    preconditioner = None
    lbfgs_state = None
    cg_state = None
    if algorithm in (Algorithm.JI, Algorithm.GS, Algorithm.SSOR):
        preconditioner = build_preconditioner(problem, algorithm, spec.omega, counter)
    elif algorithm is Algorithm.LBFGS:
        lbfgs_state = LbfgsState.for_problem(problem, spec.lbfgs_textbook, counter)
    elif algorithm is Algorithm.CG:
        cg_state = CgState.start(problem, x, spec.cg_preconditioned, counter)

    for t in range(1, spec.max_iterations + 1):
        stagnated = False
        if algorithm is Algorithm.RI:
            x = step_richardson(problem, x, counter)
        elif preconditioner is not None:
            x = step_matrix_splitting(problem, x, preconditioner, counter)
        elif lbfgs_state is not None:
            x, lbfgs_state = step_lbfgs(problem, lbfgs_state, x, counter)
            stagnated = lbfgs_state.stagnated
        else:
            x, cg_state = step_cg(problem, cg_state, x, counter)
            stagnated = cg_state.stagnated

        if not np.all(np.isfinite(x)):
            last = trace.residual_norms[-1] if trace.residual_norms else trace.initial_residual
            raise NumericalError(f"{algorithm.value} produced a non-finite iterate at step {t}", residual=last)

        trace.residual_norms.append(float(np.linalg.norm(problem.residual(x))))
        trace.flops.append(counter.total)
        trace.stagnated.append(stagnated)
        if keep_iterates:
            trace.iterates.append(x.copy())
        if per_iteration_callback is not None:
            per_iteration_callback(t, x)

    trace.solution = x
    log.debug(
        "solver_finished",
        algorithm=algorithm.value,
        coords=problem.coords.value,
        iterations=trace.iterations,
        stagnations=trace.stagnations,
        relative_residual=float(trace.relative_residuals()[-1]),
    )
    return trace
