from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional

from uwsvd.detection.problem import DetectionProblem
from uwsvd.errors import UnknownNameError
from uwsvd.infrastructure.monitoring import FlopCounter
from uwsvd.solvers.iterative import Algorithm, IterationCallback, SolverSpec, SolverTrace, run


class SolverFamily(Enum):
    STATIONARY = "stationary"
    SPLITTING = "matrix_splitting"
    GRADIENT = "gradient"


@dataclass
class SolverMetadata:
    name: str
    description: str
    family: SolverFamily
    needs_gram: bool
    table_row: str


class Solver:
    def __init__(self, metadata: SolverMetadata, func: Callable[..., SolverTrace]):
        self.metadata = metadata
        self.func = func

    def execute(self, problem: DetectionProblem, spec: SolverSpec, **kwargs) -> SolverTrace:
        return self.func(problem, spec, **kwargs)


class SolverRegistry:
    """Name -> solver lookup used by the experiment harness and the CLI."""

    def __init__(self):
        self.solvers: Dict[str, Solver] = {}
        self.families: Dict[SolverFamily, List[str]] = {family: [] for family in SolverFamily}
        self._register_builtin_solvers()

    def _register_builtin_solvers(self):
        builtin = [
            SolverMetadata("ri", "Richardson iteration", SolverFamily.STATIONARY, False, "2MN"),
            SolverMetadata("ji", "Jacobi iteration", SolverFamily.SPLITTING, False, "2MN + N"),
            SolverMetadata("gs", "Gauss-Seidel iteration", SolverFamily.SPLITTING, True, "1.5N^2"),
            SolverMetadata("ssor", "Symmetric successive over-relaxation", SolverFamily.SPLITTING, True, "2N^2 + N"),
            SolverMetadata("lbfgs", "Memory-one L-BFGS with exact line search", SolverFamily.GRADIENT, False,
                           "4MN + N^2 + 5N"),
            SolverMetadata("cg", "Conjugate gradient", SolverFamily.GRADIENT, False, "2MN + 5N"),
        ]
        for metadata in builtin:
            self.register_solver(metadata, run)

    def register_solver(self, metadata: SolverMetadata, func: Callable[..., SolverTrace]):
        self.solvers[metadata.name] = Solver(metadata, func)
        if metadata.name not in self.families[metadata.family]:
            self.families[metadata.family].append(metadata.name)

    def get(self, name: str) -> Solver:
        solver = self.solvers.get(str(name).lower())
        if solver is None:
            raise UnknownNameError("solver", name, self.solvers)
        return solver

    def execute_solver(
        self,
        name: str,
        problem: DetectionProblem,
        spec: SolverSpec,
        callback: Optional[IterationCallback] = None,
        counter: Optional[FlopCounter] = None,
    ) -> SolverTrace:
        solver = self.get(name)
        if Algorithm(solver.metadata.name) is not spec.algorithm:
            spec = SolverSpec(
                Algorithm(solver.metadata.name),
                spec.max_iterations,
                spec.initial_iterate,
                spec.omega,
                spec.lbfgs_textbook,
                spec.cg_preconditioned,
            )
        return solver.execute(problem, spec, per_iteration_callback=callback, counter=counter)

    def list_available_solvers(self) -> Dict[str, List[Dict[str, object]]]:
        result = {}
        for family, names in self.families.items():
            result[family.value] = [
                {
                    "name": self.solvers[name].metadata.name,
                    "description": self.solvers[name].metadata.description,
                    "needs_gram": self.solvers[name].metadata.needs_gram,
                    "per_iteration": self.solvers[name].metadata.table_row,
                }
                for name in names
            ]
        return result
