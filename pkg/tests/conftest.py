from typing import Any, Dict

import numpy as np
import pytest
import structlog

from uwsvd.channels import ChannelGenerator, PropagationParams, build_geometry
from uwsvd.detection import Coordinates, DenseGram, DetectionProblem, DetectorMode
from uwsvd.infrastructure.settings import validate_config


@pytest.fixture(autouse=True)
def _reset_structlog():
    # configure_logging() binds structlog to the current sys.stderr, which the
    # CLI runner swaps for a temporary stream; restore defaults between tests.
    yield
    structlog.reset_defaults()


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def small_geometry():
    return build_geometry("ula", m=64, k_users=4, n_ue=2, frequency=3.5e9)


@pytest.fixture
def correlated_generator(small_geometry):
    return ChannelGenerator(small_geometry, PropagationParams(corr_rho=0.5))


def random_spd(rng, n: int, cond: float) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    eigenvalues = np.linspace(1.0, cond, n)
    a = (q * eigenvalues) @ q.conj().T
    return 0.5 * (a + a.conj().T)


def dense_problem(matrix, rhs, mode: DetectorMode = DetectorMode.ZF) -> DetectionProblem:
    return DetectionProblem(
        operator=DenseGram(np.asarray(matrix, dtype=np.complex128)),
        rhs=np.asarray(rhs, dtype=np.complex128),
        mode=mode,
        coords=Coordinates.ORIGINAL,
    )


def small_raw_config(**sections: Any) -> Dict[str, Any]:
    raw: Dict[str, Any] = {
        "experiment": "ser_curve",
        "seed": 7,
        "trials": 3,
        "system": {"m": 32, "k_users": 2, "n_ue": 2},
        "channel": {"model": 2, "corr_rho": 0.5},
        "modem": {"qam_order": 4, "snr_db": [10.0]},
        "solvers": [
            {"algorithm": "ssor", "iterations": 6},
            {"algorithm": "lbfgs", "iterations": 6},
        ],
    }
    raw.update(sections)
    return raw


@pytest.fixture
def small_config(tmp_path):
    def build(**sections: Any):
        raw = small_raw_config(**sections)
        raw["output"] = {"directory": str(tmp_path / "out"), **raw.get("output", {})}
        return validate_config(raw)

    return build
