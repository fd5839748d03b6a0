from uwsvd.linalg.core import (
    ComplexMatrix,
    ComplexVector,
    EconomySvd,
    EigenExtremes,
    as_complex_matrix,
    cond_number,
    economy_svd,
    eigen_extremes_hermitian,
    hermitian_spectrum,
    is_hermitian,
    solve_lower_triangular,
    solve_upper_triangular,
    sqrt_psd,
)

__all__ = [
    "ComplexMatrix",
    "ComplexVector",
    "EconomySvd",
    "EigenExtremes",
    "as_complex_matrix",
    "cond_number",
    "economy_svd",
    "eigen_extremes_hermitian",
    "hermitian_spectrum",
    "is_hermitian",
    "solve_lower_triangular",
    "solve_upper_triangular",
    "sqrt_psd",
]
