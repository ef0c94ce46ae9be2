"""
Special functions, log-domain complex arithmetic and quadrature engines.
"""

from bergman.numerics.logcomplex import LogComplex
from bergman.numerics.logcomplex import logc_sum
from bergman.numerics.quadrature import QuadratureResult
from bergman.numerics.quadrature import quad_jacobi
from bergman.numerics.quadrature import quad_semiinfinite
from bergman.numerics.quadrature import quad_semiinfinite_rows
from bergman.numerics.special import hyp0f1
from bergman.numerics.special import log_gamma
from bergman.numerics.special import sphere_area

__all__ = [
    "LogComplex",
    "QuadratureResult",
    "hyp0f1",
    "log_gamma",
    "logc_sum",
    "quad_jacobi",
    "quad_semiinfinite",
    "quad_semiinfinite_rows",
    "sphere_area",
]
