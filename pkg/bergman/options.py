from collections.abc import Sequence
from typing import Optional

from bergman import optmanager
from bergman.asymptotics import DEFAULT_ALPHAS
from bergman.berezin import BUILTIN_SYMBOLS
from bergman.kernels import CLOSED_FORM
from bergman.kernels import DEFAULT_KERNEL_TOL
from bergman.kernels import HOLOMORPHIC
from bergman.kernels import RADIAL
from bergman.weights import BUILTIN_WEIGHTS


LOG_LEVELS = [
    "debug",
    "info",
    "warn",
    "error",
]

OUTPUT_FORMATS = ["csv", "json"]

ROUTES = [RADIAL, HOLOMORPHIC, CLOSED_FORM]


class Options(optmanager.OptManager):
    def __init__(self) -> None:
        super().__init__()

        self.add_option(
            "weight.name",
            str,
            "gamma",
            "Vertical weight profile ρ.",
            choices=list(BUILTIN_WEIGHTS)
        )

        self.add_option(
            "grid.n",
            int,
            2,
            "Dimension of the half-space H^n (n >= 2)."
        )
        self.add_option(
            "grid.alphas",
            Sequence[float],
            list(DEFAULT_ALPHAS),
            "Weight exponents α, comma separated."
        )
        self.add_option(
            "grid.b",
            Sequence[float],
            [1.0],
            "Heights b of the base point."
        )
        self.add_option(
            "grid.d",
            Sequence[float],
            [0.0],
            "Horizontal separations d = |x - a|."
        )
        self.add_option(
            "grid.y",
            Sequence[float],
            [],
            """
            Heights y of the second point. When empty, y = b for every base
            height, i.e. points lie above the diagonal.
            """
        )
        self.add_option(
            "grid.symbol",
            str,
            "exp",
            f"Vertical symbol for the Berezin transform: {", ".join(BUILTIN_SYMBOLS)} or exp:c."
        )
        self.add_option(
            "grid.route",
            str,
            RADIAL,
            "Evaluation route for the kernel command.",
            choices=ROUTES
        )
        self.add_option(
            "grid.jacobi_nodes",
            Optional[int],
            None,
            "Gauss–Jacobi nodes for the off-diagonal leading term (adaptive when unset)."
        )

        self.add_option(
            "tolerances.quad",
            float,
            DEFAULT_KERNEL_TOL,
            "Relative tolerance of the radial quadratures."
        )
        self.add_option(
            "tolerances.fd_step",
            float,
            1e-3,
            "Relative finite-difference step of the Δ̃² stencil."
        )

        self.add_option(
            "output.format",
            str,
            "csv",
            "Table format.",
            choices=OUTPUT_FORMATS
        )
        self.add_option(
            "output.path",
            Optional[str],
            None,
            "Output file; standard output when unset."
        )

        self.add_option(
            "log.level",
            str,
            "info",
            "The logging level.",
            choices=LOG_LEVELS
        )
