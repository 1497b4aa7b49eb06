from .kkt import AUGMENTED, AUTO, NORMAL, Direction, KktSystem, choose_path, newton_direction, newton_residual
from .qp import (
    INFEASIBLE, MAX_ITERATIONS, NEAR_SINGULAR, OPTIMAL,
    IpmIterate, IpmSolution, QpNames, QuadraticProgram, Residuals, SolveStats, residuals, scaled_residuals,
)
from .solver import IpmOptions, mehrotra_step, solve_qp, starting_point
from .transform import TransformedDirection, kkt_nnz, transform_qp, transformed_newton_direction

__all__ = [
    "AUGMENTED", "AUTO", "NORMAL", "INFEASIBLE", "MAX_ITERATIONS", "NEAR_SINGULAR", "OPTIMAL",
    "Direction", "IpmIterate", "IpmOptions", "IpmSolution", "KktSystem", "QpNames",
    "QuadraticProgram", "Residuals", "SolveStats", "choose_path", "mehrotra_step",
    "newton_direction", "newton_residual", "residuals", "scaled_residuals", "solve_qp",
    "starting_point", "TransformedDirection", "kkt_nnz", "transform_qp", "transformed_newton_direction",
]
