from app.potential.elliptic import EllipticProblem, ProblemKind, SolveReport, solve, solve_with_report
from app.potential.reconstruct import PotentialResult, reconstruct_potential, gradient_holder_diagnostic
