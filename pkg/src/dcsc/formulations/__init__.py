from .build import (
    ALL_KINDS, FormulationBundle, FormulationKind, ScedConfig,
    build_opf, build_problem, build_sced, cost_scale, nodal_cost, sample_loads,
)
from .nodal import build_ptdf_nodal
from .recovery import (
    DispatchResult, binding_branches, delete_branches, disaggregate_nodal, outer_approximation, recover,
)

__all__ = [
    "ALL_KINDS", "DispatchResult", "FormulationBundle", "FormulationKind", "ScedConfig",
    "binding_branches", "build_opf", "build_problem", "build_ptdf_nodal", "build_sced", "cost_scale",
    "delete_branches", "disaggregate_nodal", "nodal_cost", "outer_approximation", "recover", "sample_loads",
]
