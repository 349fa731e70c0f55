from .agents import Algorithm, TrainConfig, TrainedModel, plan_with_model, train
from .mesh_core import Submesh, TriangleMesh, score, union_coverage
from .oracle_bench import SyntheticSpec, exact_min_cover, gen_instance
from .planner import Plan, is_terminal, nbv, run_alternating, run_fixed_lambda
from .visibility import CoverageTable, ViewPoint, precompute_coverage

__all__ = [
    'Algorithm', 'TrainConfig', 'TrainedModel', 'plan_with_model', 'train',
    'Submesh', 'TriangleMesh', 'score', 'union_coverage',
    'SyntheticSpec', 'exact_min_cover', 'gen_instance',
    'Plan', 'is_terminal', 'nbv', 'run_alternating', 'run_fixed_lambda',
    'CoverageTable', 'ViewPoint', 'precompute_coverage',
]
