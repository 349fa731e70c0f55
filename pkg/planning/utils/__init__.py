from .formats import load_coverage, load_mesh, load_model, save_coverage, save_model, save_plan
from .report import build_report, learning_curve

__all__ = [
    'load_coverage', 'load_mesh', 'load_model', 'save_coverage', 'save_model', 'save_plan',
    'build_report', 'learning_curve',
]
