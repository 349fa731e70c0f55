from pathlib import Path

from ...services.planner import run_alternating, run_fixed_lambda
from ...utils.formats import load_coverage, save_plan
from ..base import PlanningCommand

METHODS = ['greedy', 'alt-lambda', 'fixed-lambda']


class Command(PlanningCommand):
    help = "Plan views with a non-learning baseline."

    def add_arguments(self, parser):
        parser.add_argument('--coverage', required=True)
        parser.add_argument('--method', required=True, choices=METHODS)
        parser.add_argument('--lambda', dest='lam', type=float, help="Lambda for fixed-lambda")
        parser.add_argument('--rcc', type=float, default=0.99)
        parser.add_argument('--out', required=True)
        parser.add_argument('--instance', help="Instance name recorded in the plan (default: coverage file name)")

    def handle(self, *args, **options):
        method, lam, rcc = options['method'], options['lam'], options['rcc']
        if method == 'fixed-lambda' and lam is None:
            raise self.usage("--method fixed-lambda needs --lambda")
        if method != 'fixed-lambda' and lam is not None:
            raise self.usage(f"--lambda only applies to fixed-lambda, not {method}")
        if lam is not None and lam < 0:
            raise self.usage(f"--lambda must be non-negative, got {lam}")
        if not 0.0 <= rcc <= 1.0:
            raise self.usage(f"--rcc must lie in [0, 1], got {rcc}")

        table = load_coverage(options['coverage'])
        if method == 'alt-lambda':
            plan = run_alternating(table, rcc)
        else:
            plan = run_fixed_lambda(table, lam if method == 'fixed-lambda' else 0.0, rcc)

        instance = options['instance'] or Path(options['coverage']).stem
        save_plan(options['out'], plan, instance)
        self.stdout.write(f"{plan.method}: {len(plan)} views, coverage {plan.final_coverage_fraction:.4f}")
        if not plan.complete:
            raise self.incomplete(f"Plan stops at {plan.final_coverage_fraction:.4f} of achievable area (rcc={rcc})")
