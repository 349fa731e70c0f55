from pathlib import Path

from ...services.agents import plan_with_model
from ...utils.formats import load_coverage, load_model, save_plan
from ..base import PlanningCommand


class Command(PlanningCommand):
    help = "Plan views with a trained model."

    def add_arguments(self, parser):
        parser.add_argument('--coverage', required=True)
        parser.add_argument('--model', required=True)
        parser.add_argument('--rcc', type=float, help="Defaults to the rcc the model was trained with")
        parser.add_argument('--out', required=True)
        parser.add_argument('--instance', help="Instance name recorded in the plan (default: coverage file name)")
        parser.add_argument('--allow-digest-mismatch', action='store_true',
                            help="Plan even if the model was trained on another coverage table")

    def handle(self, *args, **options):
        table = load_coverage(options['coverage'])
        model = load_model(options['model'], table, allow_digest_mismatch=options['allow_digest_mismatch'])
        rcc = options['rcc'] if options['rcc'] is not None else model.config.rcc
        if not 0.0 <= rcc <= 1.0:
            raise self.usage(f"--rcc must lie in [0, 1], got {rcc}")

        plan = plan_with_model(model, table, rcc)
        instance = options['instance'] or Path(options['coverage']).stem
        save_plan(options['out'], plan, instance)
        self.stdout.write(f"{plan.method}: {len(plan)} views, coverage {plan.final_coverage_fraction:.4f}")
        if not plan.complete:
            raise self.incomplete(f"Plan stops at {plan.final_coverage_fraction:.4f} of achievable area (rcc={rcc})")
