from django.conf import settings

from ...services.agents import Algorithm, TrainConfig, train
from ...utils.formats import load_coverage, save_model
from ...utils.report import write_learning_curve
from ..base import PlanningCommand


class Command(PlanningCommand):
    help = "Train a lambda-selection agent on a coverage cache and save its weights."

    def add_arguments(self, parser):
        parser.add_argument('--coverage', required=True)
        parser.add_argument('--algo', required=True, choices=['sarsa', 'watkins-q', 'watkins_q', 'td'])
        parser.add_argument('--episodes', type=int)
        parser.add_argument('--rcc', type=float)
        parser.add_argument('--hidden', type=int)
        parser.add_argument('--lr', type=float, help="Learning rate alpha")
        parser.add_argument('--elig', type=float, help="Eligibility trace decay mu_e")
        parser.add_argument('--epsilon', type=float)
        parser.add_argument('--epsilon-episodes', type=int)
        parser.add_argument('--lambda-set', type=float, nargs='+')
        parser.add_argument('--seed', type=int, required=True)
        parser.add_argument('--out', required=True, help="Weights file to write")
        parser.add_argument('--curve', help="Optional learning-curve CSV")

    def handle(self, *args, **options):
        defaults = settings.VIEWPLAN_TRAINING

        def pick(option, key):
            return options[option] if options[option] is not None else defaults[key]

        if options['seed'] < 0:
            raise self.usage("--seed must be non-negative")
        try:
            config = TrainConfig(
                algorithm=Algorithm.parse(options['algo']),
                lambda_set=tuple(pick('lambda_set', 'lambda_set')),
                alpha=pick('lr', 'alpha'),
                mu_e=pick('elig', 'mu_e'),
                max_episodes=pick('episodes', 'max_episodes'),
                rcc=pick('rcc', 'rcc'),
                epsilon=pick('epsilon', 'epsilon'),
                epsilon_episodes=pick('epsilon_episodes', 'epsilon_episodes'),
                hidden=pick('hidden', 'hidden'),
                init_scale=defaults['init_scale'],
                seed=options['seed'],
                log_every=defaults['log_every'],
            )
        except ValueError as e:
            raise self.usage(str(e))

        table = load_coverage(options['coverage'])
        model = train(table, config)
        save_model(options['out'], model)
        if options['curve']:
            write_learning_curve(
                options['curve'], model, settings.VIEWPLAN_CURVE_WINDOW, settings.VIEWPLAN_CURVE_DOWNSAMPLE
            )

        recent = model.episode_log[-settings.VIEWPLAN_CURVE_WINDOW:]
        mean_length = sum(record.length for record in recent) / len(recent) if recent else float('nan')
        self.stdout.write(
            f"Trained {config.algorithm.value} for {config.max_episodes} episodes "
            f"(recent mean length {mean_length:.3f}) -> {options['out']}"
        )
