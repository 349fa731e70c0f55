from ...utils.report import build_report
from ..base import PlanningCommand


class Command(PlanningCommand):
    help = "Tabulate plan files (and optionally learning curves) into CSV / Excel reports."

    def add_arguments(self, parser):
        parser.add_argument('--inputs', nargs='+', required=True, help="Plan JSON files")
        parser.add_argument('--csv', required=True)
        parser.add_argument('--xlsx', help="Also write an Excel workbook")
        parser.add_argument('--curves', nargs='+', default=[], help="Learning-curve CSV files")
        parser.add_argument('--curve-csv', help="Concatenated learning curves")

    def handle(self, *args, **options):
        if options['curve_csv'] and not options['curves']:
            raise self.usage("--curve-csv needs --curves")

        report = build_report(options['inputs'], options['curves'])
        report.write_csv(options['csv'])
        if options['xlsx']:
            report.write_xlsx(options['xlsx'])
        if options['curve_csv']:
            report.write_curves_csv(options['curve_csv'])
        self.stdout.write(f"{len(report.methods)} rows -> {options['csv']}")
