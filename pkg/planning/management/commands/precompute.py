from pathlib import Path

from django.conf import settings

from ...services.visibility import precompute_coverage
from ...utils.formats import load_cameras, load_mesh, save_coverage
from ..base import PlanningCommand


class Command(PlanningCommand):
    help = "Compute the triangles every camera sees and write a coverage cache."

    def add_arguments(self, parser):
        parser.add_argument('--mesh', required=True, help="Wavefront OBJ mesh")
        parser.add_argument('--cameras', required=True, help="JSON array of camera poses (normalized units)")
        parser.add_argument('--out', required=True, help="Coverage cache to write")
        parser.add_argument('--threads', type=int, default=None,
                            help="Worker threads (default: VIEWPLAN_THREADS)")

    def handle(self, *args, **options):
        threads = options['threads'] if options['threads'] is not None else settings.VIEWPLAN_THREADS
        if threads < 0:
            raise self.usage("--threads must be non-negative")

        mesh = load_mesh(options['mesh'])
        views = load_cameras(options['cameras'])
        table = precompute_coverage(mesh, views, workers=threads)
        table.metadata['mesh'] = Path(options['mesh']).name
        save_coverage(options['out'], table)

        self.stdout.write(
            f"{len(table)} views, achievable {table.achievable.size}/{mesh.triangle_count} triangles "
            f"-> {options['out']}"
        )
