import dataclasses
import json
from pathlib import Path

from ...exceptions import FormatError, InstanceError
from ...services.oracle_bench import InstanceKind, SyntheticSpec, gen_instance
from ...utils.formats import save_coverage, save_mesh_obj
from ..base import PlanningCommand

KINDS = [kind.value for kind in InstanceKind]
INTEGER_FIELDS = ("cols", "rows", "view_count", "patch_min", "patch_max", "distractors")


class Command(PlanningCommand):
    help = "Generate a certified synthetic instance as a coverage cache."

    def add_arguments(self, parser):
        parser.add_argument('--spec', required=True,
                            help=f"Instance kind ({', '.join(KINDS)}) or a JSON file of spec fields")
        parser.add_argument('--seed', type=int, required=True)
        parser.add_argument('--out', required=True)
        parser.add_argument('--mesh-out', help="Also write the grid mesh as OBJ")

    def _read_spec(self, value: str, seed: int) -> SyntheticSpec:
        if value in KINDS:
            return SyntheticSpec(kind=InstanceKind(value), seed=seed)
        path = Path(value)
        if not path.is_file():
            raise self.usage(f"--spec must be one of {KINDS} or an existing JSON file, got {value!r}")
        try:
            fields = json.loads(path.read_text(encoding='utf-8'))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise FormatError(f"{path} is not valid JSON: {e}") from e
        known = {field.name for field in dataclasses.fields(SyntheticSpec)}
        if not isinstance(fields, dict) or set(fields) - known:
            raise FormatError(f"{path}: spec must be an object with keys from {sorted(known)}")
        counts = [name for name in INTEGER_FIELDS if name in fields and fields[name] is not None
                  and (isinstance(fields[name], bool) or not isinstance(fields[name], int))]
        if counts:
            raise FormatError(f"{path}: {', '.join(counts)} must be integers")
        fields['seed'] = seed
        try:
            return SyntheticSpec(**fields)
        except InstanceError:
            raise
        except (ValueError, TypeError) as e:
            raise FormatError(f"{path}: {e}") from e

    def handle(self, *args, **options):
        spec = self._read_spec(options['spec'], options['seed'])
        instance = gen_instance(spec)
        instance.table.metadata['instance'] = f"{spec.kind.value}-{spec.seed}"
        save_coverage(options['out'], instance.table)
        if options['mesh_out']:
            save_mesh_obj(options['mesh_out'], instance.table.mesh)

        self.stdout.write(
            f"{spec.kind.value} seed {spec.seed}: {len(instance.table)} views, "
            f"greedy {instance.greedy_count}, oracle {instance.oracle_count} -> {options['out']}"
        )
