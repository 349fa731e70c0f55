"""
Readers and writers for every file the planning commands exchange.

Binary formats are little-endian and versioned. Every writer goes through
``atomic_write`` so a crashed run never leaves a half-written file behind.
"""
import json
import logging
import math
import os
import struct
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from ..exceptions import DigestMismatchError, FormatError, MeshError, ViewError
from ..services.agents import Algorithm, TrainConfig, TrainedModel
from ..services.mesh_core import Submesh, TriangleMesh
from ..services.planner import Plan
from ..services.value_net import NetworkConfig, ValueNetwork
from ..services.visibility import CoverageTable, ViewPoint

logger = logging.getLogger(__name__)

COVERAGE_MAGIC = b"VPCC"
MODEL_MAGIC = b"VPNW"
FORMAT_VERSION = 1
DIGEST_SIZE = 32

ALGORITHM_TAGS = {Algorithm.SARSA: 0, Algorithm.WATKINS_Q: 1, Algorithm.TD: 2}
TAG_ALGORITHMS = {tag: algorithm for algorithm, tag in ALGORITHM_TAGS.items()}


def atomic_write(path: str | Path, data: bytes | str) -> None:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _read_bytes(path: str | Path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"Cannot read {path}: {e}") from e


def _read_json(path: str | Path) -> Any:
    try:
        return json.loads(_read_bytes(path).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path} is not valid JSON: {e}") from e


class _BinaryReader:
    """Sequential little-endian reader reporting the offset of any truncation."""

    def __init__(self, data: bytes, source: str):
        self.data = data
        self.source = source
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.offset + size
        if size < 0 or end > len(self.data):
            raise FormatError(
                f"{self.source}: truncated while reading {what} at offset {self.offset} "
                f"(need {size} bytes, {len(self.data) - self.offset} left)"
            )
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack("<" + fmt, self.take(struct.calcsize("<" + fmt), what))

    def u8(self, what: str) -> int:
        return self.unpack("B", what)[0]

    def u32(self, what: str) -> int:
        return self.unpack("I", what)[0]

    def u64(self, what: str) -> int:
        return self.unpack("Q", what)[0]

    def f64(self, what: str) -> float:
        return self.unpack("d", what)[0]

    def array(self, dtype: str, count: int, what: str) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(count * itemsize, what), dtype=dtype).copy()

    def header(self, magic: bytes) -> None:
        found = self.take(len(magic), "magic")
        if found != magic:
            raise FormatError(f"{self.source}: bad magic {found!r}, expected {magic!r}")
        version = self.u32("format version")
        if version != FORMAT_VERSION:
            raise FormatError(f"{self.source}: unsupported format version {version}")

    def finish(self) -> None:
        if self.offset != len(self.data):
            raise FormatError(f"{self.source}: {len(self.data) - self.offset} trailing bytes at offset {self.offset}")


# Meshes

def _obj_index(token: str, vertex_count: int, line_number: int) -> int:
    try:
        index = int(token.split("/")[0])
    except ValueError:
        raise MeshError(f"Line {line_number}: bad face index {token!r}") from None
    if index == 0:
        raise MeshError(f"Line {line_number}: OBJ indices are 1-based")
    # negative indices count back from the latest vertex
    return index - 1 if index > 0 else vertex_count + index


def load_mesh(path: str | Path) -> TriangleMesh:
    """Parse the ``v`` and ``f`` records of a Wavefront OBJ file; larger faces are fan-triangulated."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise MeshError(f"Cannot read mesh {path}: {e}") from e

    vertices: list[list[float]] = []
    triangles: list[tuple[int, int, int]] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        values = line.split("#", 1)[0].split()
        if not values:
            continue
        if values[0] == "v":
            try:
                vertices.append([float(v) for v in values[1:4]])
            except ValueError:
                raise MeshError(f"Line {line_number}: bad vertex {line.strip()!r}") from None
            if len(vertices[-1]) != 3:
                raise MeshError(f"Line {line_number}: vertex needs three coordinates")
        elif values[0] == "f":
            face = [_obj_index(token, len(vertices), line_number) for token in values[1:]]
            if len(face) < 3:
                raise MeshError(f"Line {line_number}: face has fewer than three vertices")
            for k in range(1, len(face) - 1):
                triangles.append((face[0], face[k], face[k + 1]))

    if not triangles:
        raise MeshError(f"{path} contains no faces")
    mesh = TriangleMesh(vertices, triangles)
    logger.info(f"Loaded {path}: {len(mesh.vertices)} vertices, {mesh.triangle_count} triangles")
    return mesh


def save_mesh_obj(path: str | Path, mesh: TriangleMesh) -> None:
    lines = [f"# {len(mesh.vertices)} vertices, {mesh.triangle_count} triangles"]
    lines += [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    atomic_write(path, "\n".join(lines) + "\n")


# Cameras

def _camera_to_dict(view: ViewPoint) -> dict:
    return {
        "position": list(view.position),
        "direction": list(view.direction),
        "up": list(view.up),
        "fov_y_deg": math.degrees(view.fov_y),
        "aspect": view.aspect,
        "near": view.near,
        "far": view.far,
    }


def _camera_from_dict(entry: dict, index: int) -> ViewPoint:
    try:
        return ViewPoint(
            position=entry["position"],
            direction=entry["direction"],
            up=entry["up"],
            fov_y=math.radians(float(entry["fov_y_deg"])),
            aspect=float(entry["aspect"]),
            near=float(entry["near"]),
            far=float(entry["far"]),
        )
    except ViewError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"Camera {index} is missing or has a malformed field: {e}") from e


def load_cameras(path: str | Path) -> list[ViewPoint]:
    data = _read_json(path)
    if not isinstance(data, list):
        raise FormatError(f"{path}: cameras file must hold a JSON array")
    return [_camera_from_dict(entry, index) for index, entry in enumerate(data)]


def save_cameras(path: str | Path, views: list[ViewPoint]) -> None:
    atomic_write(path, json.dumps([_camera_to_dict(view) for view in views], indent=2))


# Coverage cache

def encode_coverage(table: CoverageTable) -> bytes:
    mesh = table.mesh
    metadata = dict(table.metadata)
    if table.views:
        metadata["cameras"] = [_camera_to_dict(view) for view in table.views]

    parts = [
        COVERAGE_MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        table.mesh_digest,
        struct.pack("<II", len(mesh.vertices), mesh.triangle_count),
        mesh.vertices.astype("<f8").tobytes(),
        mesh.triangles.astype("<u4").tobytes(),
        struct.pack("<d", mesh.normalization_scale),
        struct.pack("<I", len(table)),
    ]
    for submesh in table.coverage:
        indices = submesh.indices().astype("<u4")
        parts.append(struct.pack("<I", len(indices)))
        parts.append(indices.tobytes())
    blob = json.dumps(metadata, sort_keys=True).encode("utf-8")
    parts.append(struct.pack("<I", len(blob)))
    parts.append(blob)
    return b"".join(parts)


def decode_coverage(data: bytes, source: str = "<coverage>") -> CoverageTable:
    reader = _BinaryReader(data, source)
    reader.header(COVERAGE_MAGIC)
    digest = reader.take(DIGEST_SIZE, "mesh digest")
    vertex_count = reader.u32("vertex count")
    triangle_count = reader.u32("triangle count")
    vertices = reader.array("<f8", vertex_count * 3, "vertices").reshape(-1, 3)
    triangles = reader.array("<u4", triangle_count * 3, "triangles").reshape(-1, 3)
    scale = reader.f64("normalization scale")
    mesh = TriangleMesh(vertices, triangles.astype(np.int64), normalize=False, normalization_scale=scale)
    if mesh.digest() != digest:
        raise DigestMismatchError(f"{source}: stored mesh digest does not match the stored geometry")

    view_count = reader.u32("view count")
    coverage = []
    for view in range(view_count):
        k = reader.u32(f"size of view {view}")
        indices = reader.array("<u4", k, f"triangles of view {view}").astype(np.int64)
        if k and np.any(np.diff(indices) <= 0):
            raise FormatError(f"{source}: triangle list of view {view} is not strictly ascending")
        coverage.append(Submesh.from_triangles(mesh, indices))
    length = reader.u32("metadata length")
    try:
        metadata = json.loads(reader.take(length, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{source}: corrupt metadata block: {e}") from e
    reader.finish()

    cameras = metadata.pop("cameras", None) or []
    views = tuple(_camera_from_dict(entry, index) for index, entry in enumerate(cameras))
    return CoverageTable(mesh, tuple(coverage), views, metadata)


def save_coverage(path: str | Path, table: CoverageTable) -> None:
    atomic_write(path, encode_coverage(table))


def load_coverage(path: str | Path, expected_mesh_digest: bytes | None = None) -> CoverageTable:
    """Read a coverage cache; rejects one built for a different mesh when a digest is expected."""
    table = decode_coverage(_read_bytes(path), str(path))
    if expected_mesh_digest is not None and table.mesh_digest != expected_mesh_digest:
        raise DigestMismatchError(f"{path} was computed for a different mesh")
    return table


# Model weights

def encode_model(model: TrainedModel) -> bytes:
    config = model.config
    network = model.network
    parts = [
        MODEL_MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("<B", ALGORITHM_TAGS[config.algorithm]),
        struct.pack("<III", model.view_count, len(config.lambda_set), network.config.hidden),
        network.parameters.astype("<f8").tobytes(),
        np.asarray(config.lambda_set, dtype="<f8").tobytes(),
        struct.pack("<ddd", config.alpha, config.mu_e, config.epsilon),
        struct.pack("<II", config.epsilon_episodes, config.max_episodes),
        struct.pack("<ddQ", config.rcc, config.init_scale, config.seed),
        model.table_digest,
        model.mesh_digest,
    ]
    return b"".join(parts)


def decode_model(data: bytes, source: str = "<model>") -> TrainedModel:
    reader = _BinaryReader(data, source)
    reader.header(MODEL_MAGIC)
    tag = reader.u8("algorithm tag")
    if tag not in TAG_ALGORITHMS:
        raise FormatError(f"{source}: unknown algorithm tag {tag}")
    algorithm = TAG_ALGORITHMS[tag]
    view_count = reader.u32("view count")
    lambda_count = reader.u32("lambda count")
    hidden = reader.u32("hidden size")
    if view_count < 1 or lambda_count < 1 or hidden < 1:
        raise FormatError(f"{source}: corrupt header (N={view_count}, lambdas={lambda_count}, hidden={hidden})")

    input_dim = view_count + lambda_count if algorithm.uses_actions else view_count
    parameter_count = hidden * input_dim + 2 * hidden + 1
    parameters = reader.array("<f8", parameter_count, "network parameters")
    lambdas = tuple(reader.array("<f8", lambda_count, "lambda set").tolist())
    alpha, mu_e, epsilon = reader.unpack("ddd", "learning rates")
    epsilon_episodes, max_episodes = reader.unpack("II", "episode counts")
    rcc, init_scale, seed = reader.unpack("ddQ", "run settings")
    table_digest = reader.take(DIGEST_SIZE, "table digest")
    mesh_digest = reader.take(DIGEST_SIZE, "mesh digest")
    reader.finish()

    try:
        config = TrainConfig(
            algorithm=algorithm,
            lambda_set=lambdas,
            alpha=alpha,
            mu_e=mu_e,
            max_episodes=max_episodes,
            rcc=rcc,
            epsilon=epsilon,
            epsilon_episodes=epsilon_episodes,
            hidden=hidden,
            init_scale=init_scale,
            seed=seed,
        )
    except ValueError as e:
        raise FormatError(f"{source}: corrupt config block: {e}") from e
    network = ValueNetwork(
        NetworkConfig(input_dim=input_dim, hidden=hidden, init_scale=init_scale, seed=seed), parameters
    )
    return TrainedModel(network, config, table_digest, mesh_digest)


def save_model(path: str | Path, model: TrainedModel) -> None:
    atomic_write(path, encode_model(model))


def load_model(path: str | Path, table: CoverageTable | None = None,
               allow_digest_mismatch: bool = False) -> TrainedModel:
    """
    Read a weights file, checking it against ``table`` when one is given.

    Raises:
        DigestMismatchError: the model was trained on another table (unless allowed)
        FormatError: bad magic, version or truncated payload
    """
    model = decode_model(_read_bytes(path), str(path))
    if table is not None:
        if model.view_count != len(table):
            raise FormatError(f"{path} expects {model.view_count} views, coverage has {len(table)}")
        if model.table_digest != table.digest():
            message = f"{path} was trained on a different coverage table"
            if not allow_digest_mismatch:
                raise DigestMismatchError(message)
            logger.warning(f"{message}; continuing as requested")
    return model


# Plans

def plan_to_dict(plan: Plan, instance: str | None = None) -> dict:
    return {
        "order": list(plan.order),
        "lambdas": list(plan.lambdas),
        "coverage_fraction": plan.final_coverage_fraction,
        "method": plan.method,
        "complete": plan.complete,
        "instance": instance,
        "runtime_seconds": plan.runtime_seconds,
    }


def save_plan(path: str | Path, plan: Plan, instance: str | None = None) -> None:
    atomic_write(path, json.dumps(plan_to_dict(plan, instance), indent=2))


def load_plan(path: str | Path) -> tuple[Plan, str | None]:
    data = _read_json(path)
    try:
        plan = Plan(
            order=tuple(int(v) for v in data["order"]),
            lambdas=tuple(float(lam) for lam in data["lambdas"]),
            final_coverage_fraction=float(data["coverage_fraction"]),
            method=str(data["method"]),
            complete=bool(data.get("complete", True)),
            runtime_seconds=float(data.get("runtime_seconds", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"{path} is not a plan file: {e}") from e
    return plan, data.get("instance")
