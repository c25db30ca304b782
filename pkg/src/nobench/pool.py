"""Candidate pools and the NOBENCH1 dataset format.

A pool is the finite search space: n input fields with their precomputed
true outputs on one shared grid. Pools come from the Darcy generator or
from externally produced files (any single-channel input/output pairs).

NOBENCH1 layout, little-endian throughout:

====================  =======================================================
bytes                 content
====================  =======================================================
0:8                   ASCII magic ``NOBENCH1`` (name + format version)
8:24                  four u32: nx, ny, n, flags
24:24+P               payload, P = n * 2 * nx * ny * 8; per instance the
                      input then the output field, float64, row-major (x-major)
24+P:-4               JSON metadata trailer, UTF-8 (may be empty)
-4:                   u32 length of the metadata trailer
====================  =======================================================

Flag bit 0: metadata trailer present. Flag bit 1: inputs are two-valued
permeabilities (metadata then carries a_low / a_high).
"""

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .darcy import DarcyInstance, PermeabilityField, solve_darcy
from .errors import FormatError, SolverError, StructureError
from .fields import Grid2D, ScalarField
from .grf import GRFConfig, binarize, sample_grf
from .rng import POOL_STREAM, child_rng

MAGIC = b"NOBENCH1"
FLAG_METADATA = 1
FLAG_BINARY_INPUTS = 2


@dataclass(frozen=True)
class CandidatePool:
    """Finite search space: aligned input/output field stacks plus metadata."""

    grid: Grid2D
    inputs: np.ndarray = field(repr=False)
    outputs: np.ndarray = field(repr=False)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ins = np.ascontiguousarray(np.asarray(self.inputs, dtype=np.float64))
        outs = np.ascontiguousarray(np.asarray(self.outputs, dtype=np.float64))
        if ins.ndim != 3 or ins.shape[1:] != self.grid.shape:
            raise StructureError(f"inputs shape {ins.shape} does not match grid {self.grid.shape}")
        if outs.shape != ins.shape:
            raise StructureError("inputs and outputs must be aligned stacks")
        if ins.shape[0] < 1:
            raise StructureError("pool must contain at least one instance")
        object.__setattr__(self, "inputs", ins)
        object.__setattr__(self, "outputs", outs)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    def input_field(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.inputs[i])

    def output_field(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.outputs[i])

    def permeability(self, i: int) -> PermeabilityField:
        try:
            a_low, a_high = self.meta["a_low"], self.meta["a_high"]
        except KeyError:
            raise StructureError("pool metadata lacks a_low/a_high; not a permeability pool")
        return PermeabilityField(self.input_field(i), a_low, a_high)

    def instance(self, i: int) -> DarcyInstance:
        return DarcyInstance(self.permeability(i), self.output_field(i), self.meta.get("g", 1.0))

    def __eq__(self, other):
        if not isinstance(other, CandidatePool):
            return NotImplemented
        return (
            self.grid == other.grid
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.outputs, other.outputs)
            and self.meta == other.meta
        )


def generate_pool(
    n: int,
    cfg: GRFConfig,
    a_low: float = 3.0,
    a_high: float = 12.0,
    g: float = 1.0,
    seed: int = 0,
) -> CandidatePool:
    """n independent GRF -> binarize -> solve pipelines, keyed by (seed, index)."""
    if n < 1:
        raise StructureError("pool size must be at least 1")
    grid = cfg.grid
    inputs = np.empty((n, grid.nx, grid.ny))
    outputs = np.empty((n, grid.nx, grid.ny))
    for i in range(n):
        rng = child_rng(seed, POOL_STREAM, i)
        perm = PermeabilityField(binarize(sample_grf(cfg, rng), a_low, a_high), a_low, a_high)
        try:
            u = solve_darcy(perm, g)
        except SolverError as err:
            raise SolverError(
                f"instance {i}: {err}", residual=err.residual, iterations=err.iterations
            ) from err
        inputs[i] = perm.values
        outputs[i] = u.values
    meta = {
        "generator": "darcy-grf",
        "seed": int(seed),
        "tau": cfg.tau,
        "alpha": cfg.alpha,
        "a_low": float(a_low),
        "a_high": float(a_high),
        "g": float(g),
        "bounds": [grid.x0, grid.x1, grid.y0, grid.y1],
    }
    return CandidatePool(grid, inputs, outputs, meta)


def write_pool(pool: CandidatePool, path) -> None:
    data = serialize_pool(pool)
    with open(path, "wb") as fh:
        fh.write(data)


def serialize_pool(pool: CandidatePool) -> bytes:
    buf = io.BytesIO()
    flags = 0
    meta_bytes = b""
    if pool.meta:
        flags |= FLAG_METADATA
        meta_bytes = json.dumps(pool.meta, sort_keys=True).encode("utf-8")
    if "a_low" in pool.meta and "a_high" in pool.meta:
        flags |= FLAG_BINARY_INPUTS
    buf.write(MAGIC)
    buf.write(struct.pack("<4I", pool.grid.nx, pool.grid.ny, pool.n, flags))
    interleaved = np.stack([pool.inputs, pool.outputs], axis=1)
    buf.write(interleaved.astype("<f8").tobytes())
    buf.write(meta_bytes)
    buf.write(struct.pack("<I", len(meta_bytes)))
    return buf.getvalue()


def read_pool(path) -> CandidatePool:
    with open(path, "rb") as fh:
        data = fh.read()
    return deserialize_pool(data)


def deserialize_pool(data: bytes) -> CandidatePool:
    if len(data) < 28:
        raise FormatError(f"file too short ({len(data)} bytes) for a NOBENCH1 header", offset=0)
    if data[:8] != MAGIC:
        bad = next(i for i in range(8) if data[i : i + 1] != MAGIC[i : i + 1])
        raise FormatError(f"bad magic at offset {bad}: {data[:8]!r}", offset=bad)
    nx, ny, n, flags = struct.unpack_from("<4I", data, 8)
    if nx < 2 or ny < 2 or n < 1:
        raise FormatError(f"implausible header nx={nx} ny={ny} n={n}", offset=8)
    payload = 2 * n * nx * ny * 8
    if len(data) < 24 + payload + 4:
        raise FormatError(
            f"truncated payload: need {24 + payload + 4} bytes, have {len(data)}",
            offset=len(data),
        )
    (meta_len,) = struct.unpack_from("<I", data, len(data) - 4)
    if 24 + payload + meta_len + 4 != len(data):
        raise FormatError(
            f"metadata length {meta_len} inconsistent with file size {len(data)}",
            offset=len(data) - 4,
        )
    raw = np.frombuffer(data, dtype="<f8", count=2 * n * nx * ny, offset=24)
    stacked = raw.reshape(n, 2, nx, ny)
    meta = {}
    if flags & FLAG_METADATA:
        meta_raw = data[24 + payload : 24 + payload + meta_len]
        try:
            meta = json.loads(meta_raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise FormatError(f"unreadable metadata trailer: {err}", offset=24 + payload)
    bounds = meta.get("bounds", [0.0, 1.0, 0.0, 1.0])
    grid = Grid2D(nx, ny, *bounds)
    return CandidatePool(grid, stacked[:, 0].copy(), stacked[:, 1].copy(), meta)


def pool_digest(pool: CandidatePool) -> str:
    """SHA-256 of the serialized pool; stable across runs on one backend."""
    return hashlib.sha256(serialize_pool(pool)).hexdigest()
