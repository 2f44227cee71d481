"""Fixed-layout binary field checkpoints.

Layout (all little-endian):
  magic   4 bytes  b"YMLB"
  version u32      1
  n       u32      sites per axis
  L       f64      period
  group   u32      0 = su2, 1 = u1
  kind    u32      0 = Cauchy state (A, E), 1 = flow state (A, B),
                   2 = MKG state (A, E, Re phi, Im phi, Re phi_t, Im phi_t)
  ncomp   u32      number of stored component fields
  algdim  u32      algebra dimension per component
  t       f64      physical time
  s       f64      parabolic time (0 for Cauchy/MKG states)
payload: ncomp * algdim arrays of n^3 f64, component-major, x varying
fastest within each array.
"""

from __future__ import annotations

import struct

import numpy as np

from . import mkg as mkg_mod
from .algebra import su2, u1
from .dynamics import CauchyState
from .grid import Grid
from .heatflow import FlowState

MAGIC = b"YMLB"
VERSION = 1
_HEADER = struct.Struct("<4sIIdIIIIdd")


class CheckpointError(IOError):
    pass


def _group_tag(spec_name: str) -> int:
    return {"su2": 0, "u1": 1}[spec_name]


def _payload(fields) -> bytes:
    chunks = []
    for comp in fields:                    # comp: (algdim, n, n, n)
        for a in range(comp.shape[0]):
            arr = np.ascontiguousarray(comp[a], dtype="<f8")
            chunks.append(arr.ravel(order="F").tobytes())
    return b"".join(chunks)


def _components_of(state):
    if isinstance(state, CauchyState):
        return 0, list(state.A) + list(state.E), state.t, 0.0, state.spec.name
    if isinstance(state, FlowState):
        return 1, list(state.A) + list(state.B), 0.0, state.s, state.spec.name
    if isinstance(state, mkg_mod.MkgState):
        comps = list(state.A) + list(state.E)
        comps += [state.phi.real[None], state.phi.imag[None],
                  state.phit.real[None], state.phit.imag[None]]
        return 2, comps, state.t, 0.0, "u1"
    raise TypeError(f"cannot checkpoint {type(state).__name__}")


def write_checkpoint(path: str, state) -> None:
    kind, comps, t, s, spec_name = _components_of(state)
    n = comps[0].shape[-1]
    algdim = comps[0].shape[0]
    header = _HEADER.pack(MAGIC, VERSION, n, state.grid.L,
                          _group_tag(spec_name), kind, len(comps), algdim, t, s)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(_payload(comps))


def read_checkpoint(path: str):
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise CheckpointError("truncated header")
        magic, version, n, L, group, kind, ncomp, algdim, t, s = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CheckpointError(f"unsupported version {version}")
        count = ncomp * algdim * n**3
        data = np.frombuffer(fh.read(count * 8), dtype="<f8")
        if data.size != count:
            raise CheckpointError("truncated payload")
        if fh.read(1):
            raise CheckpointError("trailing bytes after payload")
    # payload is x-fastest within each n^3 array: undo the Fortran raveling
    arr = np.empty((ncomp, algdim, n, n, n))
    flat = data.reshape(ncomp, algdim, -1)
    for c in range(ncomp):
        for a in range(algdim):
            arr[c, a] = flat[c, a].reshape((n, n, n), order="F")
    grid = Grid(n, L)
    spec = su2() if group == 0 else u1()
    if kind == 0:
        return CauchyState(grid, spec, t, arr[0:3], arr[3:6])
    if kind == 1:
        return FlowState(grid, spec, s, arr[0:3], arr[3:6])
    if kind == 2:
        phi = arr[6, 0] + 1j * arr[7, 0]
        phit = arr[8, 0] + 1j * arr[9, 0]
        return mkg_mod.MkgState(grid, t, arr[0:3], arr[3:6], phi, phit)
    raise CheckpointError(f"unknown state kind {kind}")
