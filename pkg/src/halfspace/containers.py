"""Flat binary containers and CSV/plot exports for kernels and fields.

Layout: an eight-byte magic, a little-endian struct header carrying the
geometry, the system tensor (so a container is self-describing), then the
payload as raw row-major complex doubles.  Round-trips are bit-identical.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import BadShape
from .grids import Grid
from .kernels import PoissonKernelGrid, PoissonSymbolTable
from .solver import HalfSpaceField
from .systems import EllipticSystem

__all__ = [
    "save_kernel", "load_kernel", "save_symbol_table", "load_symbol_table",
    "save_field", "load_field", "kernel_slices_csv", "field_csv",
    "write_plot_data", "write_report",
]

_MAGIC_KERNEL = b"HSPKERN1"
_MAGIC_SYMBOL = b"HSPSYMB1"
_MAGIC_FIELD = b"HSPFELD1"


def _write_system(fh, system: EllipticSystem):
    label = system.label.encode()[:64]
    fh.write(struct.pack("<II d I", system.n, system.M,
                         system.ellipticity_margin, len(label)))
    fh.write(label)
    fh.write(np.ascontiguousarray(system.coeffs, dtype=complex).tobytes())


def _read_system(fh) -> EllipticSystem:
    n, M, margin, lab_len = struct.unpack("<II d I", fh.read(20))
    label = fh.read(lab_len).decode()
    count = M * M * n * n
    coeffs = np.frombuffer(fh.read(count * 16), dtype=complex).reshape(M, M, n, n)
    return EllipticSystem(n=n, M=M, coeffs=coeffs.copy(),
                          ellipticity_margin=margin, label=label)


def save_kernel(path, kernel: PoissonKernelGrid):
    extent = float(kernel.meta.get("freq_extent", np.pi / kernel.grid.h))
    with open(path, "wb") as fh:
        fh.write(_MAGIC_KERNEL)
        _write_system(fh, kernel.system)
        fh.write(struct.pack("<I dddddd", kernel.grid.N, extent,
                             kernel.grid.R, kernel.grid.h,
                             kernel.tail_constant,
                             kernel.normalization_residual,
                             kernel.normalization_residual_full))
        fh.write(np.ascontiguousarray(kernel.values).tobytes())


def load_kernel(path) -> PoissonKernelGrid:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC_KERNEL:
            raise BadShape("not a kernel container: %s" % (path,))
        system = _read_system(fh)
        N, extent, R, h, tail_c, res, res_full = struct.unpack(
            "<I dddddd", fh.read(52))
        grid = Grid(n=system.n, N=N, h=h)
        count = N ** grid.d * system.M * system.M
        values = np.frombuffer(fh.read(count * 16), dtype=complex)
        values = values.reshape(grid.shape + (system.M, system.M)).copy()
    return PoissonKernelGrid(system=system, grid=grid, values=values,
                             tail_constant=tail_c,
                             normalization_residual=res,
                             normalization_residual_full=res_full,
                             meta={"freq_extent": extent})


def save_symbol_table(path, table: PoissonSymbolTable):
    with open(path, "wb") as fh:
        fh.write(_MAGIC_SYMBOL)
        _write_system(fh, table.system)
        fh.write(struct.pack("<I dd", table.N, table.freq_extent,
                             table.decay_rate))
        fh.write(np.ascontiguousarray(table.values).tobytes())


def load_symbol_table(path) -> PoissonSymbolTable:
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC_SYMBOL:
            raise BadShape("not a symbol container: %s" % (path,))
        system = _read_system(fh)
        N, extent, rate = struct.unpack("<I dd", fh.read(20))
        count = N ** (system.n - 1) * system.M * system.M
        values = np.frombuffer(fh.read(count * 16), dtype=complex)
        values = values.reshape((N,) * (system.n - 1)
                                + (system.M, system.M)).copy()
    return PoissonSymbolTable(system=system, freq_extent=extent, N=N,
                              values=values, decay_rate=rate)


def save_field(path, field: HalfSpaceField, system: EllipticSystem):
    with open(path, "wb") as fh:
        fh.write(_MAGIC_FIELD)
        _write_system(fh, system)
        fh.write(struct.pack("<I d I I", field.grid.N, field.grid.h,
                             len(field.heights),
                             1 if field.gradient is not None else 0))
        fh.write(np.ascontiguousarray(field.heights, dtype=float).tobytes())
        fh.write(np.ascontiguousarray(field.values).tobytes())
        if field.gradient is not None:
            fh.write(np.ascontiguousarray(field.gradient).tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC_FIELD:
            raise BadShape("not a field container: %s" % (path,))
        system = _read_system(fh)
        N, h, L, has_grad = struct.unpack("<I d I I", fh.read(20))
        grid = Grid(n=system.n, N=N, h=h)
        heights = np.frombuffer(fh.read(L * 8), dtype=float).copy()
        count = L * N ** grid.d * system.M
        values = np.frombuffer(fh.read(count * 16), dtype=complex)
        values = values.reshape((L,) + grid.shape + (system.M,)).copy()
        gradient = None
        if has_grad:
            gcount = count * system.n
            gradient = np.frombuffer(fh.read(gcount * 16), dtype=complex)
            gradient = gradient.reshape(
                (L,) + grid.shape + (system.n, system.M)).copy()
    field = HalfSpaceField(grid=grid, heights=heights, values=values,
                           gradient=gradient,
                           provenance={"system": system.label})
    return field, system


def kernel_slices_csv(path, kernel: PoissonKernelGrid):
    """Axis slices of |P| entries for plotting."""
    ax = kernel.grid.axis()
    M = kernel.system.M
    centre = (kernel.grid.N // 2,) * (kernel.grid.d - 1)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x"] + ["absP_%d%d" % (i, j)
                            for i in range(M) for j in range(M)])
        for k, x in enumerate(ax):
            if kernel.grid.d == 1:
                block = kernel.values[k]
            else:
                block = kernel.values[(k,) + centre]
            w.writerow([repr(float(x))] +
                       [repr(float(abs(block[i, j])))
                        for i in range(M) for j in range(M)])


def field_csv(path, field: HalfSpaceField):
    """(index, t, re/im per component) rows for every node and level."""
    M = field.M
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "t"] + ["re_%d" % b for b in range(M)]
                   + ["im_%d" % b for b in range(M)])
        flat = field.values.reshape(len(field.heights), -1, M)
        for li, t in enumerate(field.heights):
            for node in range(flat.shape[1]):
                v = flat[li, node]
                w.writerow([node, repr(float(t))]
                           + [repr(float(x.real)) for x in v]
                           + [repr(float(x.imag)) for x in v])


def write_plot_data(outdir, report):
    """Two-column gnuplot-ready .dat files from a report's plot series."""
    outdir = Path(outdir)
    written = []
    for name, arr in report.plot_data.items():
        arr = np.asarray(arr, dtype=float)
        path = outdir / ("%s_%s.dat" % (report.experiment, name))
        with open(path, "w") as fh:
            for row in arr:
                fh.write("%r %r\n" % (float(row[0]), float(row[1])))
        written.append(path)
    return written


def write_report(outdir, report, stem: str | None = None):
    """Emit a report as canonical JSON and CSV; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = stem or report.experiment
    jpath = outdir / (stem + ".json")
    jpath.write_text(report.to_json())
    cpath = outdir / (stem + ".csv")
    with open(cpath, "w", newline="") as fh:
        csv.writer(fh).writerows(report.csv_rows())
    paths = [jpath, cpath]
    paths.extend(write_plot_data(outdir, report))
    return paths
