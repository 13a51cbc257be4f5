"""Contour polylines, CSV dumps and plot scripts for pseudospectrum fields."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import contourpy
import numpy as np

from .errors import DimensionError
from .pencil import MultiParamPencil

__all__ = ["ContourSet", "export_contours", "field_csv", "write_field_csv", "plot_script", "point_in_polygon"]


@dataclass
class ContourSet:
    level: float
    lines: list  # list of (n, 2) arrays in plane coordinates

    @property
    def closed(self) -> list[bool]:
        return [len(ln) > 2 and np.allclose(ln[0], ln[-1]) for ln in self.lines]


def export_contours(fld, eps_levels) -> list[ContourSet]:
    """Marching-squares polylines of eta at each eps level.

    The field must be two-dimensional in real coordinates (two real axes,
    or one complex box).  Coordinates are (first axis, second axis) for
    real grids and (Re, Im) for a complex box.
    """
    x, y, _ = fld.grid.real_plane()
    z = np.asarray(fld.values, dtype=float)
    if z.shape != (x.size, y.size):
        raise DimensionError("field does not match its grid")
    gen = contourpy.contour_generator(x, y, z.T, line_type=contourpy.LineType.Separate)
    return [ContourSet(float(e), [np.asarray(ln) for ln in gen.lines(float(e))]) for e in eps_levels]


def point_in_polygon(pt, poly) -> bool:
    """Even-odd rule for a closed polyline."""
    px, py = pt
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            xc = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < xc:
                inside = not inside
    return inside


def field_csv(fld) -> str:
    """CSV with one row per node: lambda1_re, lambda1_im, ..., eta."""
    nodes = fld.nodes()
    eta = np.asarray(fld.values).ravel()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = []
    for j in range(nodes.shape[1]):
        header += [f"lambda{j + 1}_re", f"lambda{j + 1}_im"]
    w.writerow(header + ["eta"])
    for node, e in zip(nodes, eta):
        row = []
        for z in node:
            row += [repr(float(z.real)), repr(float(z.imag))]
        w.writerow(row + [repr(float(e))])
    return buf.getvalue()


def write_field_csv(fld, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(field_csv(fld))


_SCRIPT = '''"""Plot an eta field written by `mpspec mppseudo`.

Usage: python {name} [field.csv] [out.png]
"""
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

CSV = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
OUT = sys.argv[2] if len(sys.argv) > 2 else "pseudospectrum.png"
LEVELS = {levels!r}
SHAPE = {shape!r}
XCOL, YCOL = {xcol!r}, {ycol!r}
XLABEL, YLABEL = {xlabel!r}, {ylabel!r}
PENCIL = {pencil}

data = np.genfromtxt(CSV, delimiter=",", names=True)
x = data[XCOL].reshape(SHAPE)
y = data[YCOL].reshape(SHAPE)
eta = data["eta"].reshape(SHAPE)

fig, ax = plt.subplots(figsize=(6, 5))
cs = ax.contour(x, y, np.log10(np.maximum(eta, 1e-300)), levels=sorted(np.log10(LEVELS)), cmap="viridis")
ax.clabel(cs, fmt=lambda v: "1e%d" % round(v))

if PENCIL is not None:
    # secular curves: determinants of the 2x2 row selections
    A = [np.array(a, dtype=float) for a in PENCIL]
    M = A[0][None, None] + x[..., None, None] * A[1] + y[..., None, None] * A[2]
    for (i, j), style in zip([(0, 1), (0, 2), (1, 2)], ["-", "--", ":"]):
        chi = np.linalg.det(M[..., [i, j], :])
        ax.contour(x, y, chi, levels=[0.0], colors="k", linestyles=style, linewidths=0.8)

ax.set_xlabel(XLABEL)
ax.set_ylabel(YLABEL)
fig.tight_layout()
fig.savefig(OUT, dpi=150)
'''


def plot_script(fld, csv_name: str, eps_levels, pencil: MultiParamPencil | None = None,
                name: str = "plot_field.py") -> str:
    """Source of a matplotlib script reproducing the contour figure.

    Secular curves are overlaid for real linear 3 x 2 pencils in two
    parameters plotted over two real axes.
    """
    _, _, swept = fld.grid.real_plane()
    shape = fld.values.shape
    if len(swept) == 2:
        i, j = swept
        xcol, ycol = f"lambda{i + 1}_re", f"lambda{j + 1}_re"
        xlabel, ylabel = f"lambda_{i + 1}", f"lambda_{j + 1}"
    else:
        i = swept[0]
        xcol, ycol = f"lambda{i + 1}_re", f"lambda{i + 1}_im"
        xlabel, ylabel = f"Re lambda_{i + 1}", f"Im lambda_{i + 1}"
    overlay = None
    if (
        pencil is not None and pencil.m == 2 and pencil.k == 3 and pencil.l == 2
        and pencil.is_linear and pencil.is_real and len(swept) == 2
        and all(fld.grid.axes[s].kind == "real" for s in swept)
    ):
        mats = [pencil.coeffs[pencil.term_index(e)].real.tolist() if pencil.term_index(e) is not None
                else np.zeros((3, 2)).tolist()
                for e in ([0, 0], [1, 0], [0, 1])]
        overlay = json.dumps(mats)
    return _SCRIPT.format(
        name=name, csv=csv_name, levels=[float(e) for e in eps_levels], shape=tuple(shape),
        xcol=xcol, ycol=ycol, xlabel=xlabel, ylabel=ylabel,
        pencil=overlay if overlay is not None else "None",
    )
