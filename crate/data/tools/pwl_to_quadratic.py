#!/usr/bin/env python3
"""Rewrite a MATPOWER case whose gencost uses piecewise-linear (model 1) rows
into one with quadratic polynomial (model 2) rows.

Each convex piecewise-linear curve is replaced by the least-squares quadratic
through its breakpoints with a non-negative quadratic coefficient. All other
case data is copied verbatim.

usage: pwl_to_quadratic.py IN.m OUT.m
"""
import re
import sys

import numpy as np
from scipy.optimize import lsq_linear


def fit(points):
    xs = np.array([p[0] for p in points])
    ys = np.array([p[1] for p in points])
    if np.allclose(ys, 0.0):
        return 0.0, 0.0, 0.0
    if np.ptp(xs) == 0.0:
        return 0.0, 0.0, float(ys.mean())
    a = np.column_stack([xs**2, xs, np.ones_like(xs)])
    res = lsq_linear(a, ys, bounds=([0.0, -np.inf, -np.inf], [np.inf, np.inf, np.inf]))
    c2, c1, c0 = res.x
    return float(c2), float(c1), float(c0)


def main(src, dst):
    text = open(src).read()
    m = re.search(r"(mpc\.gencost\s*=\s*\[)(.*?)(\];)", text, re.S)
    body = m.group(2)
    out_rows = []
    for line in body.split("\n"):
        data = line.split("%")[0].strip().rstrip(";")
        if not data:
            continue
        v = [float(t) for t in data.split()]
        model, startup, shutdown, n = int(v[0]), v[1], v[2], int(v[3])
        if model == 1:
            pts = [(v[4 + 2 * k], v[5 + 2 * k]) for k in range(n)]
            c2, c1, c0 = fit(pts)
        elif model == 2:
            coeffs = [0.0] * (3 - n) + v[4 : 4 + n]
            c2, c1, c0 = coeffs
        else:
            raise SystemExit(f"unknown cost model {model}")
        out_rows.append(
            f"\t2\t{startup:.10g}\t{shutdown:.10g}\t3\t{c2:.10g}\t{c1:.10g}\t{c0:.10g};"
        )
    note = (
        "%   Generator costs: piecewise-linear curves replaced by least-squares\n"
        "%   quadratic fits (non-negative c2) by data/tools/pwl_to_quadratic.py.\n"
    )
    new_text = (
        text[: m.start()]
        + m.group(1)
        + "\n"
        + "\n".join(out_rows)
        + "\n"
        + m.group(3)
        + text[m.end() :]
    )
    new_text = new_text.replace("%%-----  Power Flow Data", note + "\n%%-----  Power Flow Data", 1)
    new_text = new_text.replace("function mpc = case_RTS_GMLC", "function mpc = case_RTS_GMLC_quad", 1)
    open(dst, "w").write(new_text)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
