#!/usr/bin/env python3
"""Independent DC-OPF reference objectives for the bundled cases (cvxpy).

Model: B = 1/x (taps, shifts, resistance and shunts ignored), generators with
status 0 and branches with status 0 dropped, rateA = 0 means unlimited, costs
converted to per-unit power. Prints objective in $/h per case.

usage: reference_dcopf.py CASE.m [CASE.m ...]
"""
import re
import sys

import cvxpy as cp
import numpy as np


def mat(text, name):
    m = re.search(r"mpc\." + name + r"\s*=\s*\[(.*?)\];", text, re.S)
    rows = []
    for line in m.group(1).split("\n"):
        line = line.split("%")[0].strip().rstrip(";")
        if line:
            rows.append([float(v) for v in line.split()])
    return rows


def solve(path):
    text = open(path).read()
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)", text).group(1))
    bus = mat(text, "bus")
    gen = mat(text, "gen")
    br = mat(text, "branch")
    gc = mat(text, "gencost")
    idx = {int(b[0]): k for k, b in enumerate(bus)}
    nb = len(bus)
    live = [k for k, g in enumerate(gen) if g[7] > 0]
    th = cp.Variable(nb)
    p = cp.Variable(len(live))
    cons = []
    inj = [0] * nb
    flows = [0] * nb
    for j, k in enumerate(live):
        inj[idx[int(gen[k][0])]] += p[j]
    expr = [inj[i] - bus[i][2] / base for i in range(nb)]
    flow_terms = [[] for _ in range(nb)]
    for b in br:
        if b[10] == 0:
            continue
        f, t = idx[int(b[0])], idx[int(b[1])]
        bb = 1.0 / b[3]
        fl = bb * (th[f] - th[t])
        flow_terms[f].append(fl)
        flow_terms[t].append(-fl)
        if b[5] > 0:
            cons += [fl <= b[5] / base, fl >= -b[5] / base]
    for i in range(nb):
        cons.append(expr[i] == (sum(flow_terms[i]) if flow_terms[i] else 0))
    ref = [i for i, b in enumerate(bus) if int(b[1]) == 3][0]
    cons.append(th[ref] == 0)
    cost = 0
    for j, k in enumerate(live):
        g = gen[k]
        cons += [p[j] >= g[9] / base, p[j] <= g[8] / base]
        row = gc[k]
        n = int(row[3])
        c = [0.0] * (3 - n) + row[4 : 4 + n]
        cost += c[0] * base**2 * cp.square(p[j]) + c[1] * base * p[j] + c[2]
    prob = cp.Problem(cp.Minimize(cost), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-12, tol_feas=1e-10)
    return prob.status, prob.value


for path in sys.argv[1:]:
    status, value = solve(path)
    print(f"{path}\t{status}\t{value:.10f}")
