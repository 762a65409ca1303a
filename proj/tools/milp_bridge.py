# Copyright 2026 the jrsopt authors
# SPDX-License-Identifier: Apache-2.0
#
# Persistent MILP helper. Reads one JSON request per line on stdin, answers
# with one JSON line on stdout, and keeps serving until "quit" or EOF.
# Infinities travel as +/-1e30 in both directions.

import json
import sys
import time

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

INF = 1e30


def _vec(values):
    a = np.asarray(values, dtype=float)
    a[a >= INF] = np.inf
    a[a <= -INF] = -np.inf
    return a


def _constraints(msg, n):
    m = len(msg["row_lb"])
    if m == 0:
        return ()
    mat = sparse.csr_matrix(
        (
            np.asarray(msg["coef"], dtype=float),
            np.asarray(msg["col_idx"], dtype=np.int64),
            np.asarray(msg["row_start"], dtype=np.int64),
        ),
        shape=(m, n),
    )
    return LinearConstraint(mat, _vec(msg["row_lb"]), _vec(msg["row_ub"]))


def _run(c, integrality, lb, ub, cons, options):
    t0 = time.perf_counter()
    res = milp(
        c=c,
        constraints=cons,
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options=options,
    )
    return res, time.perf_counter() - t0


def handle_solve(msg):
    n = int(msg["n"])
    c = np.asarray(msg["objective"], dtype=float)
    lb = _vec(msg["lower"])
    ub = _vec(msg["upper"])
    integrality = np.asarray(msg["integrality"], dtype=np.int64)
    cons = _constraints(msg, n)
    options = {
        "disp": False,
        "presolve": True,
        "mip_rel_gap": float(msg.get("mip_gap", 1e-4)),
        "time_limit": min(float(msg.get("time_limit", INF)), INF),
    }
    res, seconds = _run(c, integrality, lb, ub, cons, options)
    out = {
        "status": int(res.status),
        "seconds": seconds,
        "message": str(res.message),
    }
    if res.x is not None:
        out["x"] = [float(v) for v in res.x]
        out["fun"] = float(res.fun)
    gap = getattr(res, "mip_gap", None)
    if gap is not None and np.isfinite(gap):
        out["mip_gap"] = float(gap)
    return out


def handle_lp_batch(msg):
    n = int(msg["n"])
    c = np.asarray(msg["objective"], dtype=float)
    lb0 = _vec(msg["lower"])
    ub0 = _vec(msg["upper"])
    integrality = np.zeros(n, dtype=np.int64)
    cons = _constraints(msg, n)
    options = {"disp": False, "presolve": True}
    t0 = time.perf_counter()
    results = []
    for pattern in msg["patterns"]:
        lb = lb0.copy()
        ub = ub0.copy()
        for idx, val in pattern:
            lb[idx] = max(lb[idx], float(val))
            ub[idx] = min(ub[idx], float(val))
        res, _ = _run(c, integrality, lb, ub, cons, options)
        ok = res.status == 0 and res.x is not None
        results.append([bool(ok), float(res.fun) if ok else 0.0])
    return {"results": results, "seconds": time.perf_counter() - t0}


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
            op = msg.get("op")
            if op == "quit":
                break
            if op == "ping":
                out = {"ok": True}
            elif op == "solve":
                out = handle_solve(msg)
            elif op == "lp_batch":
                out = handle_lp_batch(msg)
            else:
                out = {"error": "unknown op %r" % op}
        except Exception as exc:  # keep serving, report the failure upstream
            out = {"error": "%s: %s" % (type(exc).__name__, exc)}
        sys.stdout.write(json.dumps(out) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
