#!/usr/bin/env python3
"""Write the multiplication table of (C5 x C5) x| Q8 as group JSON.

Q8 acts on F_5^2 through i -> [[2,0],[0,3]], j -> [[0,1],[4,0]].
Elements are (v, q) with index (v0*5 + v1)*8 + q, and q indexes Q8 as
1,-1,i,-i,j,-j,k,-k. Product: (v,q)(v',q') = (v + phi(q) v', q q').
"""
import json
import sys

UNITS = ["1", "i", "j", "k"]
# unit products and signs, row * col
UPROD = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
USIGN = [[1, 1, 1, 1], [1, -1, 1, -1], [1, -1, -1, 1], [1, 1, -1, -1]]


def q_mul(a, b):
    ua, sa = a // 2, -1 if a % 2 else 1
    ub, sb = b // 2, -1 if b % 2 else 1
    s = sa * sb * USIGN[ua][ub]
    return 2 * UPROD[ua][ub] + (1 if s < 0 else 0)


def mat_mul(a, b):
    return [[sum(a[r][t] * b[t][c] for t in range(2)) % 5 for c in range(2)] for r in range(2)]


I2 = [[1, 0], [0, 1]]
MI = [[2, 0], [0, 3]]
MJ = [[0, 1], [4, 0]]
UNIT_MATS = [I2, MI, MJ, mat_mul(MI, MJ)]


def phi(q):
    m = UNIT_MATS[q // 2]
    if q % 2:
        m = [[(-x) % 5 for x in row] for row in m]
    return m


def main():
    n = 200
    table = []
    for g in range(n):
        v, q = divmod(g, 8)
        v0, v1 = divmod(v, 5)
        m = phi(q)
        row = []
        for h in range(n):
            w, r = divmod(h, 8)
            w0, w1 = divmod(w, 5)
            u0 = (v0 + m[0][0] * w0 + m[0][1] * w1) % 5
            u1 = (v1 + m[1][0] * w0 + m[1][1] * w1) % 5
            row.append((u0 * 5 + u1) * 8 + q_mul(q, r))
        table.append(row)
    qlabels = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    labels = [f"({g // 40},{(g // 8) % 5};{qlabels[g % 8]})" for g in range(n)]
    doc = {"order": n, "table": table, "labels": labels}
    out = sys.argv[1] if len(sys.argv) > 1 else "configs/groups/c5c5_q8.json"
    with open(out, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")


if __name__ == "__main__":
    main()
