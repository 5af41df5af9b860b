# SPDX-License-Identifier: Apache-2.0
#
# Expands the IEEE 802.11ad (DMG) rate-1/2 LDPC base matrix (lift factor 42)
# into a 336x672 parity-check matrix and writes it in MacKay alist format.
# Run from the repo root:  python3 scripts/gen_80211ad_alist.py
#
# Base matrix entries are cyclic-shift exponents; -1 denotes an all-zero
# 42x42 block. A shift s places ones at (i, (i + s) mod 42) inside the block.

Z = 42

BASE = [
    [40, -1, 38, -1, 13, -1,  5, -1, 18, -1, -1, -1, -1, -1, -1, -1],
    [34, -1, 35, -1, 27, -1, -1, 30,  2,  1, -1, -1, -1, -1, -1, -1],
    [-1, 36, -1, 31, -1,  7, -1, 34, -1, 10, 41, -1, -1, -1, -1, -1],
    [-1, 27, -1, 18, -1, 12, 20, -1, -1, -1, 15,  6, -1, -1, -1, -1],
    [35, -1, 41, -1, 40, -1, 39, -1, 28, -1, -1,  3, 28, -1, -1, -1],
    [29, -1,  0, -1, -1, 22, -1,  4, -1, 28, -1, 27, -1, 23, -1, -1],
    [-1, 31, -1, 23, -1, 21, -1, 20, -1, -1, 12, -1, -1,  0, 13, -1],
    [-1, 22, -1, 34, 31, -1, 14, -1,  4, -1, -1, -1, 13, -1, 22, 24],
]


def expand():
    m = len(BASE) * Z
    n = len(BASE[0]) * Z
    rows = [[] for _ in range(m)]  # column indices per check, 0-based
    for bi, brow in enumerate(BASE):
        for bj, s in enumerate(brow):
            if s < 0:
                continue
            for i in range(Z):
                rows[bi * Z + i].append(bj * Z + (i + s) % Z)
    for r in rows:
        r.sort()
    return m, n, rows


def sanity(m, n, rows):
    # Parity part (right m columns) must be invertible over GF(2) so a
    # systematic encoder exists with the info bits in the left n-m positions.
    pivot = [0] * m
    mat = []
    for r in rows:
        acc = 0
        for c in r:
            if c >= n - m:
                acc |= 1 << (c - (n - m))
        mat.append(acc)
    rank = 0
    for col in range(m):
        sel = None
        for i in range(rank, m):
            if mat[i] >> col & 1:
                sel = i
                break
        if sel is None:
            raise SystemExit(f"parity block singular at column {col}")
        mat[rank], mat[sel] = mat[sel], mat[rank]
        for i in range(m):
            if i != rank and mat[i] >> col & 1:
                mat[i] ^= mat[rank]
        pivot[col] = 1
        rank += 1
    assert rank == m

    # No 4-cycles: any two checks share at most one variable.
    sets = [set(r) for r in rows]
    for i in range(m):
        for j in range(i + 1, m):
            assert len(sets[i] & sets[j]) <= 1, (i, j)


def write_alist(path, m, n, rows):
    cols = [[] for _ in range(n)]
    for i, r in enumerate(rows):
        for c in r:
            cols[c].append(i)
    max_col = max(len(c) for c in cols)
    max_row = max(len(r) for r in rows)
    with open(path, "w") as f:
        f.write(f"{n} {m}\n{max_col} {max_row}\n")
        f.write(" ".join(str(len(c)) for c in cols) + "\n")
        f.write(" ".join(str(len(r)) for r in rows) + "\n")
        for c in cols:
            pad = [0] * (max_col - len(c))
            f.write(" ".join(str(i + 1) for i in c) + ("" if not pad else " " + " ".join(map(str, pad))) + "\n")
        for r in rows:
            pad = [0] * (max_row - len(r))
            f.write(" ".join(str(i + 1) for i in r) + ("" if not pad else " " + " ".join(map(str, pad))) + "\n")


if __name__ == "__main__":
    m, n, rows = expand()
    sanity(m, n, rows)
    edges = sum(len(r) for r in rows)
    write_alist("data/ieee80211ad_r12_z42.alist", m, n, rows)
    print(f"wrote data/ieee80211ad_r12_z42.alist: {m}x{n}, {edges} edges")
