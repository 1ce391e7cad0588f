"""Compare the compiled and numpy kernel backends on a real torus mesh.

    python benchmarks/bench_kernels.py --grid 256 --repeat 5
"""

import argparse
import json
import timeit

import numpy as np

from cmcstab import kernels
from cmcstab.surface import clifford_torus, tessellate


def _cases(mesh):
    tri = np.ascontiguousarray(mesh.triangles, dtype=np.int64)
    lengths = np.ascontiguousarray(mesh.lengths)
    areas = kernels.triangle_areas(lengths)
    rho = 1.0 + 0.1 * np.cos(mesh.params[:, 0])
    nv = mesh.nv
    return {
        "triangle_areas": lambda m: m.triangle_areas(lengths),
        "triangle_cotangents": lambda m: m.triangle_cotangents(lengths, areas),
        "assemble_cotan": lambda m: m.assemble_cotan(tri, lengths, nv),
        "alpha_sum": lambda m: m.alpha_sum(tri, lengths, rho),
        "angle_sums": lambda m: m.angle_sums(tri, lengths, nv),
    }


def run(grid, repeat):
    mesh = tessellate(clifford_torus(1.0, 0.3), grid, grid)
    backends = kernels.backends()
    rows = []
    for name, fn in _cases(mesh).items():
        row = {"kernel": name, "triangles": mesh.nf}
        for bname, mod in backends.items():
            fn(mod)  # warm up
            row[bname] = min(timeit.repeat(lambda fn=fn, mod=mod: fn(mod), number=1, repeat=repeat))
        if "cython" in row:
            row["speedup"] = row["python"] / row["cython"]
        rows.append(row)
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=256, help="torus grid size per direction")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print JSON instead of a table")
    args = ap.parse_args()
    rows = run(args.grid, args.repeat)
    if args.json:
        print(json.dumps(rows, indent=2))
        return
    if "cython" not in kernels.backends():
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'kernel':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for r in rows:
        cy = f"{1e3 * r['cython']:14.2f}" if "cython" in r else f"{'-':>14}"
        sp = f"{r['speedup']:10.1f}" if "speedup" in r else f"{'-':>10}"
        print(f"{r['kernel']:<22}{1e3 * r['python']:14.2f}{cy}{sp}")


if __name__ == "__main__":
    main()
