"""Label-budget sweep on the MNIST or Fashion-MNIST test set.

Needs ``t10k-images-idx3-ubyte[.gz]`` and ``t10k-labels-idx1-ubyte[.gz]``
under ``$SSL_DATA_DIR/mnist`` (or ``fmnist``). Pixels are scaled to [0, 1],
the graph is a 10-NN Gaussian graph with the median-distance bandwidth.

    python demos/image_datasets.py [mnist|fmnist] [trials] [out_dir]
"""

from __future__ import annotations

import sys
from pathlib import Path

from graphssl import experiments as ex
from graphssl.data import find_idx_pair
from graphssl.plotting import emit_plots

name = sys.argv[1] if len(sys.argv) > 1 else "mnist"
trials = int(sys.argv[2]) if len(sys.argv) > 2 else 3
out = Path(sys.argv[3] if len(sys.argv) > 3 else f"demo_output/{name}")

try:
    print("using", *find_idx_pair(name))
except FileNotFoundError as exc:
    sys.exit(f"{exc}\nset SSL_DATA_DIR to a directory holding {name}/t10k-*-ubyte files")

base = ex.ExperimentConfig(dataset=name, sigma=None, neighbors=10, per_class=None, trials=trials)
budgets = [10, 50, 100, 500]

unsup = ex.run_sweep(base.replace(laplacian="L"))
print(f"unsupervised L  NMI {unsup.aggregates()[0]['nmi_mean']:.3f}")

curves = {}
for method, lap in (("spectral", "L_SSL"), ("spectral", "L_WNLL"), ("dirichlet", "L_SSL")):
    report = ex.run_sweep(base.replace(method=method, laplacian=lap), "total", budgets)
    ex.write_report(report, out / f"{method}_{lap}")
    curves[f"{method} {lap}"] = report.aggregates()
    for row in curves[f"{method} {lap}"]:
        print(f"{method:9s} {lap:7s} |S|={row['sweep_value']:4d}  NMI {row['nmi_mean']:.3f}  ACC {row['acc_mean']:.3f}")
emit_plots("sweep-lines", out, curves=curves, xlabel="|S|")
