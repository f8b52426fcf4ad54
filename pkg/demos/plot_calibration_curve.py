"""
Diagnostics and calibration curve
=================================

Error rate, efficiency, deviation from validity and observed fuzziness for
well-separated and overlapping classes. The calibration curve pairs each
significance level with its observed error rate; a valid predictor tracks
the diagonal. matplotlib is only needed for the optional figure.
"""

from conformalrf import SignificanceGrid, evaluate, icp_fit, icp_pvalues
from conformalrf.io import synthetic_blobs

grid = SignificanceGrid()
reports = {}
for name, centers in [("separated", [[0, 0], [3, 3]]), ("overlapping", [[0, 0], [1, 1]])]:
    train = synthetic_blobs(500, centers, 1.0, seed=0)
    test = synthetic_blobs(1000, centers, 1.0, seed=1)
    pvalues = icp_pvalues(icp_fit(train, seed=0), test.features, seed=0)
    reports[name] = evaluate(pvalues, train.label_space.encode(test.raw_labels()), grid)
    er, eff = reports[name].at(0.1)
    print(f"{name:12s} ER(0.1)={er:.4f} EFF(0.1)={eff:.4f} "
          f"VAL={reports[name].validity_deviation:.4f} "
          f"OF={reports[name].observed_fuzziness:.4f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot([0, 1], [0, 1], "k--", lw=1)
    for name, report in reports.items():
        eps, err = zip(*report.calibration_curve)
        ax.plot(eps, err, label=name)
    ax.set_xlabel("significance level")
    ax.set_ylabel("observed error rate")
    ax.legend()
    fig.savefig("calibration_curve.png", dpi=120, bbox_inches="tight")
    print("saved calibration_curve.png")
