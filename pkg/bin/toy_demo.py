"""
玩具数据手动冒烟脚本
在两组二维高斯数据上依次拟合不同 lambda，打印 ARE / ABDiff 与求解耗时
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from drfpca.data.dataset import center, make_toy
from drfpca.main import setup_logging
from drfpca.metrics.fairness import evaluate
from drfpca.optimizer import SolverOptions, fit_projection
from drfpca.robust.ambiguity import RobustConfig, epsilon_from_alpha


def run_spectrum(seed=0, alpha=0.1):
    ds = center(make_toy(200, 100, seed=seed))
    eps = epsilon_from_alpha(alpha, ds.counts)
    opts = SolverOptions(iterations=200, restarts=5, seed=seed)
    print(f"toy data: counts={ds.counts.tolist()} eps={[round(e, 4) for e in eps]}")
    print(f"{'lambda':>8} {'ARE':>10} {'ABDiff':>10} {'seconds':>8}")
    for lam in (0.0, 0.5, 1.0, 1.5, 2.0, 2.5):
        projection, report = fit_projection(ds, RobustConfig(lam=lam, eps=eps, k=1), opts)
        metrics = evaluate(projection, ds)
        print(f"{lam:>8.2f} {metrics.are:>10.4f} {metrics.abdiff:>10.4f} {report.seconds:>8.2f}")


if __name__ == "__main__":
    setup_logging("WARNING")
    try:
        run_spectrum(seed=int(sys.argv[1]) if len(sys.argv) > 1 else 0)
    except KeyboardInterrupt:
        print("Stopped by user")
