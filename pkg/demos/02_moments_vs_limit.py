"""
Moments of F_n against the limit law
====================================

A small replication of the moment comparison.  Odd moments of F_n only
vanish as n grows; the exact mean of the discretized functional shows how
slowly (roughly like n^{(Hd-2)/2}).
"""

import numpy as np

from fbmclt import ExperimentConfig, ModelParams, run_clt_experiment

cfg = ExperimentConfig(ModelParams(0.75, 2, 1.0, 1.0), "gaussian_difference",
                       n_values=(8, 16, 32), replications=400, master_seed=7,
                       epsilon_schedule=(0.1,), qmc_points=2**12, qmc_replicates=8)
report = run_clt_experiment(cfg)

print(f"D={report.D:.5f} ||f||={report.beta_norm:.5f} eps={report.epsilon}")
print(f"{'n':>4} {'m1':>8} {'E grid':>8} {'m2':>8} {'pred m2':>8} {'KS':>6} {'crit':>6}")
for r in report.rows:
    print(f"{r.n:4d} {r.empirical[0]:8.4f} {r.exact_mean:8.4f} {r.empirical[1]:8.4f} "
          f"{r.predicted[1]:8.4f} {r.ks:6.3f} {r.ks_critical:6.3f}")

# the limit sample itself: its even moments should track the predictions
row = report.rows[-1]
print("limit-sample moments:", np.round(report.limit_empirical[:4], 4))
print("predicted           :", np.round(row.predicted[:4], 4))
