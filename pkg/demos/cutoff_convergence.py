"""Galerkin approximations at cutoffs n and 2n, and the response to small perturbations."""
from lpmhd import SolverConfig, cauchy_study, perturbation_study

cfg = SolverConfig(N=128, dt=5e-3, T_end=0.25, initial="orszag_tang")
table = cauchy_study(cfg, [4, 8, 16])
for n in table.n_list:
    print(f"D({n}, {2 * n}) = {table.D[n]:.3e}")
print(f"fitted decay rate: {table.rate:.2f}")

small = cfg.replace(N=64)
for delta in (0.0, 1e-6, 1e-4):
    rep = perturbation_study(small, delta)
    print(f"delta={delta:.0e}: final separation {rep.final_difference:.3e}, "
          f"amplification {rep.amplification:.4f}, bitwise identical {rep.identical}")
