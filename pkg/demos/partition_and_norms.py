"""Dyadic partition, band norms and the Besov/Sobolev comparison on a random field."""
import numpy as np

from lpmhd import BesovParams, Grid, besov_norm, default_partition, random_field, sobolev_norm
from lpmhd.littlewood_paley import band_energies

grid = Grid(2, 128)
part = default_partition(grid)
print("bands:", part.bands)

# partition of unity, inhomogeneous form
high = part.phi[[i for i, j in enumerate(part.bands) if j >= 0]].sum(axis=0)
print("max |chi + sum phi_j - 1| =", np.max(np.abs(part.chi + high - 1)))

f = random_field(grid, 2.0, seed=1)
for j, e in band_energies(f).items():
    print(f"  j={j:3d}  ||Delta_j f||^2 = {e:.4e}")

for s in (0.5, 1.0, 1.5):
    b = besov_norm(f, BesovParams(s), include_tail=True)
    h = sobolev_norm(f, s, homogeneous=True)
    print(f"s={s}: B^s_(2,2) = {b:.4f}, H^s = {h:.4f}, ratio {b / h:.3f}")
