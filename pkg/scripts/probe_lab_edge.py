"""Edge-case probes: acceptance commutator grid, harmonic levels, error paths."""
import sys, time, math, warnings
import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

sys.path.insert(0, "/root/pkg/src")
from pulab.params import PUParams
from pulab.errors import AccuracyLoss, BoundaryContamination, ConfigError
from pulab.lab import (Grid1D, Grid2D, WaveState, build_hamiltonian_inverted,
                       build_hamiltonian_dilrot, divergence_scan, evolve,
                       gaussian_state, commutator_check, sector_state)

# acceptance commutator grid candidates
for L in (0.5, 0.6):
    r = commutator_check(1.0, 1.0, Grid1D(L, 1024))
    print(f"commutator L={L} N=1024: {r:.6e}")
r256 = commutator_check(1.0, 1.0, Grid1D(2.4, 256))
r512 = commutator_check(1.0, 1.0, Grid1D(2.4, 512))
print(f"refinement ratio L=2.4: {r256/r512:.4f}")

# harmonic level check vs hbar*omega*(n+1/2)
g = Grid1D(10.0, 512)
H = build_hamiltonian_inverted(g, 1.0, potential="harmonic")
d = H.diagonal()
off = np.asarray(H.tocsr()[np.arange(511), np.arange(1, 512)]).ravel()
ev = eigh_tridiagonal(d, off, eigvals_only=True, select="i", select_range=(0, 4))
print("harmonic low levels:", ev, "targets 0.5 1.5 2.5 3.5 4.5")
print("level errors:", ev - (np.arange(5) + 0.5))

# gaussian width sanity
st = gaussian_state(Grid1D(16.0, 400), width=1.3)
x = st.grid.axis()
w2 = float((np.abs(st.psi)**2 * x**2).sum() / (np.abs(st.psi)**2).sum())
print("gaussian width:", math.sqrt(w2), "target 1.3")

# extreme-epsilon scan: accuracy propagation?
p = PUParams(1.0, 1.0)
try:
    t0 = time.time()
    rows = divergence_scan(0, 12.0, 0, 0.3, [5.0], p)
    print(f"eps=12 scan ok ({time.time()-t0:.1f}s):", abs(rows[0][1]))
except AccuracyLoss as e:
    print("eps=12 raises AccuracyLoss:", str(e)[:80])

# contamination warning
g = Grid1D(8.0, 64)
edge_state = gaussian_state(g, center=7.6, width=0.4)
print("edge bmass:", edge_state.boundary_mass(), "flag:", edge_state.boundary_contaminated)
H = build_hamiltonian_inverted(g, 0.0)
with warnings.catch_warnings(record=True) as rec:
    warnings.simplefilter("always")
    out = evolve(edge_state, H, 1e-3, 3)
print("warned:", [w.category.__name__ for w in rec])

# non-Hermitian operator -> AccuracyLoss
n = 64
bad = sp.lil_array((n, n))
bad[0, 1] = 5e4
bad = bad.tocsr()
st = WaveState(g, np.ones(n) / math.sqrt(n * g.spacing))
try:
    evolve(st, bad, 0.1, 5)
    print("non-Hermitian: no raise (BAD)")
except AccuracyLoss as e:
    print("non-Hermitian raises:", str(e)[:60])

# dilrot 1000 steps timing at N=128
t0 = time.time()
g2 = Grid2D(13.0, 128)
Hd = build_hamiltonian_dilrot(g2, 0.18, 0.8)
st2 = sector_state(g2, 0, width=1.2)
out2, norms2 = evolve(st2, Hd, 4e-4, 1000, return_norms=True)
print(f"dilrot 1000 @128: {time.time()-t0:.1f}s drift={np.abs(norms2-norms2[0]).max()/norms2[0]:.2e}")

# commutator at omega=1.7/hbar=0.8 (freeze a non-unit case)
r = commutator_check(1.7, 0.8, Grid1D(1.0, 1024))
print(f"commutator w=1.7 hb=0.8 L=1 N=1024: {r:.6e}")
# default-grid frozen value determinism
print(f"default grid: {commutator_check(1.0):.10e}")
