"""Oracle probes for the grid-lab module: band spectrum, flow, commutator."""
import sys, time
import numpy as np
from scipy.linalg import eigh_tridiagonal

sys.path.insert(0, "/root/pkg/src")
from pulab.lab import (Grid1D, Grid2D, WaveState, build_hamiltonian_inverted,
                       build_hamiltonian_dilrot, boundary_asymmetry,
                       classical_dilrot_flow, commutator_check, gaussian_state,
                       sector_state, rayleigh_quotient)

# --- band structure, L=30 N=2048, omega=1 ---
t0 = time.time()
g = Grid1D(30.0, 2048)
H = build_hamiltonian_inverted(g, 1.0)
d = H.diagonal()
off = H.tocsr()[np.arange(2047), np.arange(1, 2048)]
evals = eigh_tridiagonal(d, np.asarray(off).ravel(), eigvals_only=True)
print(f"band solve: {time.time()-t0:.2f}s  min={evals.min():.3f} max={evals.max():.3f}")
neg = evals[evals < 0]
pos = evals[evals >= 0]
print(f"counts: neg={neg.size} pos={pos.size}")
gap0 = pos.min() - neg.max()
idx = np.searchsorted(evals, 0.0)
local = np.diff(evals[max(0, idx-25): idx+25])
print(f"gap at 0: {gap0:.6e}; local spacing median {np.median(local):.6e}; ratio {gap0/np.median(local):.3f}")
# window where band is dense
print("eigs around 0:", evals[idx-3:idx+3])

# symmetry exact
asym = (H - H.T)
print("inverted asym nnz:", asym.nnz, "max:", 0.0 if asym.nnz == 0 else np.abs(asym.data).max())

# omega=0 free stencil
Hf = build_hamiltonian_inverted(g, 0.0)
import scipy.sparse as sp
from pulab.lab import _second_difference
ref = (-0.5 * _second_difference(2048, g.spacing)).tocsr()
print("free stencil equal:", (Hf != ref).nnz == 0)

# --- classical flow ---
mu, nu, t = 0.37, 1.21, 2.5
q1, q2, p1, p2 = 0.8, -0.4, 0.25, 1.1
out = classical_dilrot_flow(q1, q2, p1, p2, mu, nu, t)
import math, cmath
print("q env:", math.hypot(out[0], out[1]) / math.hypot(q1, q2), "vs", math.exp(mu*t))
print("p env:", math.hypot(out[2], out[3]) / math.hypot(p1, p2), "vs", math.exp(-mu*t))
# Jacobian from basis vectors (linear flow)
cols = []
for e in np.eye(4):
    cols.append(classical_dilrot_flow(*e, mu, nu, t))
M = np.array(cols).T
J = np.zeros((4, 4)); J[0, 2] = J[1, 3] = 1.0; J[2, 0] = J[3, 1] = -1.0
print("symplectic defect:", np.abs(M.T @ J @ M - J).max())
# mu=0 pure rotation
out0 = classical_dilrot_flow(q1, q2, p1, p2, 0.0, nu, t)
print("mu=0 |q| ratio-1:", math.hypot(out0[0], out0[1])/math.hypot(q1, q2) - 1)

# --- commutator check ---
for (L, N) in [(20.0, 1024), (0.6, 1024), (0.6, 2048), (1.2, 1024), (2.4, 256), (2.4, 512)]:
    r = commutator_check(1.0, 1.0, Grid1D(L, N))
    h = 2*L/(N-1)
    print(f"commutator L={L} N={N}: resid={r:.4e}  resid/h^2={r/h**2:.4f}")
print("omega=0:", commutator_check(0.0))
# hbar, omega dependence
for (w, hb) in [(1.7, 1.0), (1.0, 0.5), (2.0, 2.0)]:
    r = commutator_check(w, hb, Grid1D(1.0, 1024))
    h = 2.0/1023
    print(f"  w={w} hb={hb}: resid={r:.4e} resid/h^2={r/h**2:.4f}")
