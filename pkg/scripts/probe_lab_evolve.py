"""Oracle probes: Cayley evolution, revival, dilrot dynamics."""
import sys, time, math
import numpy as np

sys.path.insert(0, "/root/pkg/src")
from pulab.lab import (Grid1D, Grid2D, WaveState, build_hamiltonian_inverted,
                       build_hamiltonian_dilrot, boundary_asymmetry,
                       evolve, gaussian_state, sector_state, rayleigh_quotient)

# --- inverted, 2000 steps ---
t0 = time.time()
g = Grid1D(16.0, 400)
H = build_hamiltonian_inverted(g, 1.0)
psi0 = gaussian_state(g, width=1.0)
out, norms = evolve(psi0, H, 5e-4, 2000, return_norms=True)
drift = np.abs(norms - norms[0]).max() / norms[0]
step_drift = np.abs(np.diff(norms)).max() / norms[0]
print(f"inverted 2000 steps: {time.time()-t0:.2f}s drift={drift:.3e} per-step={step_drift:.3e} "
      f"contam={out.boundary_contaminated} bmass={out.boundary_mass():.2e}")

# --- zero H identity ---
import scipy.sparse as sp
Hz = sp.csr_array((400, 400), dtype=float)
outz = evolve(psi0, Hz, 0.1, 5)
print("zero-H max change:", np.abs(outz.psi - psi0.psi).max())

# --- revival ---
t0 = time.time()
g = Grid1D(10.0, 512)
Hh = build_hamiltonian_inverted(g, 1.0, potential="harmonic")
coh = gaussian_state(g, center=1.5, width=math.sqrt(0.5))
steps = 1257
outr, normsr = evolve(coh, Hh, 2 * math.pi / steps, steps, return_norms=True)
fid = abs(coh.inner(outr)) / (coh.norm * outr.norm)
print(f"revival: {time.time()-t0:.2f}s fidelity={fid:.6f} drift={np.abs(normsr-normsr[0]).max()/normsr[0]:.2e}")
# half period: packet at mirror position, fidelity should dip
outh = evolve(coh, Hh, math.pi / 628, 628)
print("half-period overlap:", abs(coh.inner(outh)) / (coh.norm * outh.norm))

# --- dilrot: matrix + state asymmetry ---
g2 = Grid2D(12.0, 128)
Hd = build_hamiltonian_dilrot(g2, 0.2, 0.9)
print("dilrot matrix asym:", boundary_asymmetry(Hd))
from scipy.sparse import coo_array
defect = coo_array(Hd - Hd.conj().T)
n = g2.points
edge = {0, 1, n - 2, n - 1}
rows_i, rows_j = np.divmod(defect.row, n)
ok = np.array([(i in edge) or (j in edge) for i, j in zip(rows_i, rows_j)])
print("defect confined to edge sites:", bool(ok.all()), "nnz:", defect.nnz)
for w in (1.0, 1.6, 2.2, 2.8):
    st = sector_state(g2, 0, width=w)
    print(f"  width={w}: bmass={st.boundary_mass():.3e} state asym={boundary_asymmetry(Hd, st):.3e}")

# --- Rayleigh quotients, N=512, mu=0 ---
t0 = time.time()
g2r = Grid2D(12.0, 512)
nu = 0.9
Hr = build_hamiltonian_dilrot(g2r, 0.0, nu)
quots = []
for nn in (0, 1, 2):
    st = sector_state(g2r, nn, width=1.8)
    q = rayleigh_quotient(st, Hr)
    quots.append(q)
    tgt = nu * nn
    rel = abs(q - tgt) / max(abs(tgt), 1e-30) if nn else abs(q)
    print(f"rayleigh n={nn}: q={q:.8f} target={tgt:.4f} relerr={rel:.2e}")
print(f"rayleigh build+quotients: {time.time()-t0:.2f}s")
slope = np.polyfit([0, 1, 2], quots, 1)[0]
print(f"ladder slope: {slope:.6f} vs {nu}; residual {abs(slope-nu)/nu:.3e}")
# mu=0 with nonzero mu contribution should stay ~0 for real radial profiles
Hmix = build_hamiltonian_dilrot(g2r, 0.4, nu)
st1 = sector_state(g2r, 1, width=1.8)
print("mixed-generator rayleigh n=1:", rayleigh_quotient(st1, Hmix))

# --- nu=0 dilatation width growth ---
t0 = time.time()
g2d = Grid2D(12.0, 192)
mu = 0.15
Hdil = build_hamiltonian_dilrot(g2d, mu, 0.0)
st = sector_state(g2d, 0, width=1.5)
x1, x2 = g2d.meshes()
r2 = x1**2 + x2**2
def msd(state):
    w = np.abs(state.psi)**2
    return float((w * r2).sum() / w.sum())
m0 = msd(st)
T = 0.4
outd, normsd = evolve(st, Hdil, 1e-3, 400, return_norms=True)
m1 = msd(outd)
print(f"dilatation: {time.time()-t0:.2f}s  <r^2> ratio={m1/m0:.6f} vs e^(2 mu T)={math.exp(2*mu*T):.6f} "
      f"rel={(m1/m0)/math.exp(2*mu*T)-1:.2e}")
print(f"  norm drift={np.abs(normsd-normsd[0]).max()/normsd[0]:.2e} contam={outd.boundary_contaminated}")

# --- mu=nu=0 zero operator ---
H0 = build_hamiltonian_dilrot(g2d, 0.0, 0.0)
print("zero dilrot nnz:", H0.nnz, "max:", 0.0 if H0.nnz == 0 else np.abs(H0.data).max())

# --- dilrot 2000-step drift (acceptance 10 scale) ---
t0 = time.time()
g2L = Grid2D(14.0, 160)
HL = build_hamiltonian_dilrot(g2L, 0.2, 0.9)
stL = sector_state(g2L, 0, width=1.25)
outL, normsL = evolve(stL, HL, 2.5e-4, 2000, return_norms=True)
print(f"dilrot 2000 steps: {time.time()-t0:.1f}s drift={np.abs(normsL-normsL[0]).max()/normsL[0]:.3e} "
      f"contam={outL.boundary_contaminated} bmass={outL.boundary_mass():.2e}")
