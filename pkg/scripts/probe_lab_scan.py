"""Oracle probe: cutoff scan of the growth-observable matrix element."""
import sys, time, math
import numpy as np

sys.path.insert(0, "/root/pkg/src")
from pulab.params import PUParams
from pulab.lab import divergence_scan

p = PUParams(1.0, 1.0)
cut = [5.0, 10.0, 20.0, 40.0]

t0 = time.time()
rows = divergence_scan(0, -0.7, 0, 0.3, cut, p)
print(f"growth scan: {time.time()-t0:.2f}s")
vals = [v for _, v in rows]
mags = [abs(v) for v in vals]
print("magnitudes:", [f"{m:.6f}" for m in mags])
inc = [abs(vals[0])] + [abs(b - a) for a, b in zip(vals, vals[1:])]
print("increments:", [f"{i:.6f}" for i in inc])
print("ratios:", [f"{b/a:.3f}" for a, b in zip(inc, inc[1:])])

# damped control
t0 = time.time()
rows_c = divergence_scan(0, -0.7, 0, 0.3, cut, p, damped=True)
print(f"control scan: {time.time()-t0:.2f}s")
vals_c = [v for _, v in rows_c]
inc_c = [abs(b - a) for a, b in zip(vals_c, vals_c[1:])]
print("control mags:", [f"{abs(v):.3e}" for v in vals_c])
print("control increments:", [f"{i:.3e}" for i in inc_c])
print("control shrink:", [f"{a/b:.2e}" for a, b in zip(inc_c, inc_c[1:])])

# orthogonality kill
rows_o = divergence_scan(1, -0.7, 0, 0.3, cut, p)
print("n mismatch values:", [v for _, v in rows_o])

# another label pair + other hbar/omega, epsilon equal case and branches
p2 = PUParams(1.7, 0.8)
ell = math.sqrt(p2.hbar / p2.omega_cap)
rows2 = divergence_scan(0, 0.9, 0, -0.4, [c * ell for c in cut], p2)
vals2 = [v for _, v in rows2]
inc2 = [abs(vals2[0])] + [abs(b - a) for a, b in zip(vals2, vals2[1:])]
print("scaled-units increments:", [f"{i:.5f}" for i in inc2],
      "ratios:", [f"{b/a:.2f}" for a, b in zip(inc2, inc2[1:])])
rows3 = divergence_scan(2, 0.3, 2, 0.3, cut, p, branch_prime=-1, branch=1)
vals3 = [v for _, v in rows3]
inc3 = [abs(vals3[0])] + [abs(b - a) for a, b in zip(vals3, vals3[1:])]
print("same-eps cross-branch increments:", [f"{i:.5f}" for i in inc3])

# quadrature honesty: double the point density at R=20 via finer manual scan
from pulab.special import inverted_eigenfunction, inverted_eigenfunction_dx
from scipy.integrate import simpson
def manual(npts):
    x = np.linspace(-20, 20, npts)
    psi = inverted_eigenfunction(0.3, 1, x, p)
    dpsi = inverted_eigenfunction_dx(0.3, 1, x, p)
    xpsi = math.sqrt(2.0) * (-1j * dpsi - x * psi)
    po = inverted_eigenfunction(-0.7, 1, x, p)
    return complex(simpson(np.conj(po) * xpsi, x=x))
a = manual(6401); b = manual(12801); c = manual(25601)
print(f"R=20 quad: n=6401 {a:.8f}  n=12801 {b:.8f}  n=25601 {c:.8f}")
print(f"  |a-c|={abs(a-c):.2e} |b-c|={abs(b-c):.2e}")
