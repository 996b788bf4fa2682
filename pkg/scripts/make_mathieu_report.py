"""Regenerate reports/mathieu_F_residual.{md,csv}.

Compares the Mathieu closed form of F with the ODE solution on t in [0, 10]
(m = omega = 1, V = 2 pi) for the derived parameter mapping and for the
printed one.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from coherent_kernel.axial import mathieu_F, solve_F
from coherent_kernel.core import PhysParams, TimeGrid, coupling_strength, mathieu_q


def residuals(params, t_final=10.0, dt=1e-3):
    sol = solve_F(params, TimeGrid.spanning(t_final, dt), allow_zero_crossing=True)
    scale = np.maximum.accumulate(np.maximum(1.0, np.abs(sol.F)))
    out = {"t": sol.times, "F_ode": sol.F}
    for mapping in ("derived", "printed"):
        Fm = mathieu_F(params, sol.times, mapping)
        out[f"F_{mapping}"] = Fm
        out[f"res_{mapping}"] = np.abs(Fm - sol.F) / scale
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "reports"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    p = PhysParams(mass=1.0, omega=1.0, volume=2 * math.pi)
    r = residuals(p)
    cols = ["t", "F_ode", "F_derived", "F_printed", "res_derived", "res_printed"]
    np.savetxt(out / "mathieu_F_residual.csv", np.column_stack([r[c] for c in cols]), fmt="%.17g",
               delimiter=",", header=",".join(cols), comments="")
    S = coupling_strength(p)
    rows = []
    for tt in (0.5, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0):
        k = int(round(tt / (r["t"][1] - r["t"][0])))
        rows.append(f"| {r['t'][k]:.1f} | {r['F_ode'][k]: .10f} | {r['F_derived'][k]: .10f} | "
                    f"{r['F_printed'][k]: .6f} |")
    text = f"""# Closed-form F(t): Mathieu representation versus the ODE

Parameters: m = 1, omega = 1, V = 2 pi (S = {S:.6g}); t in [0, 10], step 1e-3.
The ODE solution of `F'' + 4 psi F' + W2 F = 0`, `F(0) = 1`, `F'(0) = 0` is the reference.
Residuals are `|F_mathieu - F_ode|` divided by the running maximum of `max(1, |F_ode|)`.

## Mappings

* **derived**: `F(t) = exp(-2 int_0^t psi) * A * (ce(zeta) + FF se(zeta))` with
  `zeta = omega t/2 - pi/4`, `q = -4 S^2/(m omega^2)` (= {-4 * S * S:.6g}), a = 0,
  `-2 int_0^t psi = (2 S^2/(m omega)) (t - sin(omega t)/omega)`,
  `FF = ce'(pi/4)/se'(pi/4)`, `A = 1/(ce(pi/4) - FF se(pi/4))`.
  Substituting `F = exp(-2 int psi) y` removes the first-derivative term; since `W2 = 4 psi^2`
  what remains is `y'' - 2 psi' y = 0`, `-2 psi' = (2 S^2/m) sin(omega t) = (2 S^2/m) cos(2 zeta)`.
* **printed**: exponent `(4 pi/(m V)) t - (2 pi/(m omega V)) sin(2 omega t)` and
  `q = -2 pi/(m omega V)` (= {mathieu_q(p):.6g}), same zeta, FF and A.

## Result

| mapping | max residual on [0, 10] |
|---|---|
| derived | {r['res_derived'].max():.3e} |
| printed | {r['res_printed'].max():.3e} |

| t | F (ODE) | F (derived) | F (printed) |
|---|---|---|---|
""" + "\n".join(rows) + """

The derived mapping reproduces the ODE to the integrator's accuracy. The printed
mapping does not: its exponent has the wrong frequency (sin 2 omega t instead of
sin omega t), and its q is a quarter of the value the substitution produces.
Both Mathieu evaluations use the even/odd initial-value basis; A and FF absorb
any difference in normalisation from computer-algebra conventions.

Full series: `mathieu_F_residual.csv` (columns t, F_ode, F_derived, F_printed,
res_derived, res_printed). Regenerate with `python scripts/make_mathieu_report.py`.
"""
    (out / "mathieu_F_residual.md").write_text(text)
    print(f"derived max residual {r['res_derived'].max():.3e}; printed {r['res_printed'].max():.3e}")


if __name__ == "__main__":
    main()
