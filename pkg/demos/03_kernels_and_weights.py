"""Where the closed forms and the inversion weight come from.

The kernel phi_kj is an integral over the polar angle of products of the
eigenfunctions with a transverse Bessel factor. For two layers it has closed
forms; this script evaluates both at one point per kernel and shows that
only the corrected forms match. It then prints the weight calibration,
which fits the constant in c rho^p d rho on a homogeneous round trip.
"""
from layerheat import KernelQuery, TwoLayerIdealParams, calibrate_weight
from layerheat.kernels import closed_form_scale, phi_kj_closed_two_layer, phi_kj_integral

params = TwoLayerIdealParams(1.0, 2.0, 1.5)
medium, coupling = params.medium(2), params.coupling()
rho, s = 2.0, 0.5
points = {(1, 1): (-0.4, -0.9), (1, 2): (-0.4, 0.6), (2, 1): (0.6, -0.4), (2, 2): (0.6, 1.1)}

print(f"{'kernel':>7} {'angle integral':>15} {'corrected':>12} {'literal':>12}")
for (k, j), (x, xi) in points.items():
    q = KernelQuery(rho, x, xi, s, k, j, 2)
    num = phi_kj_integral(q, medium, coupling).real
    scale = closed_form_scale(rho, params)
    fixed = scale * phi_kj_closed_two_layer(q, params, "derived")
    lit = scale * phi_kj_closed_two_layer(q, params, "literal")
    print(f"  phi{k}{j} {num:15.10f} {fixed:12.8f} {lit:12.8f}")

print()
for dim in (0, 1, 2):
    print("\n".join(calibrate_weight(dim).lines()))
