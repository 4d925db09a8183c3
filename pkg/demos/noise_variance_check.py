"""How well does the G-draw simulation estimate the noise variance?

For one employer with a fixed contribution, compares the mean of the
simulation estimator with the variance of the production noise component
and with the closed form. The estimator divides by G - 1 around a known
zero mean, so its expectation is G / (G - 1) times the target.

    python3 demos/noise_variance_check.py
"""
from qwivar.oracle import mc_sdl, sdl_closed_form
from qwivar.sdl import RampParams

params = RampParams(0.01, 0.10)
print(f"Var(delta) closed form: {params.variance:.6g}")
for G in (2, 5, 10, 50):
    rep = mc_sdl([100.0], [1], params, G=G, batches=2000, draws=100_000, seed=7)
    print(f"G={G:3d}  mean estimate / empirical = {rep.formula / rep.empirical:.4f}  (G/(G-1) = {G / (G - 1):.4f})")
print(sdl_closed_form(100.0, params, seed=7).line())
