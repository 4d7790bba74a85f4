"""Where the theory applies.

The damping, shift and noise intensity must satisfy a handful of strict
inequalities.  This walks through the reference parameters, then pushes
epsilon toward its ceiling and watches the decay rate sigma collapse.
"""
from stochwave import Params, decay_rate_sigma, max_noise_intensity, validate

p = Params()
print("reference parameters:", p)
print("violations:", validate(p) or "none")
print(f"sigma = {decay_rate_sigma(p)}, epsilon ceiling = {max_noise_intensity(p):.6f}")

print("\nraising the noise intensity:")
for eps in (0.0, 0.1, 0.2, 0.3, 0.33):
    print(f"  epsilon={eps:<5} sigma={decay_rate_sigma(p.replace(epsilon=eps)):.4f}")

print("\nbeta - 3 delta must stay positive:")
print(" ", validate(p.replace(delta=1 / 3)))
