"""Numerical checks of the bound linking the metric objective to the Wasserstein one.

For a discriminator that outputs a capped SNR-like score, |c - D(s,s)| + |D(G(x),s) - d|
is never smaller than |(c - d) - (D(s,s) - D(G(x),s))|. The script samples the bound,
prints the equality cases, and runs the small regime-equivalence experiment.

Run: python demos/03_theory.py
"""
from tsegan import theory

r = theory.check_minkowski(200_000, seed=0)
print(r.summary())

s = theory.TheorySample(c=120.0, d=15.0, dss=100.0, dgs=30.0)
print(f"aligned residuals: lhs {s.lhs} == rhs {s.rhs}")
s = theory.TheorySample(c=120.0, d=15.0, dss=119.0, dgs=14.0)
print(f"opposed residuals: lhs {s.lhs} > rhs {s.rhs}")

print(theory.check_equality_conditions().summary())
print(theory.check_scalar_norm_equivalence(theory.random_candidate_lists(10_000)).summary())

# with a bias that keeps D(G(x), s) above d the two objectives rank probes identically
print(theory.check_regime_equivalence(bias=120.0).summary())
# a bias far below d breaks the precondition; the check reports it as skipped
print(theory.check_regime_equivalence(bias=-500.0).summary())
