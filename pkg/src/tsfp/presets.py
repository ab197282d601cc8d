"""Built-in experiment configurations.

Grid extents are given as ``extent_alpha``, the half-width in Re(alpha) and
Im(alpha); ``extent`` (in Q, P units) may be used instead.
Keys under ``[acceptance]`` are the pass/fail thresholds of a run.
"""

FREE_OSCILLATOR = """
[experiment]
name = free-oscillator
kind = evolution

[hamiltonian]
model = free-oscillator
omega = 1

[scales]
kappa = 1
C = 1
hbar = 1
lengths = free

[grid]
n_pts = 256
extent_alpha = 6

[initial]
state = coherent
beta = 1.5

[evolution]
scheme = spectral
order_cap = 2
dt = 0.0031415926535897933
t_final = 6.283185307179586
log_every = 500
degree = 40

[oracle]
cutoff = 40

[acceptance]
diffusion_zero = 0
rotation_l1 = 1e-5
mass_drift = 1e-8
step_mass_change = 1e-10
energy_drift_rel = 1e-4
"""

KERR = """
[experiment]
name = kerr
kind = evolution

[hamiltonian]
model = kerr
omega = 1
U = 0.5

[scales]
kappa = 1
C = 1
hbar = 1

[grid]
n_pts = 256
extent_alpha = 6

[initial]
state = coherent
beta = 1.5

[evolution]
scheme = gauss-hermite
order_cap = 2
degree = 40
dt = 0.002
t_final = 2.0
log_every = 50

[oracle]
cutoff = 40

[checks]
time_reversal_tau = 0.5
convergence_dt = 0.004
convergence_n_pts = 128

[acceptance]
l1_final = 5e-3
convergence_ratio_min = 4
mass_drift = 1e-8
step_mass_change = 1e-10
energy_drift_rel = 1e-4
energy_flux = 1e-6
time_reversal_l1 = 1e-5
runtime_s = 300
"""

BOSE_HUBBARD_2SITE = """
[experiment]
name = bose-hubbard-2site
kind = evolution

[hamiltonian]
model = bose-hubbard
sites = 2
J = 1
U = 0.5

[scales]
kappa = 1
C = 1
hbar = 1

[grid]
n_pts = 48
extent_alpha = 5.5

[initial]
state = coherent
beta = 1.0, 0.5j

[evolution]
scheme = gauss-hermite
order_cap = 2
degree = 14
dt = 0.02
t_final = 0.5
log_every = 5

[oracle]
cutoff = 20

[checks]
time_reversal_tau = 0

[acceptance]
truncation_satisfied = 1
l1_final = 5e-2
mass_drift = 1e-8
step_mass_change = 1e-10
energy_drift_rel = 1e-4
runtime_s = 1800
"""

QUARTIC_COMPLEX = """
[experiment]
name = quartic-complex
kind = rhs-check

[hamiltonian]
model = quartic-complex
m = 1
lambda = 0.5

[scales]
kappa = 1
C = 1
hbar = 1

[grid]
n_pts = 32
extent_alpha = 6

[initial]
state = coherent
beta = 0.5, 0.3j

[oracle]
cutoff = 24
dt = 1e-3

[checks]
caps = 2, 4
degree = 16

[acceptance]
truncation_violated = 1
cap4_mismatch = 1e-4
cap2_over_cap4_min = 10
"""

GAUGE_CUBIC_TOY = """
[experiment]
name = gauge-cubic-toy
kind = truncation

[hamiltonian]
model = gauge-cubic-toy
g = 1

[acceptance]
truncation_violated = 1
"""

AMPLIFIER = """
[experiment]
name = amplifier
kind = amplifier

[hamiltonian]
model = amplifier
g = 0.5

[scales]
kappa = 1
C = 1
hbar = 1

[grid]
n_pts = 256
extent_alpha = 12

[evolution]
scheme = gauss-hermite
order_cap = 2
degree = 60
dt = 0.01
t_final = 1.5
log_every = 10

[oracle]
cutoff = 80

[acceptance]
variance_growth_rel = 0.03
fock1_maxima = 2
energy_flux = 1e-6
mass_drift = 1e-8
step_mass_change = 1e-10
"""

CONSTRAINT_AUDIT = """
[experiment]
name = constraint-audit
kind = audit

[audit]
seed = 20261016
count = 100
points = 10
max_modes = 2
max_degree = 4
symbol_count = 20
symbol_cutoff = 20

[acceptance]
trace = 1e-12
anticommutator = 1e-12
pairing = 1e-9
dual_route = 1e-10
time_reversal_generator = 1e-12
symbol_round_trip = 1e-10
expectation_identity = 1e-5
runtime_s = 60
"""

PRESETS = {
    "free-oscillator": FREE_OSCILLATOR,
    "kerr": KERR,
    "bose-hubbard-2site": BOSE_HUBBARD_2SITE,
    "quartic-complex": QUARTIC_COMPLEX,
    "gauge-cubic-toy": GAUGE_CUBIC_TOY,
    "amplifier": AMPLIFIER,
    "constraint-audit": CONSTRAINT_AUDIT,
}
