#pragma once

// Built-in copies of the parameter files shipped under data/. A unit test keeps
// them identical to the files on disk.

#include <string_view>

namespace dielscope::defaults {

// data/reference_liquids.txt
inline constexpr std::string_view kReferenceLiquidsText = R"dlsc(# Reference liquids for open-ended probe calibration.
# Single-pole Debye model: eps(f) = eps_inf + (eps_static - eps_inf) / (1 + j 2 pi f tau)
# Parameters are given at reference_temp_c; the d*_dt keys are linear
# temperature coefficients per degree Celsius around that temperature.
format = dielscope-reference-liquids
version = 1

[water]
reference_temp_c = 25
eps_static = 78.36
eps_inf = 5.2
tau_ps = 8.27
d_eps_static_dt = -0.36
d_eps_inf_dt = 0
d_tau_ps_dt = -0.2
source = "U. Kaatze, J. Chem. Eng. Data 34 (1989) 371-374; single Debye fit at 25 C, linearized temperature coefficients"

[methanol]
reference_temp_c = 25
eps_static = 32.50
eps_inf = 5.60
tau_ps = 48.4
d_eps_static_dt = -0.19
d_eps_inf_dt = 0
d_tau_ps_dt = -0.9
source = "A. P. Gregory and R. N. Clarke, NPL Report MAT 23 (2012); single Debye approximation at 25 C, linearized temperature coefficients"
)dlsc";

// data/colecole_init.txt
inline constexpr std::string_view kColeColeInitText = R"dlsc(# Canonical starting point for Cole-Cole fits of colon-like tissue spectra
# in the 0.5-26.5 GHz band. Synthetic starting values, not literature fits.
# Poles are written as: delta_eps, tau_s, alpha
format = dielscope-colecole-params
version = 1

[model]
eps_inf = 4.0
sigma_s = 0.7
pole1 = 50, 8e-12, 0.1
pole2 = 10, 1.6e-10, 0.05
)dlsc";

// data/synthetic_truth.txt
inline constexpr std::string_view kSyntheticTruthText = R"dlsc(# SYNTHETIC ground truth for pipeline verification. These tissue parameters
# are plausible colon-like values chosen for testing; they are not
# literature measurements and not results of any clinical campaign.
format = dielscope-synthetic-truth
version = 1

[acquisition]
f_start_hz = 0.5e9
f_stop_hz = 26.5e9
n_points = 1601
n_sweeps = 3

[noise]
sigma_gamma = 0
rng_seed = 20240601

# Probe forward model: aperture admittance y = j 2 pi f c0 z0 eps seen
# through a cable of magnitude cable_gain and delay cable_delay_s.
[probe]
c0z0_s = 1.0e-12
cable_gain = 0.95
cable_delay_s = 1.5e-10

[plan]
points_per_tissue = 2
exvivo_T3 = 5
exvivo_T4a = 2
exvivo_T4b = 1
invivo_T3 = 4
invivo_T4a = 2
invivo_T4b = 1

# Poles are written as: delta_eps, tau_s, alpha.
# Tissue sections are named <scenario>.<stage>.<status>; a missing section
# falls back to default.<status>.
[default.healthy]
eps_inf = 4.0
sigma_s = 0.7
pole1 = 50, 8.0e-12, 0.10
pole2 = 10, 1.6e-10, 0.05

[default.tumor]
eps_inf = 4.0
sigma_s = 0.7
pole1 = 50, 8.0e-12, 0.10
pole2 = 10, 1.6e-10, 0.05
)dlsc";

}  // namespace dielscope::defaults
