#pragma once

#include "dielscope/colecole.hpp"
#include "dielscope/constants.hpp"
#include "dielscope/contrast.hpp"
#include "dielscope/error.hpp"
#include "dielscope/lm.hpp"
#include "dielscope/params_file.hpp"
#include "dielscope/probe_cal.hpp"
#include "dielscope/report.hpp"
#include "dielscope/session.hpp"
#include "dielscope/spectra.hpp"
#include "dielscope/spectrum_csv.hpp"
#include "dielscope/synth.hpp"
#include "dielscope/touchstone.hpp"
