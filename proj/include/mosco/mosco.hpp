#pragma once

#include "mosco/lattice.hpp"
#include "mosco/quadrature.hpp"
#include "mosco/smoothfn.hpp"
#include "mosco/convergence.hpp"
#include "mosco/duality.hpp"
#include "mosco/hilbert.hpp"
#include "mosco/operators.hpp"
#include "mosco/forms.hpp"
#include "mosco/evolution.hpp"
#include "mosco/correlations.hpp"
#include "mosco/config.hpp"
#include "mosco/report.hpp"
#include "mosco/experiments.hpp"
