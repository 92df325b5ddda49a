#pragma once

#include "breatherlab/dynamics.hpp"
#include "breatherlab/elliptic.hpp"
#include "breatherlab/error.hpp"
#include "breatherlab/fluctuation.hpp"
#include "breatherlab/lindstedt.hpp"
#include "breatherlab/qcond.hpp"
#include "breatherlab/series_core.hpp"
