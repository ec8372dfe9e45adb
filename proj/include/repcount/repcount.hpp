#pragma once

#include "repcount/eval.hpp"
#include "repcount/fd_analysis.hpp"
#include "repcount/fpras.hpp"
#include "repcount/gen.hpp"
#include "repcount/io.hpp"
#include "repcount/model.hpp"
#include "repcount/numeric.hpp"
#include "repcount/repair_core.hpp"
#include "repcount/safety.hpp"
#include "repcount/sampler.hpp"
