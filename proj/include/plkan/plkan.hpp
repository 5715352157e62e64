#pragma once

#include "plkan/complexity.hpp"
#include "plkan/converter.hpp"
#include "plkan/error.hpp"
#include "plkan/format.hpp"
#include "plkan/kan.hpp"
#include "plkan/matrix.hpp"
#include "plkan/mlp.hpp"
#include "plkan/monomial_relu.hpp"
#include "plkan/piecewise_linear.hpp"
#include "plkan/provenance.hpp"
#include "plkan/regions.hpp"
#include "plkan/reports.hpp"
#include "plkan/serialization.hpp"
#include "plkan/spline.hpp"
#include "plkan/verify.hpp"
