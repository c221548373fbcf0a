#pragma once

#include "khessian/common.hpp"
#include "khessian/quadrature.hpp"
#include "khessian/nonlinearity.hpp"
#include "khessian/keller_osserman.hpp"
#include "khessian/hessian.hpp"
#include "khessian/ode_ivp.hpp"
#include "khessian/estimates.hpp"
#include "khessian/dirichlet.hpp"
#include "khessian/io.hpp"
