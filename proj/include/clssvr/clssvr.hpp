#ifndef CLSSVR_CLSSVR_HPP
#define CLSSVR_CLSSVR_HPP

#include "basis.hpp"
#include "benchmark.hpp"
#include "dae_model.hpp"
#include "error.hpp"
#include "expression.hpp"
#include "fractional.hpp"
#include "legendre.hpp"
#include "problem_io.hpp"
#include "report.hpp"
#include "solver.hpp"

#endif // CLSSVR_CLSSVR_HPP
