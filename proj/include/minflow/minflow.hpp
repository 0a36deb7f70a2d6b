#ifndef MINFLOW_MINFLOW_HPP_
#define MINFLOW_MINFLOW_HPP_

#include "minflow/autodiff.hpp"
#include "minflow/data.hpp"
#include "minflow/dot.hpp"
#include "minflow/error.hpp"
#include "minflow/gradcheck.hpp"
#include "minflow/graph.hpp"
#include "minflow/model.hpp"
#include "minflow/runtime.hpp"
#include "minflow/tensor.hpp"

#endif  // MINFLOW_MINFLOW_HPP_
