#pragma once

#include "ovdd/alm.hpp"
#include "ovdd/baseline.hpp"
#include "ovdd/decomposition.hpp"
#include "ovdd/field.hpp"
#include "ovdd/local_solvers.hpp"
#include "ovdd/models.hpp"
#include "ovdd/operators.hpp"
#include "ovdd/parallel.hpp"
#include "ovdd/phantom.hpp"
