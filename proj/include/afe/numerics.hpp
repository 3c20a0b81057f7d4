#pragma once

#include "afe/numerics/decompositions.hpp"
#include "afe/numerics/eigen.hpp"
#include "afe/numerics/lyapunov.hpp"
#include "afe/numerics/matrix.hpp"
