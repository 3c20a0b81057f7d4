#pragma once

// Everything except the JSON/CSV layer in afe/io.hpp, which pulls in nlohmann::json.
#include "afe/analysis.hpp"
#include "afe/control.hpp"
#include "afe/error.hpp"
#include "afe/model.hpp"
#include "afe/numerics.hpp"
#include "afe/observer.hpp"
#include "afe/robustness.hpp"
#include "afe/sim.hpp"
