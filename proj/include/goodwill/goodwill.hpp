#pragma once

#include "goodwill/approximation.hpp"
#include "goodwill/costate.hpp"
#include "goodwill/errors.hpp"
#include "goodwill/hamiltonian.hpp"
#include "goodwill/hilbert.hpp"
#include "goodwill/lifting.hpp"
#include "goodwill/lq_control.hpp"
#include "goodwill/model.hpp"
#include "goodwill/parallel.hpp"
#include "goodwill/policy.hpp"
#include "goodwill/sdde.hpp"
#include "goodwill/state_delay.hpp"
