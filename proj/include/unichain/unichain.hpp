#pragma once

#include "unichain/chain_eval.hpp"
#include "unichain/closed_form.hpp"
#include "unichain/errors.hpp"
#include "unichain/fixtures.hpp"
#include "unichain/format.hpp"
#include "unichain/generate.hpp"
#include "unichain/instance_file.hpp"
#include "unichain/model.hpp"
#include "unichain/sim.hpp"
#include "unichain/solver.hpp"
#include "unichain/theorem_lab.hpp"
