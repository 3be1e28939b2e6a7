#pragma once

#include "cmds/error.hpp"
#include "cmds/evaluate.hpp"
#include "cmds/fastpath.hpp"
#include "cmds/fit.hpp"
#include "cmds/init.hpp"
#include "cmds/kernel.hpp"
#include "cmds/model.hpp"
#include "cmds/simbench.hpp"
#include "cmds/solver.hpp"
#include "cmds/types.hpp"
