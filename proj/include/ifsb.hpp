#pragma once

#include "ifsb/error.hpp"
#include "ifsb/spaces.hpp"
#include "ifsb/ifs.hpp"
#include "ifsb/transfer.hpp"
#include "ifsb/holonomy.hpp"
#include "ifsb/bayes.hpp"
#include "ifsb/variational.hpp"
#include "ifsb/scenario.hpp"
#include "ifsb/models.hpp"
