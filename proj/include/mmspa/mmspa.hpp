#pragma once

#include "mmspa/errors.hpp"
#include "mmspa/numkit.hpp"
#include "mmspa/marginal.hpp"
#include "mmspa/reserve.hpp"
#include "mmspa/optmech.hpp"
#include "mmspa/distributions.hpp"
#include "mmspa/joint_json.hpp"
#include "mmspa/mechanisms.hpp"
#include "mmspa/regret.hpp"
