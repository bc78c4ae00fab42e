#pragma once

#include "uncertal/cli.hpp"
#include "uncertal/config.hpp"
#include "uncertal/dataset.hpp"
#include "uncertal/errors.hpp"
#include "uncertal/experiment.hpp"
#include "uncertal/model.hpp"
#include "uncertal/pool.hpp"
#include "uncertal/rng.hpp"
#include "uncertal/stats.hpp"
#include "uncertal/strategy.hpp"
