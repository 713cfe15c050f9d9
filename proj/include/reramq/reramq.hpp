#pragma once

#include "reramq/bch.hpp"
#include "reramq/channel.hpp"
#include "reramq/experiments.hpp"
#include "reramq/io.hpp"
#include "reramq/map_detector.hpp"
#include "reramq/math_util.hpp"
#include "reramq/quantizer.hpp"
#include "reramq/threshold.hpp"
