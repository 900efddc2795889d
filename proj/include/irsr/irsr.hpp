#pragma once

#include "irsr/d4.hpp"
#include "irsr/ensemble.hpp"
#include "irsr/error.hpp"
#include "irsr/image.hpp"
#include "irsr/leaderboard.hpp"
#include "irsr/manifest.hpp"
#include "irsr/metrics.hpp"
#include "irsr/model_runner.hpp"
#include "irsr/parallel.hpp"
#include "irsr/pipeline.hpp"
#include "irsr/png_io.hpp"
#include "irsr/report.hpp"
#include "irsr/resample.hpp"
#include "irsr/synth.hpp"
