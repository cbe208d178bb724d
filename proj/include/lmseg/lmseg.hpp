#pragma once

#include "lmseg/baselines.hpp"
#include "lmseg/corpus.hpp"
#include "lmseg/error.hpp"
#include "lmseg/evaluation.hpp"
#include "lmseg/features.hpp"
#include "lmseg/model_io.hpp"
#include "lmseg/morphotags.hpp"
#include "lmseg/optimize.hpp"
#include "lmseg/semicrf.hpp"
#include "lmseg/synth.hpp"
#include "lmseg/training.hpp"
#include "lmseg/unicode.hpp"
