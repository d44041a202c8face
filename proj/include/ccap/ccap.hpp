#pragma once

#include "ccap/app/artifact.hpp"
#include "ccap/app/config.hpp"
#include "ccap/app/pipeline.hpp"
#include "ccap/app/search.hpp"
#include "ccap/app/synth.hpp"
#include "ccap/data/profile.hpp"
