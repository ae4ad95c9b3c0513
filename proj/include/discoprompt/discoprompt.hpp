#pragma once

#include "discoprompt/backends.hpp"
#include "discoprompt/corpus.hpp"
#include "discoprompt/error.hpp"
#include "discoprompt/evaluation.hpp"
#include "discoprompt/hierarchy.hpp"
#include "discoprompt/instance.hpp"
#include "discoprompt/pipeline.hpp"
#include "discoprompt/prior.hpp"
#include "discoprompt/prompting.hpp"
#include "discoprompt/role.hpp"
#include "discoprompt/scoring.hpp"
