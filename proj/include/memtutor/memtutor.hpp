#pragma once

#include "memtutor/adam.hpp"
#include "memtutor/config.hpp"
#include "memtutor/csv.hpp"
#include "memtutor/experiment.hpp"
#include "memtutor/fit.hpp"
#include "memtutor/gae.hpp"
#include "memtutor/gru.hpp"
#include "memtutor/history.hpp"
#include "memtutor/item_bank.hpp"
#include "memtutor/loss.hpp"
#include "memtutor/memory_model.hpp"
#include "memtutor/observation.hpp"
#include "memtutor/params.hpp"
#include "memtutor/plot.hpp"
#include "memtutor/ppo.hpp"
#include "memtutor/pretrain.hpp"
#include "memtutor/priors.hpp"
#include "memtutor/rl_tutor.hpp"
#include "memtutor/rng.hpp"
#include "memtutor/rollout.hpp"
#include "memtutor/sanity.hpp"
#include "memtutor/schedule.hpp"
#include "memtutor/tutors.hpp"
#include "memtutor/window_counts.hpp"
