// Copyright 2026 The slaterl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Everything in one include.

#pragma once

#include "slaterl/cli/commands.hpp"
#include "slaterl/cli/config.hpp"
#include "slaterl/cli/env_server.hpp"
#include "slaterl/core/catalog.hpp"
#include "slaterl/core/error.hpp"
#include "slaterl/core/optim.hpp"
#include "slaterl/core/random.hpp"
#include "slaterl/core/stats.hpp"
#include "slaterl/core/text.hpp"
#include "slaterl/cpe/estimators.hpp"
#include "slaterl/cpe/report.hpp"
#include "slaterl/cpe/trajectory.hpp"
#include "slaterl/logged_data/feedback.hpp"
#include "slaterl/logged_data/log_format.hpp"
#include "slaterl/logged_data/mdp.hpp"
#include "slaterl/logged_data/session.hpp"
#include "slaterl/logged_data/split.hpp"
#include "slaterl/policies/batch_q.hpp"
#include "slaterl/policies/bc.hpp"
#include "slaterl/policies/checkpoint.hpp"
#include "slaterl/policies/evaluate.hpp"
#include "slaterl/policies/policy.hpp"
#include "slaterl/policies/reinforce.hpp"
#include "slaterl/slate_env/env.hpp"
#include "slaterl/slate_env/episode.hpp"
#include "slaterl/slate_env/response_model.hpp"
#include "slaterl/synth/oracle.hpp"
#include "slaterl/synth/simulate.hpp"
#include "slaterl/synth/world.hpp"
#include "slaterl/understanding/decode.hpp"
#include "slaterl/understanding/report.hpp"
#include "slaterl/understanding/seq_model.hpp"
#include "slaterl/user_model/features.hpp"
#include "slaterl/user_model/metrics.hpp"
#include "slaterl/user_model/model.hpp"
#include "slaterl/user_model/value_model.hpp"
