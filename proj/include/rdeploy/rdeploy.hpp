// Copyright 2026 The rdeploy Authors
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

#ifndef RDEPLOY_RDEPLOY_HPP_
#define RDEPLOY_RDEPLOY_HPP_

#include "rdeploy/actions.hpp"
#include "rdeploy/cli.hpp"
#include "rdeploy/event_log.hpp"
#include "rdeploy/failure.hpp"
#include "rdeploy/json_io.hpp"
#include "rdeploy/lifecycle.hpp"
#include "rdeploy/model.hpp"
#include "rdeploy/orchestrator.hpp"
#include "rdeploy/planner.hpp"
#include "rdeploy/simnet.hpp"
#include "rdeploy/simulation.hpp"

#endif  // RDEPLOY_RDEPLOY_HPP_
