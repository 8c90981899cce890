// Copyright 2026 The reupload Authors.
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


/// @file reup.hpp
/// Everything in one include.
#pragma once

#include "reup/analyze.hpp"
#include "reup/backend.hpp"
#include "reup/bfgs.hpp"
#include "reup/circuit.hpp"
#include "reup/config.hpp"
#include "reup/cost.hpp"
#include "reup/csv.hpp"
#include "reup/dataset.hpp"
#include "reup/ga.hpp"
#include "reup/gradient.hpp"
#include "reup/harness.hpp"
#include "reup/landscape.hpp"
#include "reup/mitigation.hpp"
#include "reup/objective.hpp"
#include "reup/parallel.hpp"
#include "reup/rng.hpp"
#include "reup/sgd.hpp"
#include "reup/trace.hpp"
