// Copyright 2026 The iterflow Authors. All Rights Reserved.
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

#pragma once

#include "iterflow/api.hpp"
#include "iterflow/digest.hpp"
#include "iterflow/dsl.hpp"
#include "iterflow/engine.hpp"
#include "iterflow/error.hpp"
#include "iterflow/flow.hpp"
#include "iterflow/graph.hpp"
#include "iterflow/materialize.hpp"
#include "iterflow/operators.hpp"
#include "iterflow/record.hpp"
#include "iterflow/recompute.hpp"
#include "iterflow/report.hpp"
#include "iterflow/value.hpp"
#include "iterflow/workspace.hpp"
