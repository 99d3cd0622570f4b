// Copyright 2026 The entronas Authors.
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

#include "entronas/arch.hpp"
#include "entronas/arch_io.hpp"
#include "entronas/config.hpp"
#include "entronas/cost.hpp"
#include "entronas/entropy.hpp"
#include "entronas/forward.hpp"
#include "entronas/mutation.hpp"
#include "entronas/rng.hpp"
#include "entronas/search.hpp"
#include "entronas/tensor.hpp"
