// Copyright 2026 The dprw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "dprw/autoencoder.hpp"
#include "dprw/checkpoint.hpp"
#include "dprw/cli.hpp"
#include "dprw/corpus.hpp"
#include "dprw/downstream.hpp"
#include "dprw/dpmech.hpp"
#include "dprw/error.hpp"
#include "dprw/metrics.hpp"
#include "dprw/numcore.hpp"
#include "dprw/pipeline.hpp"
#include "dprw/rng.hpp"
#include "dprw/synthetic.hpp"
