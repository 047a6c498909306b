/*
 * Copyright 2026 The textpose Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "textpose/checkpoint.hpp"
#include "textpose/config.hpp"
#include "textpose/dataset.hpp"
#include "textpose/dsfr.hpp"
#include "textpose/encoders.hpp"
#include "textpose/experiments.hpp"
#include "textpose/grad_check.hpp"
#include "textpose/gradcheck_suite.hpp"
#include "textpose/hcmi.hpp"
#include "textpose/layers.hpp"
#include "textpose/losses.hpp"
#include "textpose/matcher.hpp"
#include "textpose/metrics.hpp"
#include "textpose/model.hpp"
#include "textpose/optim.hpp"
#include "textpose/params.hpp"
#include "textpose/rng.hpp"
#include "textpose/tensor.hpp"
#include "textpose/train.hpp"
