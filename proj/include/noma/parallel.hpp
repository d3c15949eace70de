/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 The noma-sic contributors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>

namespace noma {

/// Execution policy for the data-parallel kernels. Every parallel kernel
/// has a serial counterpart that is kept as the reference implementation.
enum class Exec { serial, openmp };

/// Thread count honoured by the OpenMP kernels. Reads NOMA_THREADS once;
/// falls back to the OpenMP default.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Iterations must be independent.
void parallel_for(std::size_t n, Exec exec, const std::function<void(std::size_t)>& body);

}  // namespace noma
