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

#include "noma/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace noma;

// Published Philox4x32-10 known-answer vectors (Random123 kat_vectors).
TEST(Philox, KnownAnswerVectors) {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    EXPECT_EQ(Philox::block(A4{0, 0, 0, 0}, A2{0, 0}), (A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox::block(A4{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, A2{0xffffffffu, 0xffffffffu}),
              (A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox::block(A4{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, A2{0xa4093822u, 0x299f31d0u}),
              (A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, SameSeedAndStreamReproduce) {
    Philox a(42, 7), b(42, 7), c(42, 8);
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        differs |= x != c.next_u64();
    }
    EXPECT_TRUE(differs);
}

TEST(Philox, UniformRangesAndMoments) {
    Philox r(1);
    double sum = 0.0, sum_n = 0.0, sum_n2 = 0.0, sum_e = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double o = r.uniform_open();
        ASSERT_GT(o, 0.0);
        ASSERT_LE(o, 1.0);
        sum += u;
        const double z = r.normal();
        sum_n += z;
        sum_n2 += z * z;
        sum_e += r.exponential();
    }
    // 5-sigma bands on the sample means.
    EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(sum_n / n, 0.0, 5 * std::sqrt(1.0 / n));
    EXPECT_NEAR(sum_n2 / n, 1.0, 5 * std::sqrt(2.0 / n));
    EXPECT_NEAR(sum_e / n, 1.0, 5 * std::sqrt(1.0 / n));
}

TEST(Philox, BelowCoversRangeUniformly) {
    Philox r(3);
    int counts[6] = {};
    const int n = 60000;
    for (int i = 0; i < n; ++i) {
        const auto k = r.below(6);
        ASSERT_LT(k, 6u);
        ++counts[k];
    }
    for (int c : counts) EXPECT_NEAR(c, n / 6.0, 5 * std::sqrt(n / 6.0));
}

TEST(Philox, StreamIdsDistinct) {
    std::set<std::uint64_t> ids;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        ids.insert(stream_id("instance", i));
        ids.insert(stream_id("batch", i));
    }
    EXPECT_EQ(ids.size(), 2000u);
}
