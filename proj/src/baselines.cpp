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

#include "noma/baselines.hpp"

#include "noma/errors.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <numeric>
#include <utility>

namespace noma {

namespace {

constexpr double kWorst = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SicOrdering sorted_desc(const NetworkInstance& inst, const std::vector<double>& key) {
    SicOrdering ord = SicOrdering::identity(inst);
    for (auto& blk : ord.per_bs())
        std::stable_sort(blk.begin(), blk.end(), [&](int a, int b) {
            return key[static_cast<std::size_t>(a)] > key[static_cast<std::size_t>(b)];
        });
    return ord;
}

BaselineResult single_shot(const NetworkInstance& inst, SicOrdering ord, const BaselineOptions& opt) {
    const auto t0 = Clock::now();
    Scored s = score_ordering(inst, ord, opt.solver);
    BaselineResult r;
    r.ordering = std::move(ord);
    r.utility = s.utility;
    r.p = std::move(s.p);
    r.solver_calls = 1;
    r.elapsed = seconds_since(t0);
    return r;
}

// Scores a list of candidate orders; index order is the tie-break order.
std::vector<Scored> score_all(const NetworkInstance& inst, const std::vector<SicOrdering>& cands,
                              const BaselineOptions& opt) {
    std::vector<Scored> out(cands.size());
    parallel_for(cands.size(), opt.exec, [&](std::size_t i) { out[i] = score_ordering(inst, cands[i], opt.solver); });
    return out;
}

std::size_t best_index(const std::vector<Scored>& s) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].utility > s[best].utility) best = i;
    return best;
}

}  // namespace

Scored score_ordering(const NetworkInstance& inst, const SicOrdering& ord, const SolverOptions& opt) {
    try {
        SolverReport rep = solve_allocation(inst, ord, opt);
        if (!std::isfinite(rep.objective)) return {kWorst, std::move(rep.p)};
        return {rep.objective, std::move(rep.p)};
    } catch (const NumericalError&) {
        return {kWorst, {}};
    }
}

std::uint64_t exhaustive_calls(int n) {
    std::uint64_t f = 1;
    for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
    return f;
}

std::uint64_t tabu_calls(int n, int iterations) {
    return 1 + static_cast<std::uint64_t>(iterations) * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
}

std::uint64_t meta_calls(int n) { return static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n + 1) / 2; }

SicOrdering weight_descending_order(const NetworkInstance& inst) {
    std::vector<double> w(inst.size());
    for (std::size_t n = 0; n < inst.size(); ++n) w[n] = inst.users[n].weight;
    return sorted_desc(inst, w);
}

SicOrdering channel_descending_order(const NetworkInstance& inst) {
    std::vector<double> g(inst.size());
    for (std::size_t n = 0; n < inst.size(); ++n) g[n] = effective_gain(inst.users[n]);
    return sorted_desc(inst, g);
}

BaselineResult weight_descending(const NetworkInstance& inst, const BaselineOptions& opt) {
    return single_shot(inst, weight_descending_order(inst), opt);
}

BaselineResult channel_descending(const NetworkInstance& inst, const BaselineOptions& opt) {
    return single_shot(inst, channel_descending_order(inst), opt);
}

BaselineResult exhaustive(const NetworkInstance& inst, const BaselineOptions& opt) {
    if (inst.size() > opt.exhaustive_cap)
        throw ConfigError("exhaustive search refused: N=" + std::to_string(inst.size()) + " exceeds the cap of " +
                          std::to_string(opt.exhaustive_cap));
    const auto t0 = Clock::now();
    // Enumerate the product of per-BS permutations in lexicographic order.
    std::vector<SicOrdering> cands;
    SicOrdering cur = SicOrdering::identity(inst);
    for (;;) {
        cands.push_back(cur);
        auto& blocks = cur.per_bs();
        std::size_t b = blocks.size();
        bool advanced = false;
        while (b-- > 0) {
            if (std::next_permutation(blocks[b].begin(), blocks[b].end())) {
                advanced = true;
                break;
            }
            // next_permutation wrapped this block back to sorted; carry.
        }
        if (!advanced) break;
    }
    const std::vector<Scored> scores = score_all(inst, cands, opt);
    const std::size_t best = best_index(scores);
    BaselineResult r;
    r.ordering = cands[best];
    r.utility = scores[best].utility;
    r.p = scores[best].p;
    r.solver_calls = cands.size();
    r.elapsed = seconds_since(t0);
    return r;
}

BaselineResult tabu_search(const NetworkInstance& inst, const BaselineOptions& opt) {
    if (opt.tabu_iterations < 1) throw ConfigError("tabu search needs at least one iteration");
    const auto t0 = Clock::now();
    const std::size_t tenure = opt.tabu_tenure > 0 ? static_cast<std::size_t>(opt.tabu_tenure) : inst.size();

    SicOrdering cur = channel_descending_order(inst);
    Scored cur_s = score_ordering(inst, cur, opt.solver);
    std::uint64_t calls = 1;
    SicOrdering best = cur;
    Scored best_s = cur_s;

    // Swap moves as (block, i, j) positions; the tabu attribute is the user pair.
    std::deque<std::pair<int, int>> tabu;
    auto is_tabu = [&](int a, int b) {
        const auto key = std::minmax(a, b);
        return std::find(tabu.begin(), tabu.end(), std::pair<int, int>(key.first, key.second)) != tabu.end();
    };

    for (int it = 0; it < opt.tabu_iterations; ++it) {
        std::vector<SicOrdering> neigh;
        std::vector<std::pair<int, int>> moved;
        for (std::size_t b = 0; b < cur.per_bs().size(); ++b) {
            const auto& blk = cur.per_bs()[b];
            for (std::size_t i = 0; i < blk.size(); ++i)
                for (std::size_t j = i + 1; j < blk.size(); ++j) {
                    SicOrdering nb = cur;
                    std::swap(nb.per_bs()[b][i], nb.per_bs()[b][j]);
                    neigh.push_back(std::move(nb));
                    moved.emplace_back(blk[i], blk[j]);
                }
        }
        if (neigh.empty()) break;
        const std::vector<Scored> scores = score_all(inst, neigh, opt);
        calls += neigh.size();

        std::size_t pick = neigh.size();
        for (std::size_t k = 0; k < neigh.size(); ++k) {
            const bool allowed = !is_tabu(moved[k].first, moved[k].second) ||
                                 (opt.tabu_aspiration && scores[k].utility > best_s.utility);
            if (!allowed) continue;
            if (pick == neigh.size() || scores[k].utility > scores[pick].utility) pick = k;
        }
        if (pick == neigh.size()) continue;  // every move tabu; stay put this round

        cur = neigh[pick];
        cur_s = scores[pick];
        const auto key = std::minmax(moved[pick].first, moved[pick].second);
        tabu.emplace_back(key.first, key.second);
        while (tabu.size() > tenure) tabu.pop_front();
        if (cur_s.utility > best_s.utility) {
            best = cur;
            best_s = cur_s;
        }
    }

    BaselineResult r;
    r.ordering = std::move(best);
    r.utility = best_s.utility;
    r.p = std::move(best_s.p);
    r.solver_calls = calls;
    r.elapsed = seconds_since(t0);
    return r;
}

NetworkInstance restrict_instance(const NetworkInstance& inst, const std::vector<int>& users) {
    NetworkInstance sub;
    sub.noise = inst.noise;
    sub.bandwidth = inst.bandwidth;
    sub.scenario = inst.scenario;
    for (int n : users) sub.users.push_back(inst.users.at(static_cast<std::size_t>(n)));
    return sub;
}

BaselineResult meta_scheduling(const NetworkInstance& inst, const BaselineOptions& opt) {
    const auto t0 = Clock::now();
    std::vector<int> order = opt.insertion_order;
    if (order.empty()) {
        order.resize(inst.size());
        std::iota(order.begin(), order.end(), 0);
    }
    {
        std::vector<int> check = order;
        std::sort(check.begin(), check.end());
        for (std::size_t i = 0; i < check.size(); ++i)
            if (check.size() != inst.size() || check[i] != static_cast<int>(i))
                throw ConfigError("meta-scheduling insertion order must be a permutation of the users");
    }

    const int stations = inst.station_count();
    // Partial order in original user ids, per BS.
    std::vector<std::vector<int>> partial(static_cast<std::size_t>(stations));
    std::vector<int> inserted;
    std::uint64_t calls = 0;
    Scored last{kWorst, {}};

    for (int user : order) {
        inserted.push_back(user);
        std::vector<int> members = inserted;
        std::sort(members.begin(), members.end());
        const NetworkInstance sub = restrict_instance(inst, members);
        std::vector<int> local(inst.size(), -1);
        for (std::size_t i = 0; i < members.size(); ++i) local[static_cast<std::size_t>(members[i])] = static_cast<int>(i);

        const auto b = static_cast<std::size_t>(inst.users[static_cast<std::size_t>(user)].bs);
        std::vector<std::vector<std::vector<int>>> trials;
        std::vector<SicOrdering> cands;
        for (std::size_t pos = 0; pos <= partial[b].size(); ++pos) {
            auto trial = partial;
            trial[b].insert(trial[b].begin() + static_cast<std::ptrdiff_t>(pos), user);
            std::vector<std::vector<int>> mapped(static_cast<std::size_t>(stations));
            for (std::size_t s = 0; s < trial.size(); ++s)
                for (int u : trial[s]) mapped[s].push_back(local[static_cast<std::size_t>(u)]);
            trials.push_back(std::move(trial));
            cands.emplace_back(std::move(mapped));
        }
        const std::vector<Scored> scores = score_all(sub, cands, opt);
        calls += cands.size();
        const std::size_t best = best_index(scores);
        partial = trials[best];
        last = scores[best];
    }

    BaselineResult r;
    r.ordering = SicOrdering(partial);
    r.utility = last.utility;
    // The final sub-instance is the whole instance with users sorted by id,
    // so the powers are already in instance order.
    r.p = std::move(last.p);
    r.solver_calls = calls;
    r.elapsed = seconds_since(t0);
    return r;
}

bool is_baseline_name(const std::string& algo) {
    return algo == "exhaustive" || algo == "tabu" || algo == "meta" || algo == "wdesc" || algo == "cdesc";
}

BaselineResult run_baseline(const std::string& algo, const NetworkInstance& inst, const BaselineOptions& opt) {
    if (algo == "exhaustive") return exhaustive(inst, opt);
    if (algo == "tabu") return tabu_search(inst, opt);
    if (algo == "meta") return meta_scheduling(inst, opt);
    if (algo == "wdesc") return weight_descending(inst, opt);
    if (algo == "cdesc") return channel_descending(inst, opt);
    throw ConfigError("unknown baseline '" + algo + "' (expected exhaustive|tabu|meta|wdesc|cdesc)");
}

}  // namespace noma
