#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "wsched/scheduling_policies.hpp"

using namespace wsched;

namespace {

ConflictGraph path3() {
    const std::pair<UserId, UserId> e[] = {{0, 1}, {1, 2}};
    return ConflictGraph(3, e);
}

std::vector<UserId> v(std::initializer_list<UserId> l) { return l; }

struct RandomInstance {
    ConflictGraph graph;
    oracle::Adj adj;
};

RandomInstance random_graph(std::mt19937& rng, int n, double density) {
    std::vector<std::pair<UserId, UserId>> edges;
    oracle::Adj adj(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n), false));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::bernoulli_distribution(density)(rng)) {
                edges.emplace_back(i, j);
                adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
                adj[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = true;
            }
    return {ConflictGraph(n, edges), std::move(adj)};
}

std::uint32_t mask_of(const ActiveSet& s) {
    std::uint32_t m = 0;
    for (UserId u : s) m |= 1U << u;
    return m;
}

}  // namespace

TEST_CASE("index activation on a path") {
    const auto g = path3();
    const std::vector<double> idx{0.1, 0.5, 0.2};
    SUBCASE("local minima transmit") {
        const std::vector<QueueState> x{5, 5, 5};
        const auto d = whittle_activation(idx, x, g);
        CHECK(d.active_set == v({0, 2}));
        CHECK(d.rounds >= 1);
    }
    SUBCASE("empty queue stays passive") {
        const std::vector<QueueState> x{0, 5, 5};
        CHECK(whittle_activation(idx, x, g).active_set == v({2}));
    }
    SUBCASE("ties go to the smaller id") {
        const std::vector<double> tie{0.3, 0.3, 0.3};
        const std::vector<QueueState> x{1, 1, 1};
        CHECK(whittle_activation(tie, x, g).active_set == v({0, 2}));
        const std::pair<UserId, UserId> e[] = {{0, 1}};
        const ConflictGraph pair(2, e);
        const std::vector<double> t2{0.3, 0.3};
        const std::vector<QueueState> x2{1, 1};
        CHECK(whittle_activation(t2, x2, pair).active_set == v({0}));
    }
    SUBCASE("all queues empty") {
        const std::vector<QueueState> x{0, 0, 0};
        CHECK(whittle_activation(idx, x, g).active_set.empty());
    }
    SUBCASE("nan index on an eligible user is rejected") {
        const std::vector<double> bad{0.1, std::nan(""), 0.2};
        const std::vector<QueueState> x{1, 1, 1};
        CHECK_THROWS(whittle_activation(bad, x, g));
    }
}

TEST_CASE("index activation properties on random instances") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 1 + trial % 12;
        const auto inst = random_graph(rng, n, std::uniform_real_distribution<double>(0.0, 0.9)(rng));
        std::vector<double> idx(static_cast<std::size_t>(n));
        std::vector<QueueState> x(static_cast<std::size_t>(n));
        std::uint32_t eligible = 0;
        for (int i = 0; i < n; ++i) {
            idx[static_cast<std::size_t>(i)] = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
            if (trial % 5 == 0) idx[static_cast<std::size_t>(i)] = std::round(idx[static_cast<std::size_t>(i)]);
            x[static_cast<std::size_t>(i)] = std::uniform_int_distribution<int>(0, 3)(rng);
            if (x[static_cast<std::size_t>(i)] > 0) eligible |= 1U << i;
        }
        const auto d = whittle_activation(idx, x, inst.graph);
        const auto m = mask_of(d.active_set);
        CHECK(std::is_sorted(d.active_set.begin(), d.active_set.end()));
        CHECK(oracle::independent(inst.adj, m));
        CHECK(oracle::maximal(inst.adj, m, eligible));
        CHECK((m & ~eligible) == 0U);
        CHECK(d.rounds <= n);

        // strictly increasing transform preserves the decision
        std::vector<double> moved(idx);
        for (double& l : moved) l = 3.0 * l + 7.0;
        CHECK(whittle_activation(moved, x, inst.graph).active_set == d.active_set);
    }
}

TEST_CASE("aloha") {
    const auto g = path3();
    Rng rng = make_stream(1, StreamTag::aloha);
    const std::vector<QueueState> full{3, 3, 3};
    SUBCASE("everyone attempting collides in the middle") {
        const std::vector<double> p{1.0, 1.0, 1.0};
        const auto o = aloha_select(full, g, p, rng);
        CHECK(o.attempts == v({0, 1, 2}));
        CHECK(o.successes.empty());
    }
    SUBCASE("p = 0 never attempts") {
        const std::vector<double> p{0.0, 0.0, 0.0};
        CHECK(aloha_select(full, g, p, rng).attempts.empty());
    }
    SUBCASE("empty queues never attempt") {
        const std::vector<double> p{1.0, 1.0, 1.0};
        const std::vector<QueueState> x{0, 0, 4};
        const auto o = aloha_select(x, g, p, rng);
        CHECK(o.attempts == v({2}));
        CHECK(o.successes == v({2}));
    }
    SUBCASE("auto probabilities") {
        CHECK(aloha_auto_probabilities(g) == std::vector<double>{0.5, 1.0 / 3.0, 0.5});
    }
    SUBCASE("attempt frequency matches p") {
        const ConflictGraph lone(1, std::span<const std::pair<UserId, UserId>>{});
        const std::vector<double> p{0.3};
        const std::vector<QueueState> x{1};
        const int n = 100'000;
        int hits = 0;
        for (int k = 0; k < n; ++k) hits += static_cast<int>(aloha_select(x, lone, p, rng).successes.size());
        CHECK(std::abs(hits / static_cast<double>(n) - 0.3) < 4.0 * std::sqrt(0.21 / n));
    }
    SUBCASE("successes are an independent subset of attempts") {
        std::mt19937 gen(5);
        for (int trial = 0; trial < 300; ++trial) {
            const int n = 2 + trial % 10;
            const auto inst = random_graph(gen, n, 0.4);
            std::vector<QueueState> x(static_cast<std::size_t>(n));
            for (auto& q : x) q = std::uniform_int_distribution<int>(0, 2)(gen);
            const auto o = aloha_select(x, inst.graph, aloha_auto_probabilities(inst.graph), rng);
            CHECK(std::includes(o.attempts.begin(), o.attempts.end(), o.successes.begin(), o.successes.end()));
            CHECK(oracle::independent(inst.adj, mask_of(o.successes)));
        }
    }
}

TEST_CASE("max-weight selection") {
    const auto g = path3();
    const std::vector<QueueState> x{5, 10, 4};
    const std::vector<UserParams> ps(3);
    CHECK(mws_select(x, ps, g, SetSelection::greedy).active_set == v({1}));
    CHECK(mws_select(x, ps, g, SetSelection::exact).active_set == v({1}));

    // greedy is not optimal here, exact is
    const std::vector<QueueState> y{6, 10, 6};
    CHECK(mws_select(y, ps, g, SetSelection::greedy).active_set == v({1}));
    CHECK(mws_select(y, ps, g, SetSelection::exact).active_set == v({0, 2}));

    SUBCASE("exact agrees with brute force") {
        std::mt19937 rng(8);
        for (int trial = 0; trial < 300; ++trial) {
            const int n = 1 + trial % 14;
            const auto inst = random_graph(rng, n, 0.3);
            std::vector<double> w(static_cast<std::size_t>(n));
            for (auto& a : w) a = std::uniform_int_distribution<int>(0, 20)(rng);
            const auto s = max_weight_independent_set(w, inst.graph, SetSelection::exact);
            double total = 0.0;
            for (UserId u : s) total += w[static_cast<std::size_t>(u)];
            CHECK(oracle::independent(inst.adj, mask_of(s)));
            CHECK(total == oracle::max_independent_weight(inst.adj, w));
            const auto gs = max_weight_independent_set(w, inst.graph, SetSelection::greedy);
            CHECK(oracle::independent(inst.adj, mask_of(gs)));
        }
    }
    SUBCASE("exact mode refuses large instances") {
        const auto big = ConflictGraph::generate_geometric(50, 0.6, 1);
        const std::vector<double> w(50, 1.0);
        CHECK_THROWS(max_weight_independent_set(w, big, SetSelection::exact));
        CHECK_NOTHROW(max_weight_independent_set(w, big, SetSelection::exact, 64));
        CHECK_THROWS(max_weight_independent_set(w, big, SetSelection::exact, 65));
    }
    SUBCASE("weight names round trip") {
        CHECK(mws_weight_from_string(to_string(MwsWeight::queue_times_service)) == MwsWeight::queue_times_service);
        CHECK(set_selection_from_string("exact") == SetSelection::exact);
        CHECK_THROWS(set_selection_from_string("fast"));
    }
}

TEST_CASE("lyapunov score") {
    UserParams p;
    p.tx_cap = 10;
    CHECK(lyapunov_score(50, p, 200.0) == -1500.0);
    CHECK(lyapunov_score(50, p, 20.0) == 300.0);
    CHECK(lyapunov_score(50, p, 0.0) == 500.0);

    const auto g = path3();
    const std::vector<UserParams> ps(3, p);
    const std::vector<QueueState> x{50, 50, 50};
    CHECK(lyapunov_select(x, ps, g, 200.0, SetSelection::greedy).active_set.empty());
    CHECK(lyapunov_select(x, ps, g, 20.0, SetSelection::exact).active_set == v({0, 2}));
}

TEST_CASE("policy objects") {
    const auto g = path3();
    const std::vector<UserParams> ps(3);
    const std::vector<QueueState> x{5, 10, 4};
    const SlotContext ctx{0, x, g, ps};

    SUBCASE("stationary index policy reads the table at the current state") {
        std::vector<std::vector<double>> rows(3, std::vector<double>(100));
        for (auto& r : rows)
            for (std::size_t k = 0; k < r.size(); ++k) r[k] = -static_cast<double>(k);  // longer queue, lower index
        StationaryWhittlePolicy pol(IndexVariant::type1, IndexTable(rows));
        CHECK(pol.decide(ctx).transmitting == v({1}));
        CHECK(pol.name() == "stationary_type1");
    }
    SUBCASE("non-stationary lambdas move only for nonempty queues") {
        auto cache = std::make_shared<ThresholdSolutionCache>(std::vector<UserParams>(ps));
        NonStationaryWhittlePolicy pol(IndexVariant::type2, 0.05, cache);
        const std::vector<QueueState> y{0, 3, 0};
        const SlotContext c{0, y, g, ps};
        const auto d = pol.decide(c);
        CHECK(d.transmitting == v({1}));
        CHECK(pol.lambdas()[0] == 0.0);
        CHECK(pol.lambdas()[2] == 0.0);
        CHECK(pol.lambdas()[1] != 0.0);
    }
    SUBCASE("external policies are validated") {
        ExternalPolicy ok("ok", [](std::int64_t, std::span<const QueueState>, const ConflictGraph&) { return ActiveSet{0, 2}; });
        CHECK(ok.decide(ctx).served == v({0, 2}));
        ExternalPolicy clash("clash", [](std::int64_t, std::span<const QueueState>, const ConflictGraph&) { return ActiveSet{0, 1}; });
        CHECK_THROWS(clash.decide(ctx));
    }
    SUBCASE("registry") {
        auto& reg = ExternalPolicyRegistry::instance();
        CHECK(reg.contains("all_passive"));
        CHECK(reg.make("all_passive")(0, x, g).empty());
        CHECK_FALSE(reg.contains("nope"));
        CHECK_THROWS(reg.make("nope"));
    }
}
