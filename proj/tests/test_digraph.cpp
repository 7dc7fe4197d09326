#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "consim/digraph.hpp"
#include "consim/rng.hpp"
#include "oracles.hpp"

using namespace consim;
using Catch::Approx;

namespace {

Digraph chain3() {
    // 0 -> 1 -> 2 (information flow), unit weights
    Digraph g(3);
    g.add_edge(1, 0, 1.0);
    g.add_edge(2, 1, 1.0);
    return g;
}

Digraph cycle3() {
    Digraph g(3);
    g.add_edge(1, 0, 1.0);
    g.add_edge(2, 1, 1.0);
    g.add_edge(0, 2, 1.0);
    return g;
}

Digraph two_sources() {
    // 0 -> 1 <- 2
    Digraph g(3);
    g.add_edge(1, 0, 1.0);
    g.add_edge(1, 2, 1.0);
    return g;
}

double gamma_residual(const LaplacianBundle& bundle) {
    const std::vector<double> row = bundle.laplacian.left_multiply(bundle.gamma);
    double worst = 0.0;
    for (double v : row) worst = std::max(worst, std::abs(v));
    return worst;
}

} // namespace

TEST_CASE("digraph construction from channels", "[digraph]") {
    SECTION("single-path channel becomes one weighted edge") {
        const NetworkModel net = make_network(2, {make_channel(1, 0, {{1.0, 0.0}})});
        const Digraph g = build_digraph(net);
        REQUIRE(g.edges().size() == 1);
        CHECK(g.has_edge(1, 0));
        CHECK_FALSE(g.has_edge(0, 1));
        CHECK(g.weight(1, 0) == 1.0);
    }

    SECTION("edge weight is the summed path gain, equal to H(0)") {
        const MultipathChannel ch = make_channel(1, 0, {{1.0, 0.0}, {-0.3, 0.01}});
        const NetworkModel net = make_network(2, {ch});
        const Digraph g = build_digraph(net);
        CHECK(g.weight(1, 0) == Approx(0.7).margin(1e-15));
        CHECK(g.weight(1, 0) == frequency_response(ch, 0.0).real());
    }

    SECTION("seeded generator weights are reproduced by the amplitude sum") {
        ChannelModelParams params;
        params.mean_amplitude = 1.0;
        params.fading_sigma = 0.5;
        params.path_count = 5;
        params.sample_time = 0.01;
        params.delay_spread = 0.05;
        params.propagation_speed = 100.0;
        params.seed = 42;
        const NetworkModel net =
            generate_network({{0.0, 0.0}, {3.0, 4.0}}, {{1, 0}, {0, 1}}, params);
        const Digraph g = build_digraph(net);
        for (const MultipathChannel& ch : net.channels) {
            double expected = 0.0;
            for (const Path& p : ch.paths) expected += p.amplitude;
            CHECK(g.weight(ch.receiver, ch.transmitter) == expected);
        }
    }

    SECTION("self-loops are rejected") {
        CHECK_THROWS_AS(make_channel(1, 1, {{1.0, 0.0}}), std::invalid_argument);
        Digraph g(3);
        CHECK_THROWS_AS(g.add_edge(2, 2, 1.0), std::invalid_argument);
    }

    SECTION("non-finite weights are rejected") {
        Digraph g(2);
        CHECK_THROWS_AS(g.add_edge(0, 1, std::nan("")), std::invalid_argument);
    }
}

TEST_CASE("scc decomposition", "[digraph]") {
    SECTION("a directed cycle is one component and its own root") {
        const SccDecomposition scc = scc_decompose(cycle3());
        REQUIRE(scc.components.size() == 1);
        CHECK(scc.components[0] == std::vector<int>{0, 1, 2});
        REQUIRE(scc.root_component.has_value());
        CHECK(*scc.root_component == scc.component_of[0]);
    }

    SECTION("a chain condenses to a path rooted at the head") {
        const SccDecomposition scc = scc_decompose(chain3());
        REQUIRE(scc.components.size() == 3);
        REQUIRE(scc.root_component.has_value());
        CHECK(scc.components[*scc.root_component] == std::vector<int>{0});
        CHECK(scc.condensation_edges.size() == 2);
        CHECK(oracles::root_set_bruteforce(chain3()) == std::vector<int>{0});
    }

    SECTION("two sources leave the root component absent") {
        const SccDecomposition scc = scc_decompose(two_sources());
        REQUIRE(scc.components.size() == 3);
        CHECK_FALSE(scc.root_component.has_value());
        CHECK(oracles::root_set_bruteforce(two_sources()).empty());
    }

    SECTION("condensation edges are deduplicated") {
        // two 2-cycles joined by two parallel inter-component links
        Digraph g(4);
        g.add_edge(1, 0, 1.0);
        g.add_edge(0, 1, 1.0);
        g.add_edge(3, 2, 1.0);
        g.add_edge(2, 3, 1.0);
        g.add_edge(2, 0, 1.0);
        g.add_edge(3, 1, 1.0);
        const SccDecomposition scc = scc_decompose(g);
        REQUIRE(scc.components.size() == 2);
        CHECK(scc.condensation_edges.size() == 1);
    }

    SECTION("components partition the nodes") {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            const Digraph g = oracles::random_digraph(7, 0.25, seed);
            const SccDecomposition scc = scc_decompose(g);
            std::vector<int> seen;
            for (const auto& comp : scc.components)
                for (int v : comp) {
                    seen.push_back(v);
                    CHECK(scc.component_of[v] == &comp - scc.components.data());
                }
            std::sort(seen.begin(), seen.end());
            std::vector<int> all(7);
            for (int i = 0; i < 7; ++i) all[i] = i;
            CHECK(seen == all);
        }
    }
}

TEST_CASE("qsc and sc classification", "[digraph]") {
    CHECK(is_qsc(chain3()));
    CHECK_FALSE(is_sc(chain3()));
    CHECK(is_qsc(cycle3()));
    CHECK(is_sc(cycle3()));
    CHECK_FALSE(is_qsc(two_sources()));

    SECTION("matches brute-force reachability on random digraphs") {
        int qsc_seen = 0;
        int sc_seen = 0;
        for (int n = 2; n <= 8; ++n) {
            for (std::uint64_t seed = 0; seed < 40; ++seed) {
                const double prob = 0.05 + 0.05 * static_cast<double>(seed % 8);
                const Digraph g = oracles::random_digraph(n, prob, 1000 * n + seed);
                const bool qsc = is_qsc(g);
                const bool sc = is_sc(g);
                CHECK(qsc == oracles::qsc_bruteforce(g));
                CHECK(sc == oracles::sc_bruteforce(g));
                if (sc) CHECK(qsc); // SC implies QSC
                qsc_seen += qsc;
                sc_seen += sc;
            }
        }
        // the sweep actually exercised both classes
        CHECK(qsc_seen > 20);
        CHECK(sc_seen > 10);
    }
}

TEST_CASE("laplacian bundle and gamma", "[digraph]") {
    SECTION("balanced cycle gives uniform gamma") {
        const LaplacianBundle bundle = laplacian(cycle3());
        for (int i = 0; i < 3; ++i) CHECK(bundle.gamma[i] == Approx(1.0 / 3.0).margin(1e-14));
        CHECK(gamma_residual(bundle) <= 1e-10 * bundle.laplacian.inf_norm());
    }

    SECTION("chain concentrates gamma on the root") {
        const LaplacianBundle bundle = laplacian(chain3());
        CHECK(bundle.gamma[0] == 1.0);
        CHECK(bundle.gamma[1] == 0.0);
        CHECK(bundle.gamma[2] == 0.0);
    }

    SECTION("asymmetric 2-node null space solved by hand") {
        // node 1 hears node 0 with weight 2, node 0 hears node 1 with weight 1
        Digraph g(2);
        g.add_edge(1, 0, 2.0);
        g.add_edge(0, 1, 1.0);
        const LaplacianBundle bundle = laplacian(g);
        CHECK(bundle.gamma[0] == Approx(2.0 / 3.0).margin(1e-14));
        CHECK(bundle.gamma[1] == Approx(1.0 / 3.0).margin(1e-14));
    }

    SECTION("D is the row sum of A and L rows sum to zero") {
        for (std::uint64_t seed = 0; seed < 30; ++seed) {
            const Digraph g = oracles::random_digraph(6, 0.4, 500 + seed);
            if (!is_qsc(g)) continue;
            const LaplacianBundle bundle = laplacian(g);
            const double scale = std::max(1.0, bundle.laplacian.inf_norm());
            for (int i = 0; i < 6; ++i) {
                double a_row = 0.0;
                double l_row = 0.0;
                for (int j = 0; j < 6; ++j) {
                    a_row += bundle.adjacency(i, j);
                    l_row += bundle.laplacian(i, j);
                }
                CHECK(bundle.in_degree[i] == a_row);
                CHECK(std::abs(l_row) <= 1e-14 * scale);
            }
        }
    }

    SECTION("gamma matches a dense long-double null-space solve") {
        int tested = 0;
        for (int n = 2; n <= 8; ++n) {
            for (std::uint64_t seed = 0; seed < 60 && tested < 80; ++seed) {
                const Digraph g = oracles::random_digraph(n, 0.3, 77 * n + seed);
                if (!oracles::qsc_bruteforce(g)) continue;
                ++tested;
                const LaplacianBundle bundle = laplacian(g);

                CHECK(gamma_residual(bundle) <= 1e-10 * bundle.laplacian.inf_norm());

                const std::vector<double> expected = oracles::gamma_dense_oracle(g);
                for (int i = 0; i < n; ++i)
                    CHECK(bundle.gamma[i] == Approx(expected[i]).margin(1e-10));

                // support is exactly the brute-force root set
                const std::vector<int> roots = oracles::root_set_bruteforce(g);
                for (int i = 0; i < n; ++i) {
                    const bool in_root = std::find(roots.begin(), roots.end(), i) != roots.end();
                    CHECK((bundle.gamma[i] > 0.0) == in_root);
                }

                double sum = 0.0;
                for (double v : bundle.gamma) sum += v;
                CHECK(sum == Approx(1.0).margin(1e-12));
            }
        }
        REQUIRE(tested >= 40);
    }

    SECTION("non-QSC input raises NonQscError carrying the decomposition") {
        try {
            laplacian(two_sources());
            FAIL("expected NonQscError");
        } catch (const NonQscError& e) {
            CHECK(e.decomposition.components.size() == 3);
            CHECK_FALSE(e.decomposition.root_component.has_value());
        }
    }

    SECTION("scaling all weights leaves gamma and the flags unchanged") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Digraph g = oracles::random_digraph(6, 0.35, 900 + seed);
            Digraph scaled(6);
            for (const DirectedEdge& e : g.edges())
                scaled.add_edge(e.receiver, e.transmitter, 7.25 * e.weight);

            CHECK(is_qsc(g) == is_qsc(scaled));
            CHECK(is_sc(g) == is_sc(scaled));
            const SccDecomposition a = scc_decompose(g);
            const SccDecomposition b = scc_decompose(scaled);
            CHECK(a.component_of == b.component_of);

            if (!is_qsc(g)) continue;
            const LaplacianBundle bg = laplacian(g);
            const LaplacianBundle bs = laplacian(scaled);
            for (int i = 0; i < 6; ++i) CHECK(bs.gamma[i] == Approx(bg.gamma[i]).margin(1e-12));
        }
    }
}
