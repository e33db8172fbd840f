#include <gtest/gtest.h>

#include <random>

#include <smjls/switching.hpp>

using namespace smjls;

namespace {

GraphSwitching example2_graph() {
    // 0 -> 0, 0 -> 1, 1 -> 0
    return GraphSwitching{{{0, 0}, {0, 1}, {1, 0}}};
}

Word W(std::vector<int> s) { return Word(std::move(s)); }

}  // namespace

TEST(WordTest, RendersOneBased) {
    EXPECT_EQ(to_string(W({0, 1, 0})), "(1,2,1)");
    EXPECT_EQ(to_string(Word{}), "()");
}

TEST(SwitchingTest, GraphWordsOfLengthTwo) {
    auto words = enumerate_words(example2_graph(), 2, 2);
    std::set<Word> expected{W({0, 0}), W({0, 1}), W({1, 0})};
    EXPECT_EQ(words, expected);
}

TEST(SwitchingTest, LengthZeroIsSingletonEmptyWord) {
    for (const SwitchingStructure& s : {SwitchingStructure(AllSequences{}), SwitchingStructure(example2_graph()),
                                         SwitchingStructure(PeriodicSwitching{{}, {1}})}) {
        auto words = enumerate_words(s, 0, 2);
        ASSERT_EQ(words.size(), 1u);
        EXPECT_TRUE(words.begin()->empty());
    }
}

TEST(SwitchingTest, AllSequencesCount) {
    EXPECT_EQ(enumerate_words(AllSequences{}, 3, 2).size(), 8u);
    EXPECT_EQ(enumerate_words(AllSequences{}, 2, 3).size(), 9u);
    EXPECT_EQ(enumerate_words(AllSequences{}, 4, 1).size(), 1u);
}

TEST(SwitchingTest, SplitWord) {
    WordSplit sp = split_word(W({2, 0, 1}));
    EXPECT_EQ(sp.head, 2);
    EXPECT_EQ(sp.prefix, W({2, 0}));
    EXPECT_EQ(sp.suffix, W({0, 1}));
    WordSplit one = split_word(W({1}));
    EXPECT_TRUE(one.prefix.empty());
    EXPECT_TRUE(one.suffix.empty());
    EXPECT_THROW(split_word(Word{}), SwitchingError);
}

TEST(SwitchingTest, PeriodicWindowsIncludeTransient) {
    PeriodicSwitching p{{1}, {0}};
    auto words = enumerate_words(p, 2, 2);
    std::set<Word> expected{W({1, 0}), W({0, 0})};
    EXPECT_EQ(words, expected);
    EXPECT_FALSE(is_homogeneous(p, 2));
    EXPECT_TRUE(is_homogeneous(PeriodicSwitching{{}, {1}}, 2));
    EXPECT_FALSE(is_homogeneous(AllSequences{}, 2));
    EXPECT_TRUE(is_homogeneous(AllSequences{}, 1));
}

TEST(SwitchingTest, DeadNodesArePruned) {
    // 2 has no successor, so the edge 0 -> 2 never lies on an infinite walk.
    GraphSwitching g{{{0, 1}, {1, 0}, {0, 2}}};
    EXPECT_EQ(live_nodes(g), (std::set<int>{0, 1}));
    auto norm = std::get<GraphSwitching>(normalized(g, 3));
    EXPECT_EQ(norm.edges.size(), 2u);
    EXPECT_FALSE(is_admissible(g, 3, W({0, 2})));
    EXPECT_TRUE(is_admissible(g, 3, W({0, 1, 0})));
}

TEST(SwitchingTest, GraphWithoutCycleIsError) {
    GraphSwitching g{{{0, 1}}};
    EXPECT_THROW(enumerate_words(g, 1, 2), SwitchingError);
    EXPECT_THROW(normalized(GraphSwitching{{{0, 3}}}, 2), SwitchingError);
}

TEST(SwitchingTest, PeriodicWindowsOfFigureGraph) {
    auto ws = periodic_windows(example2_graph(), 2, 3);
    std::set<Word> got(ws.begin(), ws.end());
    EXPECT_TRUE(got.count(W({0})));
    EXPECT_TRUE(got.count(W({0, 1})));
    EXPECT_TRUE(got.count(W({1, 0})));
    EXPECT_FALSE(got.count(W({1})));
    EXPECT_FALSE(got.count(W({1, 1})));
    for (const Word& u : ws) {
        EXPECT_TRUE(is_admissible(example2_graph(), 2, repeat_to_length(u, 12))) << to_string(u);
    }
}

TEST(SwitchingTest, RepeatToLength) {
    EXPECT_EQ(repeat_to_length(W({0, 1}), 5), W({0, 1, 0, 1, 0}));
    EXPECT_TRUE(repeat_to_length(Word{}, 0).empty());
    EXPECT_THROW(repeat_to_length(Word{}, 3), SwitchingError);
}

TEST(SwitchingProperty, ClosureUnderSplitting) {
    // Every window of length M+1 splits into two admissible windows of length M.
    std::mt19937_64 rng(21);
    std::bernoulli_distribution coin(0.5);
    for (int trial = 0; trial < 60; ++trial) {
        const int J = 2 + trial % 3;
        GraphSwitching g;
        for (int a = 0; a < J; ++a) {
            g.edges.insert({a, (a + 1) % J});  // guarantees a cycle
            for (int b = 0; b < J; ++b)
                if (coin(rng)) g.edges.insert({a, b});
        }
        for (int M = 1; M <= 4; ++M) {
            auto longer = enumerate_words(g, M + 1, J);
            auto shorter = enumerate_words(g, M, J);
            for (const Word& w : longer) {
                WordSplit sp = split_word(w);
                EXPECT_TRUE(shorter.count(sp.prefix));
                EXPECT_TRUE(shorter.count(sp.suffix));
            }
            for (const Word& u : shorter) EXPECT_TRUE(is_admissible(g, J, u));
            // count never decreases with M on a graph without dead ends
            EXPECT_GE(longer.size(), shorter.size());
            EXPECT_LE(longer.size(), shorter.size() * static_cast<std::size_t>(J));
        }
    }
}

TEST(SwitchingProperty, RandomWordsAreAdmissible) {
    std::mt19937_64 rng(22);
    const std::vector<SwitchingStructure> structures{AllSequences{}, example2_graph(), PeriodicSwitching{{1}, {0, 1}}};
    for (const auto& s : structures) {
        for (int trial = 0; trial < 50; ++trial) {
            Word w = random_admissible_word(s, 2, 1 + trial % 9, rng);
            EXPECT_EQ(static_cast<int>(w.size()), 1 + trial % 9);
            EXPECT_TRUE(is_admissible(s, 2, w)) << to_string(w);
        }
    }
}
