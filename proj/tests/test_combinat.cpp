#include "oracles.hpp"
#include "patlim/combinat.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace patlim;

namespace {

std::vector<std::string> strs(const std::vector<Word>& ws) {
    std::vector<std::string> out;
    for (const auto& w : ws) out.push_back(Sentence({w}).str());
    return out;
}

std::set<std::string> strs(const std::vector<Sentence>& ws) {
    std::set<std::string> out;
    for (const auto& w : ws) out.insert(w.str());
    return out;
}

}  // namespace

TEST_CASE("enumerate_words") {
    CHECK(strs(enumerate_words(3)) == std::vector<std::string>{"aaa", "aab", "aba", "abb", "abc"});
    CHECK(strs(enumerate_words(1)) == std::vector<std::string>{"a"});
    CHECK_THROWS(enumerate_words(0));
    // {{1,3,5},{2,4}} is ababa.
    auto w = Sentence::parse("ababa");
    CHECK(w.is_canonical());
    CHECK(w.words()[0] == Word{1, 2, 1, 2, 1});
}

TEST_CASE("word counts are Bell numbers") {
    auto bell = oracle::bell_triangle(10);
    CHECK(bell[8] == 4140);
    for (int p = 1; p <= 8; ++p) {
        std::uint64_t n = 0;
        for_each_word(p, [&](const Word& w) {
            CHECK(Sentence({w}).is_canonical());
            ++n;
        });
        CHECK(n == bell[static_cast<std::size_t>(p)]);
        CHECK(bell_number(p) == bell[static_cast<std::size_t>(p)]);
    }
}

TEST_CASE("sentences match independent set partitions") {
    for (auto lengths : std::vector<std::vector<int>>{{2, 2}, {3, 1}, {1, 1, 1}, {2, 3}}) {
        std::set<std::string> got, want;
        for_each_sentence(lengths, [&](const Sentence& s) { got.insert(s.str()); });
        int n = 0;
        for (int l : lengths) n += l;
        oracle::set_partitions(n, [&](const std::vector<std::vector<int>>& blocks) {
            std::vector<int> labels(static_cast<std::size_t>(n));
            for (std::size_t b = 0; b < blocks.size(); ++b)
                for (int x : blocks[b]) labels[static_cast<std::size_t>(x)] = static_cast<int>(b);
            want.insert(oracle::sentence_from_labels(labels, lengths).str());
        });
        CHECK(got == want);
    }
}

TEST_CASE("pair partition counts are double factorials") {
    for (int k = 1; k <= 6; ++k) {
        std::uint64_t n = 0;
        // All pair partitions of [2k] split as k + k, cross filter off.
        for_each_P2(k, k, [&](const Sentence&) { ++n; }, false);
        CHECK(n == oracle::count_pairings(2 * k));
    }
    CHECK(oracle::count_pairings(12) == 10395);
}

TEST_CASE("P2 and P24 enumerators") {
    CHECK(strs(enumerate_P2(2, 2)) == std::set<std::string>{"ab,ab", "ab,ba"});
    CHECK(enumerate_P2(1, 1).size() == 1);
    CHECK(enumerate_P2(1, 1)[0].str() == "a,a");
    CHECK(enumerate_P2(1, 2).empty());
    CHECK(strs(enumerate_P24(2, 2)) == std::set<std::string>{"aa,aa"});
    CHECK(enumerate_P24(3, 3).empty());
    CHECK(enumerate_P24(4, 4).size() == 36);
    // Independent filter of all 2-word sentences.
    for (auto [p, q] : std::vector<std::pair<int, int>>{{2, 2}, {3, 3}, {4, 4}, {2, 4}, {3, 1}}) {
        std::set<std::string> p2, p24;
        for_each_sentence({p, q}, [&](const Sentence& s) {
            if (oracle::oracle_is_P2(s)) p2.insert(s.str());
            if (oracle::oracle_is_P24(s)) p24.insert(s.str());
            CHECK(is_P2(s) == oracle::oracle_is_P2(s));
            CHECK(is_P24(s) == oracle::oracle_is_P24(s));
        });
        CHECK(strs(enumerate_P2(p, q)) == p2);
        CHECK(strs(enumerate_P24(p, q)) == p24);
    }
}

TEST_CASE("cluster_decompose") {
    auto c = cluster_decompose(Sentence::parse("abca,addc,aedc,ebbd"));
    CHECK(c.components == std::vector<std::vector<int>>{{1, 2, 3, 4}});
    CHECK(cluster_decompose(Sentence::parse("ab,cd")).components == std::vector<std::vector<int>>{{1}, {2}});
    CHECK(cluster_decompose(Sentence::parse("aa,ab")).components == std::vector<std::vector<int>>{{1, 2}});
    std::mt19937_64 rng(11);
    for (int t = 0; t < 300; ++t) {
        auto s = oracle::random_sentence(rng, 3, 4, 6);
        CHECK(cluster_decompose(s).components == oracle::components(s));
    }
}

TEST_CASE("classify_sentence") {
    auto w = classify_sentence(Sentence::parse("ab,ab"));
    CHECK(w.is_special_partition);
    REQUIRE(w.classes.size() == 1);
    CHECK(w.classes[0] == ComponentClass::pair_P2);
    CHECK(classify_sentence(Sentence::parse("aa,aa")).classes[0] == ComponentClass::pair_P24);
    int common = 0;
    auto cl = Sentence::parse("abb,acc,add");
    CHECK(is_clique(cl, &common));
    CHECK(common == 1);
    CHECK(classify_sentence(cl).classes[0] == ComponentClass::clique);
    CHECK(classify_sentence(cl).is_special_partition);
    // Singletons are never special, even when internally paired.
    CHECK_FALSE(classify_sentence(Sentence::parse("aa,bb")).is_special_partition);
    CHECK(std::string(component_class_name(ComponentClass::other)) == "other");
}

TEST_CASE("clique sentences carry the common letter k times") {
    std::mt19937_64 rng(5);
    int seen = 0;
    for (int t = 0; t < 20000 && seen < 50; ++t) {
        auto s = oracle::random_sentence(rng, 3, 3, 5);
        int a = 0;
        if (!is_clique(s, &a)) continue;
        ++seen;
        CHECK(oracle::oracle_is_clique(s));
        auto m = s.multiplicities();
        for (std::size_t l = 0; l < m.size(); ++l) CHECK(m[l] == (static_cast<int>(l) + 1 == a ? s.k() : 2));
    }
    CHECK(seen > 0);
}

TEST_CASE("special partitions match a brute-force classifier for pk <= 12") {
    for (int p = 1; p <= 12; ++p)
        for (int k = 1; p * k <= 12; ++k) {
            if (bell_number(p * k) > 300000) continue;
            std::set<std::string> want;
            for_each_sentence(std::vector<int>(static_cast<std::size_t>(k), p), [&](const Sentence& s) {
                if (oracle::oracle_is_special(s)) want.insert(s.str());
            });
            CAPTURE(p);
            CAPTURE(k);
            CHECK(strs(enumerate_special_partitions(p, k)) == want);
        }
    CHECK(enumerate_special_partitions(2, 3).empty());
    CHECK(enumerate_special_partitions(2, 2).size() == 3);
    CHECK(strs(enumerate_special_partitions(1, 2)) == std::set<std::string>{"a,a"});
    for (int p : {2, 4})
        for (int k : {1, 3, 5}) CHECK(enumerate_special_partitions(p, k).empty());
    CHECK_THROWS(enumerate_special_partitions(5, 6, 24));
}

TEST_CASE("generating vertices") {
    auto g = generating_vertices(Sentence::parse("abca,addc,aedc,ebbd"));
    std::vector<Vertex> want{{1, 0}, {1, 1}, {1, 2}, {1, 3}, {2, 0}, {2, 2}, {3, 0}, {3, 2}, {4, 0}};
    CHECK(g.vertices == want);
    CHECK(g.F == 9);
    auto s = generating_vertices(Sentence::parse("aa"), {1});
    CHECK(s.F == 1);
    CHECK(s.vertices == std::vector<Vertex>{{1, 0}});
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> pk(1, 4);
    for (int t = 0; t < 1000; ++t) {
        auto w = oracle::random_sentence(rng, pk(rng), pk(rng), 6);
        CHECK(generating_vertices(w).F == w.num_letters() + w.k());
    }
    // Renumbering the words keeps the count.
    auto z = generating_vertices(Sentence::parse("abca,addc,aedc,ebbd"), {}, {4, 3, 2, 1});
    CHECK(z.F == 9);
}

TEST_CASE("sentence parsing and canonical form") {
    auto s = Sentence::parse("ba,ab");
    CHECK_FALSE(s.is_canonical());
    CHECK(s.canonical().str() == "ab,ba");
    CHECK(Sentence::parse("abca,addc").sub_sentence({2}).str() == "abbc");
    CHECK(Sentence::parse("ab,ab").multiplicities() == std::vector<int>{2, 2});
    CHECK_THROWS(Sentence::parse("a1"));
    CHECK(letter_symbol(27) == "A");
}
