#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace patlim {

// Letters are positive integer ids; a word is a letter sequence.
using Word = std::vector<int>;

// Circuit vertex (u, j): word u (1-based), position j in 0..p.
struct Vertex {
    int u = 0;
    int j = 0;
    auto operator<=>(const Vertex&) const = default;
};

// k words over a shared letter-id space. Canonical form numbers letters by
// first occurrence, scanning words in order and positions left to right.
class Sentence {
public:
    Sentence() = default;
    explicit Sentence(std::vector<Word> words) : words_(std::move(words)) {}

    // "abab" or "abca,addc,aedc" (letters a-z, then A-Z).
    static Sentence parse(const std::string& text);

    const std::vector<Word>& words() const { return words_; }
    std::vector<Word>& mutable_words() { return words_; }
    int k() const { return static_cast<int>(words_.size()); }
    int length(int u) const { return static_cast<int>(words_[static_cast<std::size_t>(u - 1)].size()); }
    // Common word length; -1 if the words differ in length.
    int p() const;
    int total_length() const;
    int num_letters() const;
    // multiplicities()[l-1] = total occurrences of letter l.
    std::vector<int> multiplicities() const;

    bool is_canonical() const;
    Sentence canonical() const;
    // Canonical sentence formed by the listed words (1-based indices, in order).
    Sentence sub_sentence(const std::vector<int>& word_indices) const;

    std::string str() const;

    bool operator==(const Sentence& o) const { return words_ == o.words_; }
    bool operator<(const Sentence& o) const { return words_ < o.words_; }

private:
    std::vector<Word> words_;
};

std::string letter_symbol(int letter);

// All set partitions of [p] as canonical words, in restricted-growth order.
std::vector<Word> enumerate_words(int p);
void for_each_word(int p, const std::function<void(const Word&)>& fn);

// All canonical sentences with the given word lengths. The visitor receives a
// reused object; copy it to keep it.
void for_each_sentence(const std::vector<int>& lengths, const std::function<void(const Sentence&)>& fn);
std::uint64_t bell_number(int n);

// Pair partitions of [p+q] as 2-word sentences of lengths p and q. With
// require_cross, only those with at least one block meeting both words.
void for_each_P2(int p, int q, const std::function<void(const Sentence&)>& fn, bool require_cross = true);
std::vector<Sentence> enumerate_P2(int p, int q);
void for_each_P24(int p, int q, const std::function<void(const Sentence&)>& fn);
std::vector<Sentence> enumerate_P24(int p, int q);

bool is_P2(const Sentence& w);
bool is_P24(const Sentence& w);
// Clique sentence test; on success stores the common letter.
bool is_clique(const Sentence& w, int* common_letter = nullptr);

enum class ComponentClass { pair_P2, pair_P24, clique, other };
const char* component_class_name(ComponentClass c);

struct ClusterInfo {
    std::vector<std::vector<int>> components;  // 1-based word indices, sorted
    std::vector<ComponentClass> classes;       // filled by classify_sentence
    bool is_special_partition = false;
};

ClusterInfo cluster_decompose(const Sentence& w);
ClusterInfo classify_sentence(const Sentence& w);

struct GeneratingVertices {
    std::vector<Vertex> vertices;  // sorted
    int F = 0;
};

// Order: words visited as zeta[0], zeta[1], ... (1-based indices; empty means
// identity), positions 0..p within each word.
GeneratingVertices generating_vertices(const Sentence& w, const std::set<int>& suppressed = {},
                                       const std::vector<int>& zeta = {});

// SP(p,k), built from set partitions of the words into blocks of size >= 2
// filled with P2/P24 pairs or clique clusters. Output is sorted and unique.
std::vector<Sentence> enumerate_special_partitions(int p, int k, int max_pk = 24);

}  // namespace patlim
