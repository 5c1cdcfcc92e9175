#include "patlim/combinat.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace patlim {

std::string letter_symbol(int letter) {
    if (letter >= 1 && letter <= 26) return std::string(1, static_cast<char>('a' + letter - 1));
    if (letter >= 27 && letter <= 52) return std::string(1, static_cast<char>('A' + letter - 27));
    throw std::out_of_range("letter id beyond 52 has no symbol");
}

Sentence Sentence::parse(const std::string& text) {
    std::vector<Word> words(1);
    for (char ch : text) {
        if (ch == ',' || ch == ' ') {
            if (!words.back().empty()) words.emplace_back();
            continue;
        }
        if (ch >= 'a' && ch <= 'z') words.back().push_back(ch - 'a' + 1);
        else if (ch >= 'A' && ch <= 'Z') words.back().push_back(ch - 'A' + 27);
        else throw std::invalid_argument(std::string("bad letter in sentence: ") + ch);
    }
    if (words.back().empty()) words.pop_back();
    if (words.empty()) throw std::invalid_argument("empty sentence");
    return Sentence(std::move(words));
}

int Sentence::p() const {
    if (words_.empty()) return -1;
    std::size_t len = words_[0].size();
    for (const auto& w : words_)
        if (w.size() != len) return -1;
    return static_cast<int>(len);
}

int Sentence::total_length() const {
    int t = 0;
    for (const auto& w : words_) t += static_cast<int>(w.size());
    return t;
}

int Sentence::num_letters() const {
    std::set<int> s;
    for (const auto& w : words_) s.insert(w.begin(), w.end());
    return static_cast<int>(s.size());
}

std::vector<int> Sentence::multiplicities() const {
    int mx = 0;
    for (const auto& w : words_)
        for (int l : w) mx = std::max(mx, l);
    std::vector<int> m(static_cast<std::size_t>(mx), 0);
    for (const auto& w : words_)
        for (int l : w) ++m[static_cast<std::size_t>(l - 1)];
    return m;
}

bool Sentence::is_canonical() const {
    int next = 1;
    for (const auto& w : words_)
        for (int l : w) {
            if (l > next || l < 1) return false;
            if (l == next) ++next;
        }
    return true;
}

Sentence Sentence::canonical() const {
    std::map<int, int> relabel;
    std::vector<Word> out = words_;
    for (auto& w : out)
        for (int& l : w) {
            auto it = relabel.find(l);
            if (it == relabel.end()) it = relabel.emplace(l, static_cast<int>(relabel.size()) + 1).first;
            l = it->second;
        }
    return Sentence(std::move(out));
}

Sentence Sentence::sub_sentence(const std::vector<int>& word_indices) const {
    std::vector<Word> out;
    for (int u : word_indices) out.push_back(words_.at(static_cast<std::size_t>(u - 1)));
    return Sentence(std::move(out)).canonical();
}

std::string Sentence::str() const {
    std::string s;
    for (std::size_t u = 0; u < words_.size(); ++u) {
        if (u) s += ',';
        for (int l : words_[u]) s += letter_symbol(l);
    }
    return s;
}

namespace {

// Advances a restricted growth string in place; false when exhausted.
bool next_rgs(std::vector<int>& a, std::vector<int>& prefix_max) {
    const int n = static_cast<int>(a.size());
    for (int i = n - 1; i >= 1; --i) {
        if (a[i] <= prefix_max[i - 1]) {
            ++a[i];
            prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
            for (int t = i + 1; t < n; ++t) {
                a[t] = 0;
                prefix_max[t] = prefix_max[i];
            }
            return true;
        }
    }
    return false;
}

void for_each_rgs(int n, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> a(static_cast<std::size_t>(n), 0), mx(static_cast<std::size_t>(n), 0);
    do {
        fn(a);
    } while (next_rgs(a, mx));
}

Sentence from_blocks(const std::vector<int>& block_of, const std::vector<int>& lengths) {
    std::vector<Word> words;
    std::size_t pos = 0;
    for (int len : lengths) {
        Word w;
        for (int t = 0; t < len; ++t) w.push_back(block_of[pos++] + 1);
        words.push_back(std::move(w));
    }
    return Sentence(std::move(words)).canonical();
}

// Pairings of the given positions; calls fn with partner[] filled.
void for_each_pairing(std::vector<int>& partner, std::vector<int>& free_pos,
                      const std::function<void()>& fn) {
    if (free_pos.empty()) {
        fn();
        return;
    }
    int first = free_pos[0];
    for (std::size_t t = 1; t < free_pos.size(); ++t) {
        int second = free_pos[t];
        std::vector<int> rest;
        rest.reserve(free_pos.size() - 2);
        for (std::size_t r = 1; r < free_pos.size(); ++r)
            if (r != t) rest.push_back(free_pos[r]);
        partner[static_cast<std::size_t>(first)] = second;
        partner[static_cast<std::size_t>(second)] = first;
        std::swap(rest, free_pos);
        for_each_pairing(partner, free_pos, fn);
        std::swap(rest, free_pos);
    }
}

Sentence from_partner(const std::vector<int>& partner, const std::vector<int>& lengths) {
    std::vector<int> block(partner.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < partner.size(); ++i) {
        if (block[i] >= 0) continue;
        block[i] = next;
        if (partner[i] >= 0) block[static_cast<std::size_t>(partner[i])] = next;
        ++next;
    }
    return from_blocks(block, lengths);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            x = parent[static_cast<std::size_t>(x)];
        }
        return x;
    }
    void unite(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

}  // namespace

std::uint64_t bell_number(int n) {
    // Bell triangle.
    std::vector<std::uint64_t> row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<std::uint64_t> next{row.back()};
        for (auto v : row) next.push_back(next.back() + v);
        row = std::move(next);
    }
    return row[0];
}

void for_each_word(int p, const std::function<void(const Word&)>& fn) {
    if (p < 1) throw std::invalid_argument("word length must be >= 1");
    Word w(static_cast<std::size_t>(p));
    for_each_rgs(p, [&](const std::vector<int>& a) {
        for (int i = 0; i < p; ++i) w[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] + 1;
        fn(w);
    });
}

std::vector<Word> enumerate_words(int p) {
    std::vector<Word> out;
    for_each_word(p, [&](const Word& w) { out.push_back(w); });
    return out;
}

void for_each_sentence(const std::vector<int>& lengths, const std::function<void(const Sentence&)>& fn) {
    int n = 0;
    for (int len : lengths) {
        if (len < 1) throw std::invalid_argument("word length must be >= 1");
        n += len;
    }
    if (lengths.empty()) throw std::invalid_argument("sentence needs at least one word");
    Sentence s;
    auto& ws = s.mutable_words();
    for (int len : lengths) ws.emplace_back(static_cast<std::size_t>(len));
    for_each_rgs(n, [&](const std::vector<int>& a) {
        std::size_t pos = 0;
        for (auto& w : ws)
            for (auto& l : w) l = a[pos++] + 1;
        fn(s);
    });
}

void for_each_P2(int p, int q, const std::function<void(const Sentence&)>& fn, bool require_cross) {
    if (p < 0 || q < 0) throw std::invalid_argument("negative word length");
    if ((p + q) % 2 != 0 || p + q == 0) return;
    std::vector<int> partner(static_cast<std::size_t>(p + q), -1);
    std::vector<int> free_pos(static_cast<std::size_t>(p + q));
    std::iota(free_pos.begin(), free_pos.end(), 0);
    std::vector<int> lengths;
    if (p > 0) lengths.push_back(p);
    if (q > 0) lengths.push_back(q);
    for_each_pairing(partner, free_pos, [&] {
        if (require_cross) {
            bool cross = false;
            for (int i = 0; i < p && !cross; ++i) cross = partner[static_cast<std::size_t>(i)] >= p;
            if (!cross) return;
        }
        fn(from_partner(partner, lengths));
    });
}

std::vector<Sentence> enumerate_P2(int p, int q) {
    std::vector<Sentence> out;
    for_each_P2(p, q, [&](const Sentence& s) { out.push_back(s); });
    return out;
}

void for_each_P24(int p, int q, const std::function<void(const Sentence&)>& fn) {
    if (p < 2 || q < 2 || p % 2 || q % 2) return;
    const int n = p + q;
    for (int a1 = 0; a1 < p; ++a1)
        for (int a2 = a1 + 1; a2 < p; ++a2)
            for (int b1 = p; b1 < n; ++b1)
                for (int b2 = b1 + 1; b2 < n; ++b2) {
                    std::vector<int> partner(static_cast<std::size_t>(n), -1);
                    std::vector<int> left, right;
                    for (int i = 0; i < p; ++i)
                        if (i != a1 && i != a2) left.push_back(i);
                    for (int i = p; i < n; ++i)
                        if (i != b1 && i != b2) right.push_back(i);
                    for_each_pairing(partner, left, [&] {
                        for_each_pairing(partner, right, [&] {
                            std::vector<int> block(static_cast<std::size_t>(n), -1);
                            int next = 1;
                            for (int i : {a1, a2, b1, b2}) block[static_cast<std::size_t>(i)] = 0;
                            for (int i = 0; i < n; ++i) {
                                if (block[static_cast<std::size_t>(i)] >= 0) continue;
                                block[static_cast<std::size_t>(i)] = next;
                                block[static_cast<std::size_t>(partner[static_cast<std::size_t>(i)])] = next;
                                ++next;
                            }
                            fn(from_blocks(block, {p, q}));
                        });
                    });
                }
}

std::vector<Sentence> enumerate_P24(int p, int q) {
    std::vector<Sentence> out;
    for_each_P24(p, q, [&](const Sentence& s) { out.push_back(s); });
    return out;
}

namespace {

// occurrences[l-1] = {count in word 1, count in word 2, ...}
std::vector<std::vector<int>> occurrence_table(const Sentence& w) {
    auto m = w.multiplicities();
    std::vector<std::vector<int>> occ(m.size(), std::vector<int>(static_cast<std::size_t>(w.k()), 0));
    for (int u = 0; u < w.k(); ++u)
        for (int l : w.words()[static_cast<std::size_t>(u)]) ++occ[static_cast<std::size_t>(l - 1)][static_cast<std::size_t>(u)];
    return occ;
}

}  // namespace

bool is_P2(const Sentence& w) {
    if (w.k() != 2) return false;
    bool cross = false;
    for (const auto& o : occurrence_table(w)) {
        if (o[0] + o[1] != 2) return false;
        if (o[0] == 1) cross = true;
    }
    return cross;
}

bool is_P24(const Sentence& w) {
    if (w.k() != 2 || w.length(1) % 2 || w.length(2) % 2) return false;
    int fours = 0;
    for (const auto& o : occurrence_table(w)) {
        if (o[0] == 2 && o[1] == 2) {
            ++fours;
            continue;
        }
        if (!((o[0] == 2 && o[1] == 0) || (o[0] == 0 && o[1] == 2))) return false;
    }
    return fours == 1;
}

bool is_clique(const Sentence& w, int* common_letter) {
    const int k = w.k();
    if (k < 3) return false;
    auto occ = occurrence_table(w);
    int common = 0;
    for (std::size_t l = 0; l < occ.size(); ++l) {
        const auto& o = occ[l];
        bool once_everywhere = std::all_of(o.begin(), o.end(), [](int c) { return c == 1; });
        if (once_everywhere) {
            if (common) return false;
            common = static_cast<int>(l) + 1;
            continue;
        }
        int words_with = 0, total = 0;
        for (int c : o) {
            total += c;
            if (c) ++words_with;
        }
        if (total != 2 || words_with != 1) return false;
    }
    if (!common) return false;
    if (common_letter) *common_letter = common;
    return true;
}

const char* component_class_name(ComponentClass c) {
    switch (c) {
        case ComponentClass::pair_P2: return "pair_P2";
        case ComponentClass::pair_P24: return "pair_P24";
        case ComponentClass::clique: return "clique";
        case ComponentClass::other: return "other";
    }
    return "other";
}

ClusterInfo cluster_decompose(const Sentence& w) {
    const int k = w.k();
    UnionFind uf(k);
    std::map<int, int> first_word;
    for (int u = 0; u < k; ++u)
        for (int l : w.words()[static_cast<std::size_t>(u)]) {
            auto it = first_word.find(l);
            if (it == first_word.end()) first_word.emplace(l, u);
            else uf.unite(u, it->second);
        }
    std::map<int, std::vector<int>> groups;
    for (int u = 0; u < k; ++u) groups[uf.find(u)].push_back(u + 1);
    ClusterInfo info;
    for (auto& g : groups) info.components.push_back(g.second);
    std::sort(info.components.begin(), info.components.end());
    return info;
}

ClusterInfo classify_sentence(const Sentence& w) {
    ClusterInfo info = cluster_decompose(w);
    info.is_special_partition = true;
    for (const auto& comp : info.components) {
        Sentence sub = w.sub_sentence(comp);
        ComponentClass c = ComponentClass::other;
        if (comp.size() == 2) {
            if (is_P2(sub)) c = ComponentClass::pair_P2;
            else if (is_P24(sub)) c = ComponentClass::pair_P24;
        } else if (comp.size() >= 3 && is_clique(sub)) {
            c = ComponentClass::clique;
        }
        info.classes.push_back(c);
        if (c == ComponentClass::other) info.is_special_partition = false;
    }
    return info;
}

GeneratingVertices generating_vertices(const Sentence& w, const std::set<int>& suppressed,
                                       const std::vector<int>& zeta) {
    std::vector<int> order = zeta;
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(w.k()));
        std::iota(order.begin(), order.end(), 1);
    }
    std::vector<int> check = order;
    std::sort(check.begin(), check.end());
    for (int t = 0; t < w.k(); ++t)
        if (static_cast<int>(check.size()) != w.k() || check[static_cast<std::size_t>(t)] != t + 1)
            throw std::invalid_argument("zeta is not a permutation of the word indices");
    GeneratingVertices g;
    std::set<int> seen;
    for (int u : order) {
        g.vertices.push_back({u, 0});
        const Word& word = w.words()[static_cast<std::size_t>(u - 1)];
        for (std::size_t j = 0; j < word.size(); ++j) {
            int l = word[j];
            if (!suppressed.count(l) && !seen.count(l)) g.vertices.push_back({u, static_cast<int>(j) + 1});
            seen.insert(l);
        }
    }
    std::sort(g.vertices.begin(), g.vertices.end());
    g.F = static_cast<int>(g.vertices.size());
    return g;
}

namespace {

// Clique clusters of c words of odd length p: each word holds the common letter
// once and pairs up its remaining positions privately.
std::vector<Sentence> clique_sentences(int p, int c) {
    std::vector<std::vector<int>> shapes;  // per word: block ids, -1 marks the common letter
    for (int apos = 0; apos < p; ++apos) {
        std::vector<int> partner(static_cast<std::size_t>(p), -1), free_pos;
        for (int i = 0; i < p; ++i)
            if (i != apos) free_pos.push_back(i);
        for_each_pairing(partner, free_pos, [&] {
            std::vector<int> blk(static_cast<std::size_t>(p), -2);
            blk[static_cast<std::size_t>(apos)] = -1;
            int next = 0;
            for (int i = 0; i < p; ++i) {
                if (blk[static_cast<std::size_t>(i)] != -2) continue;
                blk[static_cast<std::size_t>(i)] = next;
                blk[static_cast<std::size_t>(partner[static_cast<std::size_t>(i)])] = next;
                ++next;
            }
            shapes.push_back(blk);
        });
    }
    std::vector<Sentence> out;
    std::vector<std::size_t> choice(static_cast<std::size_t>(c), 0);
    while (true) {
        std::vector<Word> words;
        int base = 2;
        for (int u = 0; u < c; ++u) {
            Word wd;
            for (int b : shapes[choice[static_cast<std::size_t>(u)]]) wd.push_back(b < 0 ? 1 : base + b);
            base += (p - 1) / 2;
            words.push_back(std::move(wd));
        }
        out.push_back(Sentence(std::move(words)).canonical());
        int t = c - 1;
        while (t >= 0 && ++choice[static_cast<std::size_t>(t)] == shapes.size()) choice[static_cast<std::size_t>(t--)] = 0;
        if (t < 0) break;
    }
    return out;
}

}  // namespace

std::vector<Sentence> enumerate_special_partitions(int p, int k, int max_pk) {
    if (p < 1 || k < 1) throw std::invalid_argument("p and k must be positive");
    if (p * k > max_pk)
        throw std::length_error("special partition enumeration exceeds budget p*k <= " + std::to_string(max_pk));
    std::vector<Sentence> pairs;
    bool pairs_built = false;
    std::map<int, std::vector<Sentence>> clique_cache;

    std::set<Sentence> result;
    for_each_rgs(k, [&](const std::vector<int>& a) {
        int nb = *std::max_element(a.begin(), a.end()) + 1;
        std::vector<std::vector<int>> blocks(static_cast<std::size_t>(nb));
        for (int u = 0; u < k; ++u) blocks[static_cast<std::size_t>(a[static_cast<std::size_t>(u)])].push_back(u);
        std::vector<const std::vector<Sentence>*> options;
        for (const auto& b : blocks) {
            if (b.size() < 2) return;
            if (b.size() == 2) {
                if (!pairs_built) {
                    if (p > 8) throw std::length_error("pair partitions of 2p exceed the enumeration budget (p <= 8)");
                    pairs = enumerate_P2(p, p);
                    for (auto& s : enumerate_P24(p, p)) pairs.push_back(s);
                    pairs_built = true;
                }
                options.push_back(&pairs);
            } else {
                if (p % 2 == 0) return;
                int c = static_cast<int>(b.size());
                if (!clique_cache.count(c)) clique_cache[c] = clique_sentences(p, c);
                options.push_back(&clique_cache[c]);
            }
        }
        for (const auto* o : options)
            if (o->empty()) return;
        std::vector<std::size_t> idx(options.size(), 0);
        bool done = false;
        while (!done) {
            std::vector<Word> words(static_cast<std::size_t>(k));
            int offset = 0;
            for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
                const Sentence& s = (*options[bi])[idx[bi]];
                for (std::size_t t = 0; t < blocks[bi].size(); ++t) {
                    Word wd = s.words()[t];
                    for (int& l : wd) l += offset;
                    words[static_cast<std::size_t>(blocks[bi][t])] = std::move(wd);
                }
                offset += s.num_letters();
            }
            result.insert(Sentence(std::move(words)).canonical());
            std::size_t t = idx.size();
            while (true) {
                if (t == 0) {
                    done = true;
                    break;
                }
                --t;
                if (++idx[t] < options[t]->size()) break;
                idx[t] = 0;
            }
        }
    });
    return {result.begin(), result.end()};
}

}  // namespace patlim
