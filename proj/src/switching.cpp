#include <smjls/switching.hpp>

#include <algorithm>
#include <map>
#include <sstream>

namespace smjls {

std::string to_string(const Word& w) {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (k) os << ',';
        os << w[k] + 1;
    }
    os << ')';
    return os.str();
}

namespace {

void check_symbol(int s, int J, const char* where) {
    if (s < 0 || s >= J) {
        throw SwitchingError(std::string(where) + ": symbol " + std::to_string(s + 1) +
                             " outside alphabet 1.." + std::to_string(J));
    }
}

std::map<int, std::vector<int>> successors(const GraphSwitching& g) {
    std::map<int, std::vector<int>> succ;
    for (const auto& [from, to] : g.edges) succ[from].push_back(to);
    return succ;
}

// Sequence psi(1), psi(2), ... restricted to its first `length` symbols.
std::vector<int> periodic_sequence(const PeriodicSwitching& p, std::size_t length) {
    std::vector<int> seq = p.prefix;
    seq.reserve(length);
    for (std::size_t k = 0; seq.size() < length; ++k) seq.push_back(p.period[k % p.period.size()]);
    seq.resize(length);
    return seq;
}

void extend_walks(const std::map<int, std::vector<int>>& succ, std::vector<int>& walk, int M,
                  std::set<Word>& out) {
    if (static_cast<int>(walk.size()) == M) {
        out.insert(Word(walk));
        return;
    }
    auto it = succ.find(walk.back());
    if (it == succ.end()) return;
    for (int next : it->second) {
        walk.push_back(next);
        extend_walks(succ, walk, M, out);
        walk.pop_back();
    }
}

}  // namespace

std::set<int> live_nodes(const GraphSwitching& g) {
    std::set<int> live;
    for (const auto& [from, to] : g.edges) {
        live.insert(from);
        live.insert(to);
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto it = live.begin(); it != live.end();) {
            bool has_out = std::any_of(g.edges.begin(), g.edges.end(), [&](const auto& e) {
                return e.first == *it && live.count(e.second) > 0;
            });
            if (!has_out) {
                it = live.erase(it);
                changed = true;
            } else {
                ++it;
            }
        }
    }
    return live;
}

SwitchingStructure normalized(const SwitchingStructure& s, int J) {
    if (J <= 0) throw SwitchingError("switching: empty alphabet");
    if (std::holds_alternative<AllSequences>(s)) return s;
    if (const auto* g = std::get_if<GraphSwitching>(&s)) {
        if (g->edges.empty()) throw SwitchingError("switching graph has no edges");
        for (const auto& [from, to] : g->edges) {
            check_symbol(from, J, "switching.edges");
            check_symbol(to, J, "switching.edges");
        }
        std::set<int> live = live_nodes(*g);
        if (live.empty()) {
            throw SwitchingError("switching graph has no infinite extension from node " +
                                 std::to_string(g->edges.begin()->first + 1));
        }
        GraphSwitching pruned;
        for (const auto& e : g->edges) {
            if (live.count(e.first) && live.count(e.second)) pruned.edges.insert(e);
        }
        return pruned;
    }
    const auto& p = std::get<PeriodicSwitching>(s);
    if (p.period.empty()) throw SwitchingError("switching.period: must be nonempty");
    for (int v : p.prefix) check_symbol(v, J, "switching.prefix");
    for (int v : p.period) check_symbol(v, J, "switching.period");
    return p;
}

std::set<Word> enumerate_words(const SwitchingStructure& structure, int M, int J) {
    if (M < 0) throw SwitchingError("window length must be nonnegative");
    const SwitchingStructure s = normalized(structure, J);
    std::set<Word> out;
    if (M == 0) {
        out.insert(Word{});
        return out;
    }
    if (std::holds_alternative<AllSequences>(s)) {
        std::vector<int> w(M, 0);
        while (true) {
            out.insert(Word(w));
            int k = M - 1;
            while (k >= 0 && w[k] == J - 1) w[k--] = 0;
            if (k < 0) break;
            ++w[k];
        }
        return out;
    }
    if (const auto* g = std::get_if<GraphSwitching>(&s)) {
        const auto succ = successors(*g);
        for (int start : live_nodes(*g)) {
            std::vector<int> walk{start};
            extend_walks(succ, walk, M, out);
        }
        return out;
    }
    const auto& p = std::get<PeriodicSwitching>(s);
    const std::size_t starts = p.prefix.size() + p.period.size();
    const auto seq = periodic_sequence(p, starts + static_cast<std::size_t>(M));
    for (std::size_t t = 0; t < starts; ++t) {
        out.insert(Word(std::vector<int>(seq.begin() + t, seq.begin() + t + M)));
    }
    return out;
}

WordSplit split_word(const Word& w) {
    if (w.empty()) throw SwitchingError("split_word: empty word");
    WordSplit out;
    out.head = w[0];
    out.prefix = Word(std::vector<int>(w.symbols.begin(), w.symbols.end() - 1));
    out.suffix = Word(std::vector<int>(w.symbols.begin() + 1, w.symbols.end()));
    return out;
}

bool is_admissible(const SwitchingStructure& structure, int J, const Word& w) {
    const SwitchingStructure s = normalized(structure, J);
    for (int v : w.symbols) {
        if (v < 0 || v >= J) return false;
    }
    if (std::holds_alternative<AllSequences>(s)) return true;
    if (const auto* g = std::get_if<GraphSwitching>(&s)) {
        const auto live = live_nodes(*g);
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (!live.count(w[k])) return false;
            if (k + 1 < w.size() && !g->edges.count({w[k], w[k + 1]})) return false;
        }
        return true;
    }
    return enumerate_words(s, static_cast<int>(w.size()), J).count(w) > 0;
}

std::vector<Word> periodic_windows(const SwitchingStructure& structure, int J, int max_period) {
    const SwitchingStructure s = normalized(structure, J);
    std::set<Word> found;
    for (int len = 1; len <= max_period; ++len) {
        if (const auto* p = std::get_if<PeriodicSwitching>(&s)) {
            const int L = static_cast<int>(p->period.size());
            if (len % L != 0) continue;
            for (int r = 0; r < L; ++r) {
                std::vector<int> u;
                for (int k = 0; k < len; ++k) u.push_back(p->period[(r + k) % L]);
                found.insert(Word(u));
            }
            continue;
        }
        for (const Word& u : enumerate_words(s, len, J)) {
            if (std::holds_alternative<AllSequences>(s) ||
                std::get<GraphSwitching>(s).edges.count({u.symbols.back(), u.symbols.front()})) {
                found.insert(u);
            }
        }
    }
    return {found.begin(), found.end()};
}

Word random_admissible_word(const SwitchingStructure& structure, int J, int length,
                            std::mt19937_64& rng) {
    const SwitchingStructure s = normalized(structure, J);
    std::vector<int> w;
    w.reserve(length);
    if (length <= 0) return Word{};
    if (std::holds_alternative<AllSequences>(s)) {
        std::uniform_int_distribution<int> pick(0, J - 1);
        for (int k = 0; k < length; ++k) w.push_back(pick(rng));
        return Word(w);
    }
    if (const auto* g = std::get_if<GraphSwitching>(&s)) {
        const auto live = live_nodes(*g);
        const auto succ = successors(*g);
        std::vector<int> nodes(live.begin(), live.end());
        w.push_back(nodes[std::uniform_int_distribution<std::size_t>(0, nodes.size() - 1)(rng)]);
        while (static_cast<int>(w.size()) < length) {
            const auto& next = succ.at(w.back());
            w.push_back(next[std::uniform_int_distribution<std::size_t>(0, next.size() - 1)(rng)]);
        }
        return Word(w);
    }
    const auto& p = std::get<PeriodicSwitching>(s);
    const std::size_t starts = p.prefix.size() + p.period.size();
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, starts - 1)(rng);
    const auto seq = periodic_sequence(p, t + static_cast<std::size_t>(length));
    return Word(std::vector<int>(seq.begin() + t, seq.end()));
}

Word repeat_to_length(const Word& base, int length) {
    if (base.empty() && length > 0) throw SwitchingError("cannot repeat the empty word");
    std::vector<int> w;
    w.reserve(length);
    for (int k = 0; k < length; ++k) w.push_back(base[k % base.size()]);
    return Word(w);
}

bool is_homogeneous(const SwitchingStructure& s, int J) {
    return enumerate_words(s, 1, J).size() == 1;
}

}  // namespace smjls
