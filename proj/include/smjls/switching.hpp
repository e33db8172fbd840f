#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace smjls {

/// Finite window (psi(k+1), ..., psi(k+M)) of a switching sequence, oldest
/// symbol first. Symbols are 0-based internally.
struct Word {
    std::vector<int> symbols;

    Word() = default;
    explicit Word(std::vector<int> s) : symbols(std::move(s)) {}

    std::size_t size() const { return symbols.size(); }
    bool empty() const { return symbols.empty(); }
    int operator[](std::size_t k) const { return symbols[k]; }

    auto operator<=>(const Word&) const = default;
    bool operator==(const Word&) const = default;
};

/// 1-based rendering, "(1,2,1)"; the empty word renders as "()".
std::string to_string(const Word& w);

struct AllSequences {
    bool operator==(const AllSequences&) const = default;
};

/// Sequences generated by walks on a directed graph over the symbols.
struct GraphSwitching {
    std::set<std::pair<int, int>> edges;
    bool operator==(const GraphSwitching&) const = default;
};

/// The single sequence prefix, period, period, ...
struct PeriodicSwitching {
    std::vector<int> prefix;
    std::vector<int> period;
    bool operator==(const PeriodicSwitching&) const = default;
};

using SwitchingStructure = std::variant<AllSequences, GraphSwitching, PeriodicSwitching>;

class SwitchingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Checks symbols against the alphabet {0..J-1}, prunes dead graph nodes and
/// returns the structure that enumeration actually works with.
SwitchingStructure normalized(const SwitchingStructure& s, int J);

/// Graph nodes that survive iterative removal of out-degree-0 nodes.
std::set<int> live_nodes(const GraphSwitching& g);

/// Psi_M: every length-M window of some admissible sequence.
std::set<Word> enumerate_words(const SwitchingStructure& s, int M, int J);

struct WordSplit {
    Word prefix;
    Word suffix;
    int head;
};

/// (r1..r_{M+1}) -> prefix (r1..rM), suffix (r2..r_{M+1}), head r1.
WordSplit split_word(const Word& w);

/// True iff w is a window of some admissible sequence.
bool is_admissible(const SwitchingStructure& s, int J, const Word& w);

/// Base words u with |u| <= max_period whose repetition u u u ... is an
/// admissible sequence (up to the transient of a periodic structure).
std::vector<Word> periodic_windows(const SwitchingStructure& s, int J, int max_period);

/// Length-`length` admissible window, uniformly random over starting nodes
/// and successors.
Word random_admissible_word(const SwitchingStructure& s, int J, int length, std::mt19937_64& rng);

/// Repeats `base` until it has `length` symbols.
Word repeat_to_length(const Word& base, int length);

/// True when every admissible sequence is the same constant sequence, which
/// reduces the switched system to one time-homogeneous chain.
bool is_homogeneous(const SwitchingStructure& s, int J);

}  // namespace smjls
