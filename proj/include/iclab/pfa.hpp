#pragma once

#include <algorithm>
#include <bitset>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iclab/regime.hpp"
#include "iclab/rng.hpp"

namespace iclab {

// Probabilistic finite automaton for one input symbol. Every stored edge has
// positive probability and a deterministic successor.
struct Pfa {
    struct Edge {
        char letter = 0;
        double prob = 0.0;
        int next = 0;
    };

    int n_states = 0;
    int start = 0;
    std::vector<std::vector<Edge>> edges;  // per state

    void validate() const {
        if (n_states < 1) throw std::invalid_argument("Pfa: n_states must be >= 1");
        if (start < 0 || start >= n_states) throw std::invalid_argument("Pfa: start out of range");
        if (static_cast<int>(edges.size()) != n_states)
            throw std::invalid_argument("Pfa: edge table size mismatch");
        for (const auto& st : edges) {
            if (st.empty()) throw std::invalid_argument("Pfa: emission support must be >= 1");
            double total = 0.0;
            for (std::size_t i = 0; i < st.size(); ++i) {
                if (!(st[i].prob > 0.0)) throw std::invalid_argument("Pfa: probabilities must be positive");
                if (st[i].next < 0 || st[i].next >= n_states)
                    throw std::invalid_argument("Pfa: successor out of range");
                for (std::size_t j = i + 1; j < st.size(); ++j)
                    if (st[i].letter == st[j].letter)
                        throw std::invalid_argument("Pfa: duplicate letter in one state");
                total += st[i].prob;
            }
            if (std::abs(total - 1.0) > 1e-12)
                throw std::invalid_argument("Pfa: probabilities must sum to 1");
        }
    }

    char sample_step(int& state, RngStream& rng) const {
        const auto& st = edges[static_cast<std::size_t>(state)];
        const double u = rng.uniform01();
        double cum = 0.0;
        for (const auto& e : st) {
            cum += e.prob;
            if (u < cum) {
                state = e.next;
                return e.letter;
            }
        }
        state = st.back().next;
        return st.back().letter;
    }

    std::string emit(int length, RngStream& rng) const {
        std::string out;
        out.reserve(static_cast<std::size_t>(length));
        int state = start;
        for (int i = 0; i < length; ++i) out.push_back(sample_step(state, rng));
        return out;
    }
};

// Longest prefix of `window` that has a positive-probability emission path
// from the start state; set-of-states walk over the (position, state) graph.
inline int max_accepted_len(const Pfa& pfa, std::string_view window) {
    std::vector<char> current(static_cast<std::size_t>(pfa.n_states), 0);
    current[static_cast<std::size_t>(pfa.start)] = 1;
    for (std::size_t pos = 0; pos < window.size(); ++pos) {
        std::vector<char> next(static_cast<std::size_t>(pfa.n_states), 0);
        bool any = false;
        for (int s = 0; s < pfa.n_states; ++s) {
            if (!current[static_cast<std::size_t>(s)]) continue;
            for (const auto& e : pfa.edges[static_cast<std::size_t>(s)]) {
                if (e.letter == window[pos]) {
                    next[static_cast<std::size_t>(e.next)] = 1;
                    any = true;
                }
            }
        }
        if (!any) return static_cast<int>(pos);
        current = std::move(next);
    }
    return static_cast<int>(window.size());
}

// Immutable per-symbol PFA table. Symbol i draws its automaton from the
// substream (seed, stream_base + i), so a table of size 12 is a prefix of the
// size-25 table built from the same seed.
struct SymbolTable {
    std::string symbols;
    std::string alphabet;
    std::vector<Pfa> pfas;

    bool has(char sym) const { return symbols.find(sym) != std::string::npos; }

    const Pfa& of(char sym) const {
        const auto pos = symbols.find(sym);
        if (pos == std::string::npos)
            throw std::invalid_argument(std::string("SymbolTable: unknown symbol '") + sym + "'");
        return pfas[pos];
    }
};

inline constexpr std::uint64_t kPfaStreamBase = 0x5FA0ull;

inline SymbolTable make_symbol_table(int vocab_size, int n_states, const std::string& alphabet,
                                     std::uint64_t seed) {
    if (vocab_size < 2 || vocab_size > 26)
        throw std::invalid_argument("make_symbol_table: vocab_size must lie in [2,26]");
    if (n_states < 1) throw std::invalid_argument("make_symbol_table: n_states must be >= 1");
    if (alphabet.size() < 2) throw std::invalid_argument("make_symbol_table: alphabet size must be >= 2");
    for (char ch : alphabet)
        if (ch == ':' || ch == ' ' || ch == '\n' || ch == '\t')
            throw std::invalid_argument("make_symbol_table: alphabet must not contain ':' or whitespace");
    for (std::size_t i = 0; i < alphabet.size(); ++i)
        for (std::size_t j = i + 1; j < alphabet.size(); ++j)
            if (alphabet[i] == alphabet[j])
                throw std::invalid_argument("make_symbol_table: alphabet letters must be distinct");

    const int support = std::min<int>(2, static_cast<int>(alphabet.size()));

    SymbolTable table;
    table.alphabet = alphabet;
    for (int v = 0; v < vocab_size; ++v) {
        table.symbols.push_back(static_cast<char>('A' + v));
        RngStream rng(seed, kPfaStreamBase + static_cast<std::uint64_t>(v));
        Pfa pfa;
        pfa.n_states = n_states;
        pfa.start = 0;
        pfa.edges.resize(static_cast<std::size_t>(n_states));
        for (int s = 0; s < n_states; ++s) {
            std::vector<int> letter_idx;
            while (static_cast<int>(letter_idx.size()) < support) {
                const int c = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(alphabet.size()) - 1));
                if (std::find(letter_idx.begin(), letter_idx.end(), c) == letter_idx.end())
                    letter_idx.push_back(c);
            }
            std::vector<double> raw(letter_idx.size());
            double total = 0.0;
            for (auto& r : raw) {
                do { r = rng.uniform01(); } while (r <= 1e-9);
                total += r;
            }
            auto& st = pfa.edges[static_cast<std::size_t>(s)];
            for (std::size_t i = 0; i < letter_idx.size(); ++i) {
                Pfa::Edge e;
                e.letter = alphabet[static_cast<std::size_t>(letter_idx[i])];
                e.prob = raw[i] / total;
                e.next = static_cast<int>(rng.uniform_int(0, n_states - 1));
                st.push_back(e);
            }
            // pin the exact sum so validate()'s 1e-12 check is meaningful
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < st.size(); ++i) acc += st[i].prob;
            st.back().prob = 1.0 - acc;
        }
        pfa.validate();
        table.pfas.push_back(std::move(pfa));
    }
    return table;
}

// Input length m, emission length c per symbol, alignment permutation pi.
// Output window j is emitted by the PFA of symbol x[pi[j]].
struct AlignmentTask {
    int m = 0;
    int c = 0;
    std::vector<int> perm;

    void validate() const {
        if (m < 1 || c < 1) throw std::invalid_argument("AlignmentTask: m and c must be >= 1");
        if (static_cast<int>(perm.size()) != m)
            throw std::invalid_argument("AlignmentTask: permutation length mismatch");
        std::vector<char> seen(static_cast<std::size_t>(m), 0);
        for (int v : perm) {
            if (v < 0 || v >= m || seen[static_cast<std::size_t>(v)])
                throw std::invalid_argument("AlignmentTask: perm is not a bijection on [m]");
            seen[static_cast<std::size_t>(v)] = 1;
        }
    }
};

inline AlignmentTask make_alignment_task(int m, int c, RngStream& rng) {
    AlignmentTask t;
    t.m = m;
    t.c = c;
    t.perm.resize(static_cast<std::size_t>(m));
    std::iota(t.perm.begin(), t.perm.end(), 0);
    for (int i = m - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
        std::swap(t.perm[static_cast<std::size_t>(i)], t.perm[j]);
    }
    t.validate();
    return t;
}

struct PfaInstance {
    std::string x;  // length m
    std::string y;  // length m*c
};

inline PfaInstance gen_instance(const SymbolTable& table, const AlignmentTask& task,
                                const std::string& symbols, RngStream& rng) {
    task.validate();
    if (static_cast<int>(symbols.size()) != task.m)
        throw std::invalid_argument("gen_instance: symbol string length must equal m");
    for (char s : symbols)
        if (!table.has(s)) throw std::invalid_argument(std::string("gen_instance: unknown symbol '") + s + "'");
    PfaInstance inst;
    inst.x = symbols;
    inst.y.reserve(static_cast<std::size_t>(task.m * task.c));
    for (int j = 0; j < task.m; ++j)
        inst.y += table.of(symbols[static_cast<std::size_t>(task.perm[static_cast<std::size_t>(j)])]).emit(task.c, rng);
    return inst;
}

// Mean over the m input symbols of the maximum accepted prefix length of the
// corresponding output window. Short predictions give short final windows;
// anything past m*c is ignored.
inline double score_output(const SymbolTable& table, const AlignmentTask& task,
                           const std::string& x, const std::string& prediction) {
    task.validate();
    if (static_cast<int>(x.size()) != task.m)
        throw std::invalid_argument("score_output: |x| must equal m");
    double total = 0.0;
    for (int j = 0; j < task.m; ++j) {
        const auto begin = static_cast<std::size_t>(j * task.c);
        std::string_view window;
        if (begin < prediction.size())
            window = std::string_view(prediction).substr(begin, static_cast<std::size_t>(task.c));
        total += max_accepted_len(table.of(x[static_cast<std::size_t>(task.perm[static_cast<std::size_t>(j)])]), window);
    }
    return total / static_cast<double>(task.m);
}

inline double jaccard_letters(std::string_view a, std::string_view b) {
    std::bitset<256> sa, sb;
    for (char ch : a) sa.set(static_cast<unsigned char>(ch));
    for (char ch : b) sb.set(static_cast<unsigned char>(ch));
    const auto uni = (sa | sb).count();
    if (uni == 0) return 0.0;
    return static_cast<double>((sa & sb).count()) / static_cast<double>(uni);
}

// Paraphrase of an input string: a uniform shuffle of its letters.
inline std::string letter_shuffle(const std::string& x, RngStream& rng) {
    std::string out = x;
    for (int i = static_cast<int>(out.size()) - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
        std::swap(out[static_cast<std::size_t>(i)], out[j]);
    }
    return out;
}

// Prompt line `X1: Y1 X2: Y2 ... Xk: Yk X*:` -- fixed wire format.
inline std::string format_prompt(const std::vector<PfaInstance>& context, const std::string& x_star) {
    std::string out;
    for (const auto& p : context) {
        out += p.x;
        out += ": ";
        out += p.y;
        out += ' ';
    }
    out += x_star;
    out += ':';
    return out;
}

struct CorpusInstance {
    std::vector<PfaInstance> context;
    std::string x_star;
    std::string y_star;
    RegimeKind regime = RegimeKind::RANDOM;  // mixture component of this draw
    int paraphrase_slot = -1;                // letter-shuffle slot, -1 if none
    bool synthetic_near = false;             // epsilon-injected
    std::vector<double> jaccard;             // per context example, vs x_star

    std::string prompt() const { return format_prompt(context, x_star); }
};

namespace detail {

inline std::string draw_symbols(const SymbolTable& table, int m, RngStream& rng) {
    std::string s;
    s.reserve(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        s.push_back(table.symbols[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(table.symbols.size()) - 1))]);
    return s;
}

}  // namespace detail

// Regime-controlled corpus generation. `table_full` drives all generation;
// `table_similar` only narrows the symbol vocabulary of similar draws and
// must be a prefix-consistent restriction of `table_full`. The letter
// shuffle of x* serves as the synthetic near example.
inline std::vector<CorpusInstance> build_corpus(RegimeKind kind, int count,
                                                const SymbolTable& table_full,
                                                const SymbolTable& table_similar,
                                                const AlignmentTask& task,
                                                const RegimeParams& params, RngStream& rng) {
    if (count <= 0) throw std::invalid_argument("build_corpus: count must be > 0");
    params.validate();
    task.validate();
    for (char s : table_similar.symbols)
        if (!table_full.has(s))
            throw std::invalid_argument("build_corpus: similar vocabulary must be contained in the full one");

    std::vector<CorpusInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        const int k = static_cast<int>(rng.uniform_int(params.k_min, params.k_max));

        RegimeKind component = kind;
        if (kind == RegimeKind::RAND_SIM_MIX)
            component = rng.bernoulli(0.5) ? RegimeKind::RANDOM : RegimeKind::SIMILAR;
        else if (kind == RegimeKind::CONTRASTIVE) {
            const double u = rng.uniform01();
            component = u < 1.0 - params.p
                            ? RegimeKind::RANDOM
                            : (u < 1.0 - params.p / 2.0 ? RegimeKind::SIMILAR : RegimeKind::ONE_NEAR);
        }

        const SymbolTable& vocab =
            component == RegimeKind::SIMILAR ? table_similar : table_full;

        CorpusInstance inst;
        inst.regime = component;
        inst.x_star = detail::draw_symbols(vocab, task.m, rng);
        inst.y_star = gen_instance(table_full, task, inst.x_star, rng).y;

        const int near_slot = component == RegimeKind::ONE_NEAR
                                  ? static_cast<int>(rng.uniform_int(0, k - 1))
                                  : -1;
        for (int i = 0; i < k; ++i) {
            if (i == near_slot) {
                const std::string para = letter_shuffle(inst.x_star, rng);
                inst.context.push_back(gen_instance(table_full, task, para, rng));
                inst.paraphrase_slot = i;
            } else {
                inst.context.push_back(
                    gen_instance(table_full, task, detail::draw_symbols(vocab, task.m, rng), rng));
            }
        }

        if (kind == RegimeKind::CONTRASTIVE && rng.bernoulli(params.epsilon)) {
            const int slot = near_slot >= 0 ? near_slot
                                            : static_cast<int>(rng.uniform_int(0, k - 1));
            const std::string para = letter_shuffle(inst.x_star, rng);
            inst.context[static_cast<std::size_t>(slot)] = gen_instance(table_full, task, para, rng);
            inst.paraphrase_slot = slot;
            inst.synthetic_near = true;
        }

        for (const auto& p : inst.context) inst.jaccard.push_back(jaccard_letters(p.x, inst.x_star));
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace iclab
