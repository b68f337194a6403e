#pragma once

/// @file genealogy.hpp
/// @brief Genealogical graph over dominant-parent edges and Event Takeover Values.
///
/// Nodes are the individuals (i, j), i = 1..N_j, of a generational run. Each
/// non-root node has one edge to its dominant parent in generation j-1, so
/// the graph is a forest whose roots are generation 1, uncoupled insertions
/// and detached nodes.
///
/// ETVgen(a, g) counts the generation-g nodes whose parent chain reaches a;
/// ETV(a) at horizon t is max(1, max over g in (j, t] of ETVgen(a, g)),
/// optionally capped per generation at an edge limit.
///
/// Hitchhiking detachment: generations are swept oldest first. If at
/// generation g every living descendant of a comes through the same child c,
/// the edge a -> c is cut at g. a accrues nothing from g on (its ETV freezes)
/// and c becomes a root. Cuts are decided bottom-up within a generation, so
/// an ancestor whose only remaining lineage was just cut sees that lineage
/// as extinct.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <genlab/ga_engine.hpp>

namespace genlab {

class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline std::string to_string(NodeId id) {
    return "(" + std::to_string(id.i) + "," + std::to_string(id.j) + ")";
}

class GenealogyGraph {
  public:
    static constexpr std::int64_t no_parent = -1;

    /// Ingests a record stream; generation j must hold births i = 1..N_j.
    static GenealogyGraph build(std::span<const BirthRecord> records) {
        if (records.empty()) {
            throw IngestError("empty record stream");
        }
        int generations = 0;
        for (const auto& r : records) {
            if (r.child.j < 1) {
                throw IngestError("generation index must be >= 1 for " + to_string(r.child));
            }
            generations = std::max(generations, r.child.j);
        }
        GenealogyGraph g;
        g.generations_ = generations;
        std::vector<std::size_t> per_generation(static_cast<std::size_t>(generations) + 1, 0);
        for (const auto& r : records) {
            if (r.child.i < 1) {
                throw IngestError("birth index out of range for " + to_string(r.child));
            }
            ++per_generation[static_cast<std::size_t>(r.child.j)];
        }
        g.offset_.assign(static_cast<std::size_t>(generations) + 1, 0);
        for (int j = 1; j <= generations; ++j) {
            const std::size_t count = per_generation[static_cast<std::size_t>(j)];
            if (count == 0) {
                throw IngestError("generation " + std::to_string(j) + " has no records");
            }
            g.offset_[static_cast<std::size_t>(j)] = g.offset_[static_cast<std::size_t>(j) - 1] + count;
            g.n_ = std::max(g.n_, count);
        }

        const std::size_t total = g.offset_.back();
        g.parent_.assign(total, no_parent);
        g.children_.assign(total, {});
        g.root_.assign(total, 0);
        g.clone_.assign(total, 0);
        std::vector<char> seen(total, 0);

        for (const auto& r : records) {
            if (static_cast<std::size_t>(r.child.i) > g.generation_size(r.child.j)) {
                throw IngestError("birth index out of range for " + to_string(r.child));
            }
            const std::size_t idx = g.index_unchecked(r.child);
            if (seen[idx]) {
                throw IngestError("duplicate node " + to_string(r.child));
            }
            seen[idx] = 1;
            g.clone_[idx] = r.is_clone ? 1 : 0;
            if (r.uncoupled && r.dominant_parent) {
                throw IngestError("uncoupled node " + to_string(r.child) + " names a parent");
            }
            if (!r.dominant_parent) {
                g.root_[idx] = 1;
                continue;
            }
            const NodeId p = *r.dominant_parent;
            if (p.j != r.child.j - 1 || p.j < 1 || p.i < 1 ||
                static_cast<std::size_t>(p.i) > g.generation_size(p.j)) {
                throw IngestError("node " + to_string(r.child) + " references nonexistent parent " +
                                  to_string(p));
            }
            g.parent_[idx] = static_cast<std::int64_t>(g.index_unchecked(p));
        }
        for (std::size_t idx = 0; idx < total; ++idx) {
            if (g.parent_[idx] != no_parent) {
                g.children_[static_cast<std::size_t>(g.parent_[idx])].push_back(idx);
            }
        }
        return g;
    }

    /// Largest generation size; the upper bound on any ETV.
    std::size_t population() const noexcept { return n_; }
    int generations() const noexcept { return generations_; }
    std::size_t size() const noexcept { return parent_.size(); }
    std::size_t generation_size(int j) const {
        return offset_.at(static_cast<std::size_t>(j)) - offset_.at(static_cast<std::size_t>(j) - 1);
    }
    /// Index of the first node of generation j; nodes of j occupy [begin(j), begin(j + 1)).
    std::size_t generation_begin(int j) const { return offset_.at(static_cast<std::size_t>(j) - 1); }
    std::span<const std::size_t> offsets() const noexcept { return offset_; }

    std::size_t index(NodeId id) const {
        if (id.j < 1 || id.j > generations_ || id.i < 1 ||
            static_cast<std::size_t>(id.i) > generation_size(id.j)) {
            throw std::out_of_range("unknown node " + to_string(id));
        }
        return index_unchecked(id);
    }

    NodeId id(std::size_t idx) const noexcept {
        const int j = generation(idx);
        return NodeId{static_cast<int>(idx - offset_[static_cast<std::size_t>(j) - 1]) + 1, j};
    }

    int generation(std::size_t idx) const noexcept {
        return static_cast<int>(std::upper_bound(offset_.begin(), offset_.end(), idx) - offset_.begin());
    }

    /// Live parent edge, if any.
    std::optional<std::size_t> parent(std::size_t idx) const {
        if (parent_[idx] == no_parent) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(parent_[idx]);
    }

    std::span<const std::int64_t> parent_links() const noexcept { return parent_; }
    const std::vector<std::size_t>& children(std::size_t idx) const { return children_[idx]; }
    bool is_root(std::size_t idx) const noexcept { return root_[idx] != 0; }
    bool is_clone(std::size_t idx) const noexcept { return clone_[idx] != 0; }

    std::size_t edge_count() const noexcept {
        return static_cast<std::size_t>(
            std::count_if(parent_.begin(), parent_.end(), [](auto p) { return p != no_parent; }));
    }

    std::size_t root_count() const noexcept {
        return static_cast<std::size_t>(std::count(root_.begin(), root_.end(), 1));
    }

    /// Cuts the edge above `child`; the child becomes an uncoupled root.
    void detach(std::size_t child) {
        if (parent_[child] == no_parent) {
            return;
        }
        auto& siblings = children_[static_cast<std::size_t>(parent_[child])];
        siblings.erase(std::remove(siblings.begin(), siblings.end(), child), siblings.end());
        parent_[child] = no_parent;
        root_[child] = 1;
    }

  private:
    std::size_t index_unchecked(NodeId id) const noexcept {
        return offset_[static_cast<std::size_t>(id.j) - 1] + static_cast<std::size_t>(id.i - 1);
    }

    std::size_t n_ = 0;
    int generations_ = 0;
    std::vector<std::size_t> offset_; // offset_[j] = nodes in generations 1..j
    std::vector<std::int64_t> parent_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<char> root_;
    std::vector<char> clone_;
};

inline GenealogyGraph build_graph(std::span<const BirthRecord> records) {
    return GenealogyGraph::build(records);
}

/// Number of generation-`gen` nodes whose live parent chain reaches `ancestor`.
inline std::size_t etvgen(const GenealogyGraph& g, NodeId ancestor, int gen) {
    const std::size_t target = g.index(ancestor);
    if (gen <= ancestor.j || gen > g.generations()) {
        throw std::invalid_argument("etvgen: generation must satisfy ancestor.j < gen <= horizon");
    }
    std::size_t count = 0;
    for (std::size_t idx = g.generation_begin(gen); idx < g.generation_begin(gen + 1); ++idx) {
        std::optional<std::size_t> cur = idx;
        while (cur && g.generation(*cur) > ancestor.j) {
            cur = g.parent(*cur);
        }
        if (cur && *cur == target) {
            ++count;
        }
    }
    return count;
}

/// ETV per node for all generations up to `horizon`.
class EtvTable {
  public:
    EtvTable() = default;

    /// Uniform generations of `population` nodes each.
    EtvTable(int horizon, std::size_t population, std::vector<std::uint32_t> values)
        : horizon_(horizon), population_(population), values_(std::move(values)) {
        for (int j = 0; j <= horizon; ++j) {
            offset_.push_back(static_cast<std::size_t>(j) * population);
        }
        check();
    }

    /// `offsets[j]` = number of nodes in generations 1..j, offsets[0] = 0.
    EtvTable(int horizon, std::vector<std::size_t> offsets, std::vector<std::uint32_t> values)
        : horizon_(horizon), offset_(std::move(offsets)), values_(std::move(values)) {
        for (std::size_t j = 1; j < offset_.size(); ++j) {
            population_ = std::max(population_, offset_[j] - offset_[j - 1]);
        }
        check();
    }

    int horizon() const noexcept { return horizon_; }
    std::size_t population() const noexcept { return population_; }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const std::uint32_t> values() const noexcept { return values_; }

    NodeId id(std::size_t k) const noexcept {
        const auto j = static_cast<int>(std::upper_bound(offset_.begin(), offset_.end(), k) - offset_.begin());
        return NodeId{static_cast<int>(k - offset_[static_cast<std::size_t>(j) - 1]) + 1, j};
    }

    std::uint32_t at(NodeId id) const {
        if (id.j < 1 || id.j > horizon_ || id.i < 1 ||
            static_cast<std::size_t>(id.i) > offset_[static_cast<std::size_t>(id.j)] -
                                                   offset_[static_cast<std::size_t>(id.j) - 1]) {
            throw std::out_of_range("node " + to_string(id) + " outside the ETV table");
        }
        return values_[offset_[static_cast<std::size_t>(id.j) - 1] + static_cast<std::size_t>(id.i - 1)];
    }

    std::uint32_t max() const { return values_.empty() ? 0 : *std::max_element(values_.begin(), values_.end()); }
    std::uint32_t min() const { return values_.empty() ? 0 : *std::min_element(values_.begin(), values_.end()); }

    bool operator==(const EtvTable&) const = default;

  private:
    void check() const {
        if (offset_.size() != static_cast<std::size_t>(horizon_) + 1 || offset_.back() != values_.size()) {
            throw std::invalid_argument("EtvTable: value count does not match the generation layout");
        }
    }

    int horizon_ = 0;
    std::size_t population_ = 0;
    std::vector<std::size_t> offset_;
    std::vector<std::uint32_t> values_;
};

struct EtvOptions {
    std::optional<std::uint32_t> edge_cap;
    bool detach = true;
};

struct CutEdge {
    NodeId parent;
    NodeId child;
    int generation = 0; // first generation at which the parent stops accruing

    bool operator==(const CutEdge&) const = default;
};

/// Forward sweep over generations that keeps running ETV maxima, so snapshots
/// at increasing horizons come out of a single pass. The graph itself is not
/// modified; cuts live in the sweep's own copy of the parent links.
class EtvSweep {
  public:
    EtvSweep(const GenealogyGraph& g, EtvOptions options)
        : graph_(&g), options_(options), parent_(g.parent_links().begin(), g.parent_links().end()),
          best_(g.size(), 0), count_(g.size(), 0), arrivals_(g.size(), 0), via_(g.size(), 0) {}

    int horizon() const noexcept { return horizon_; }
    const std::vector<CutEdge>& cuts() const noexcept { return cuts_; }

    void advance_to(int t) {
        if (t < horizon_ || t > graph_->generations()) {
            throw std::invalid_argument("advance_to: horizon must be in [current, generations]");
        }
        while (horizon_ < t) {
            ++horizon_;
            sweep_generation(horizon_);
        }
    }

    EtvTable snapshot() const {
        const auto offsets = graph_->offsets();
        const std::size_t count = offsets[static_cast<std::size_t>(horizon_)];
        std::vector<std::uint32_t> values(count);
        for (std::size_t idx = 0; idx < count; ++idx) {
            values[idx] = std::max<std::uint32_t>(1, best_[idx]);
        }
        return EtvTable(horizon_, std::vector<std::size_t>(offsets.begin(), offsets.begin() + horizon_ + 1),
                        std::move(values));
    }

  private:
    void sweep_generation(int g) {
        level_.clear();
        for (std::size_t idx = graph_->generation_begin(g); idx < graph_->generation_begin(g + 1); ++idx) {
            count_[idx] = 1;
            level_.push_back(idx);
        }
        touched_.assign(level_.begin(), level_.end());

        while (!level_.empty()) {
            next_.clear();
            for (std::size_t v : level_) {
                const std::int64_t p = parent_[v];
                if (p == GenealogyGraph::no_parent) {
                    continue;
                }
                const auto pu = static_cast<std::size_t>(p);
                if (arrivals_[pu] == 0) {
                    next_.push_back(pu);
                    touched_.push_back(pu);
                    via_[pu] = v;
                }
                ++arrivals_[pu];
                count_[pu] += count_[v];
            }
            level_.clear();
            for (std::size_t p : next_) {
                if (options_.detach && arrivals_[p] == 1) {
                    const std::size_t child = via_[p];
                    parent_[child] = GenealogyGraph::no_parent;
                    cuts_.push_back(CutEdge{graph_->id(p), graph_->id(child), g});
                    continue;
                }
                std::uint32_t value = count_[p];
                if (options_.edge_cap) {
                    value = std::min(value, *options_.edge_cap);
                }
                best_[p] = std::max(best_[p], value);
                level_.push_back(p);
            }
        }
        for (std::size_t idx : touched_) {
            count_[idx] = 0;
            arrivals_[idx] = 0;
        }
    }

    const GenealogyGraph* graph_;
    EtvOptions options_;
    int horizon_ = 1;
    std::vector<std::int64_t> parent_;
    std::vector<std::uint32_t> best_;
    std::vector<std::uint32_t> count_;
    std::vector<std::uint32_t> arrivals_;
    std::vector<std::size_t> via_;
    std::vector<std::size_t> level_;
    std::vector<std::size_t> next_;
    std::vector<std::size_t> touched_;
    std::vector<CutEdge> cuts_;
};

inline EtvTable compute_etv_snapshot(const GenealogyGraph& g, int t, EtvOptions options = {}) {
    if (t < 1 || t > g.generations()) {
        throw std::invalid_argument("compute_etv_snapshot: horizon outside recorded generations");
    }
    EtvSweep sweep(g, options);
    sweep.advance_to(t);
    return sweep.snapshot();
}

/// Runs the detachment sweep through `upto` and applies its cuts to `g`.
inline std::vector<CutEdge> detach_hitchhikers(GenealogyGraph& g, int upto) {
    EtvSweep sweep(g, EtvOptions{std::nullopt, true});
    sweep.advance_to(upto);
    for (const auto& cut : sweep.cuts()) {
        g.detach(g.index(cut.child));
    }
    return sweep.cuts();
}

inline void write_etv_table(std::ostream& out, const EtvTable& table) {
    out << "# node(i,j)\tetv\thorizon=" << table.horizon() << '\n';
    for (std::size_t k = 0; k < table.size(); ++k) {
        const NodeId id = table.id(k);
        out << id.i << ',' << id.j << '\t' << table.values()[k] << '\n';
    }
}

} // namespace genlab
