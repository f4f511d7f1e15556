#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "momdp/errors.hpp"
#include "momdp/model.hpp"
#include "momdp/rng.hpp"

namespace momdp::grid {

/// (row, col); row 0 is the northern edge.
struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

struct GoalRegion {
    std::vector<Cell> cells;
    /// Probability that the region holds a sample; 1 means the goal is certain.
    double prior = 1.0;
    bool operator==(const GoalRegion&) const = default;
};

struct UncertainRegion {
    std::vector<Cell> cells;
    double traversable_prior = 0.5;
    bool operator==(const UncertainRegion&) const = default;
};

enum class ObservationModel { Adjacency, Decay };

struct GridSpec {
    int width = 1;
    int height = 1;
    std::vector<Cell> obstacles;
    std::vector<GoalRegion> goals;
    std::vector<UncertainRegion> regions;
    ObservationModel obs_model = ObservationModel::Adjacency;
    std::size_t horizon = 0;
    Cell start;
    bool operator==(const GridSpec&) const = default;
};

enum Action : std::size_t { North = 0, South = 1, East = 2, West = 3 };
inline constexpr std::size_t kNumActions = 4;

inline const char* action_name(std::size_t a) {
    static const char* names[] = {"N", "S", "E", "W"};
    return a < kNumActions ? names[a] : "?";
}

/// Probability of a correct reading about one binary latent factor.
struct ReadingDistribution {
    double free = 0.5;     // reading says traversable / sample present
    double blocked = 0.5;  // reading says blocked / no sample
};

inline int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

inline int min_distance(Cell c, const std::vector<Cell>& cells) {
    int d = INT32_MAX;
    for (Cell x : cells) d = std::min(d, manhattan(c, x));
    return d;
}

/// Perfect when inside or cardinally adjacent, 0.8 one cell away diagonally,
/// uninformative otherwise.
inline double adjacency_accuracy(Cell c, const std::vector<Cell>& region) {
    bool diagonal = false;
    for (Cell x : region) {
        int dr = std::abs(c.row - x.row), dc = std::abs(c.col - x.col);
        if (dr + dc <= 1) return 1.0;
        if (dr == 1 && dc == 1) diagonal = true;
    }
    return diagonal ? 0.8 : 0.5;
}

inline ReadingDistribution adjacency_observation(Cell c, const std::vector<Cell>& region, bool traversable) {
    double acc = adjacency_accuracy(c, region);
    return traversable ? ReadingDistribution{acc, 1.0 - acc} : ReadingDistribution{1.0 - acc, acc};
}

/// Traversability reading accuracy at Manhattan distance d.
inline double decay_observation_region(double d) {
    if (d < 0) throw UsageError("distance must be nonnegative");
    return d <= 1.0 ? 1.0 : 0.5 + 0.3 * std::exp(-(d - 2.0) / 2.5);
}

/// Sample-presence reading accuracy at Manhattan distance d.
inline double decay_observation_goal(double d) {
    if (d < 0) throw UsageError("distance must be nonnegative");
    return d == 0.0 ? 1.0 : 0.5 + 0.25 * std::exp(-d / 1.5);
}

/// Compiled model plus the bookkeeping needed to interpret its indices.
struct CompiledGrid {
    MomdpModel model;
    GridSpec spec;
    std::size_t fail_state = 0;
    std::optional<std::size_t> success_state;  // present when some goal carries a sample bit
    std::size_t start_state = 0;
    Belief initial_belief;
    /// Latent factors in bit order: regions first, then uncertain goals.
    std::vector<double> factor_priors;
    std::vector<std::size_t> goal_bit;  // per goal: bit index, or npos when certain

    std::size_t num_cells() const { return static_cast<std::size_t>(spec.width * spec.height); }
    std::size_t state_of(Cell c) const { return static_cast<std::size_t>(c.row * spec.width + c.col); }
    std::optional<Cell> cell_of(std::size_t s) const {
        if (s >= num_cells()) return std::nullopt;
        return Cell{static_cast<int>(s) / spec.width, static_cast<int>(s) % spec.width};
    }
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// List every inconsistency in a spec; empty when it can be compiled.
inline std::vector<std::string> check_spec(const GridSpec& g) {
    std::vector<std::string> errs;
    auto cell_str = [](Cell c) { return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")"; };
    if (g.width < 1 || g.height < 1) {
        errs.push_back("grid must be at least 1x1");
        return errs;
    }
    auto in_bounds = [&](Cell c) { return c.row >= 0 && c.row < g.height && c.col >= 0 && c.col < g.width; };
    std::set<Cell> seen;
    auto claim = [&](Cell c, const std::string& what) {
        if (!in_bounds(c)) errs.push_back(what + " cell " + cell_str(c) + " out of bounds");
        else if (!seen.insert(c).second) errs.push_back(what + " cell " + cell_str(c) + " overlaps another feature");
    };
    for (Cell c : g.obstacles) claim(c, "obstacle");
    if (g.goals.empty()) errs.push_back("at least one goal region is required");
    for (std::size_t i = 0; i < g.goals.size(); ++i) {
        if (g.goals[i].cells.empty()) errs.push_back("goal " + std::to_string(i) + " has no cells");
        if (!(g.goals[i].prior >= 0.0 && g.goals[i].prior <= 1.0))
            errs.push_back("goal " + std::to_string(i) + " prior outside [0,1]");
        for (Cell c : g.goals[i].cells) claim(c, "goal");
    }
    for (std::size_t i = 0; i < g.regions.size(); ++i) {
        if (g.regions[i].cells.empty()) errs.push_back("region " + std::to_string(i + 1) + " has no cells");
        if (!(g.regions[i].traversable_prior >= 0.0 && g.regions[i].traversable_prior <= 1.0))
            errs.push_back("region " + std::to_string(i + 1) + " prior outside [0,1]");
        for (Cell c : g.regions[i].cells) claim(c, "region");
    }
    if (!in_bounds(g.start)) errs.push_back("start cell " + cell_str(g.start) + " out of bounds");
    if (std::find(g.obstacles.begin(), g.obstacles.end(), g.start) != g.obstacles.end())
        errs.push_back("start cell is an obstacle");
    for (const auto& r : g.regions)
        if (std::find(r.cells.begin(), r.cells.end(), g.start) != r.cells.end())
            errs.push_back("start cell lies in an uncertain region");
    std::size_t factors = g.regions.size();
    for (const auto& goal : g.goals) factors += goal.prior < 1.0 ? 1 : 0;
    if (factors > 12) errs.push_back("too many latent factors (" + std::to_string(factors) + "); at most 12");
    return errs;
}

/**
 * Compile a grid spec into a MOMDP.
 *
 * States are the cells (row-major), then an absorbing FAIL state, then an
 * absorbing SUCCESS state when any goal carries a sample bit. Latent state e
 * packs one bit per factor (1 = traversable / sample present); the environment
 * is static. Each observation packs one binary reading per factor.
 *
 * Moves into a known obstacle or off the grid leave the agent in place.
 * Entering a blocked uncertain cell leads to FAIL. With certain goals the goal
 * cells are the (absorbing) target; otherwise entering a goal cell whose sample
 * bit is set leads to SUCCESS, the only target.
 */
inline CompiledGrid compile_grid(const GridSpec& g) {
    auto errs = check_spec(g);
    if (!errs.empty()) {
        std::ostringstream os;
        os << "invalid grid spec:";
        for (const auto& e : errs) os << "\n  " << e;
        throw StructuralError(os.str());
    }

    CompiledGrid out;
    out.spec = g;
    const std::size_t cells = static_cast<std::size_t>(g.width * g.height);
    const std::size_t R = g.regions.size();
    std::vector<double> priors;
    for (const auto& r : g.regions) priors.push_back(r.traversable_prior);
    out.goal_bit.assign(g.goals.size(), CompiledGrid::npos);
    for (std::size_t i = 0; i < g.goals.size(); ++i) {
        if (g.goals[i].prior < 1.0) {
            out.goal_bit[i] = priors.size();
            priors.push_back(g.goals[i].prior);
        }
    }
    const bool sample_mode = priors.size() > R;
    const std::size_t m = priors.size();
    const std::size_t E = std::size_t{1} << m;
    const std::size_t Z = E;
    const std::size_t S = cells + 1 + (sample_mode ? 1 : 0);
    const std::size_t fail = cells;
    out.fail_state = fail;
    if (sample_mode) out.success_state = cells + 1;
    out.factor_priors = priors;

    // cell kinds
    enum Kind : int { Free, Obstacle, Region, Goal };
    std::vector<int> kind(cells, Free), owner(cells, -1);
    auto idx = [&](Cell c) { return static_cast<std::size_t>(c.row * g.width + c.col); };
    for (Cell c : g.obstacles) kind[idx(c)] = Obstacle;
    for (std::size_t i = 0; i < R; ++i)
        for (Cell c : g.regions[i].cells) kind[idx(c)] = Region, owner[idx(c)] = static_cast<int>(i);
    for (std::size_t i = 0; i < g.goals.size(); ++i)
        for (Cell c : g.goals[i].cells) kind[idx(c)] = Goal, owner[idx(c)] = static_cast<int>(i);

    MomdpModel model(S, E, kNumActions, Z, g.horizon);
    const int dr[] = {-1, 1, 0, 0};
    const int dc[] = {0, 0, 1, -1};
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t e = 0; e < E; ++e) {
            for (std::size_t a = 0; a < kNumActions; ++a) {
                std::size_t dest = s;
                const bool absorbing = s >= cells || kind[s] == Obstacle || (!sample_mode && kind[s] == Goal);
                if (!absorbing) {
                    Cell here{static_cast<int>(s) / g.width, static_cast<int>(s) % g.width};
                    Cell next{here.row + dr[a], here.col + dc[a]};
                    bool inside = next.row >= 0 && next.row < g.height && next.col >= 0 && next.col < g.width;
                    if (inside && kind[idx(next)] != Obstacle) {
                        std::size_t n = idx(next);
                        dest = n;
                        if (kind[n] == Region && !((e >> owner[n]) & 1U)) dest = fail;
                        if (sample_mode && kind[n] == Goal) {
                            std::size_t bit = out.goal_bit[static_cast<std::size_t>(owner[n])];
                            if (bit == CompiledGrid::npos || ((e >> bit) & 1U)) dest = *out.success_state;
                        }
                    }
                }
                model.ts(s, e, a, dest) = 1.0;
                for (std::size_t sp = 0; sp < S; ++sp) model.te(s, e, a, sp, e) = 1.0;
            }
        }
    }

    // per-(state, factor) reading accuracy
    std::vector<std::vector<double>> accuracy(S, std::vector<double>(m, 0.5));
    for (std::size_t s = 0; s < cells; ++s) {
        Cell c{static_cast<int>(s) / g.width, static_cast<int>(s) % g.width};
        for (std::size_t i = 0; i < R; ++i) {
            const auto& rc = g.regions[i].cells;
            accuracy[s][i] = g.obs_model == ObservationModel::Adjacency
                                 ? adjacency_accuracy(c, rc)
                                 : decay_observation_region(min_distance(c, rc));
        }
        for (std::size_t gi = 0; gi < g.goals.size(); ++gi) {
            std::size_t bit = out.goal_bit[gi];
            if (bit == CompiledGrid::npos) continue;
            const auto& gc = g.goals[gi].cells;
            accuracy[s][bit] = g.obs_model == ObservationModel::Adjacency
                                   ? adjacency_accuracy(c, gc)
                                   : decay_observation_goal(min_distance(c, gc));
        }
    }
    for (std::size_t sp = 0; sp < S; ++sp)
        for (std::size_t ep = 0; ep < E; ++ep)
            for (std::size_t z = 0; z < Z; ++z) {
                double p = 1.0;
                for (std::size_t i = 0; i < m; ++i) {
                    bool bit = (ep >> i) & 1U, reading = (z >> i) & 1U;
                    p *= bit == reading ? accuracy[sp][i] : 1.0 - accuracy[sp][i];
                }
                for (std::size_t a = 0; a < kNumActions; ++a) model.obs(sp, ep, a, z) = p;
            }

    std::vector<std::size_t> target;
    if (sample_mode) {
        target.push_back(*out.success_state);
    } else {
        for (const auto& goal : g.goals)
            for (Cell c : goal.cells) target.push_back(idx(c));
    }
    model.set_target(target);
    require_valid(model);

    std::vector<double> b0(E, 1.0);
    for (std::size_t e = 0; e < E; ++e)
        for (std::size_t i = 0; i < m; ++i) b0[e] *= ((e >> i) & 1U) ? priors[i] : 1.0 - priors[i];
    out.initial_belief = Belief::normalized(std::move(b0));
    out.start_state = idx(g.start);
    out.model = std::move(model);
    return out;
}

/// Independent Bernoulli draw of every latent factor with its prior.
inline std::size_t sample_environment(const CompiledGrid& cg, std::uint64_t seed) {
    CounterRng rng(seed);
    std::size_t e = 0;
    for (std::size_t i = 0; i < cg.factor_priors.size(); ++i)
        if (rng.bernoulli(cg.factor_priors[i])) e |= std::size_t{1} << i;
    return e;
}

inline std::size_t sample_environment(const GridSpec& spec, std::uint64_t seed) {
    CompiledGrid priors_only;
    for (const auto& r : spec.regions) priors_only.factor_priors.push_back(r.traversable_prior);
    for (const auto& goal : spec.goals)
        if (goal.prior < 1.0) priors_only.factor_priors.push_back(goal.prior);
    return sample_environment(priors_only, seed);
}

}  // namespace momdp::grid
