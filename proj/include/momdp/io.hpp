#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "momdp/errors.hpp"
#include "momdp/gridworld.hpp"
#include "momdp/model.hpp"
#include "momdp/point_based.hpp"
#include "momdp/support.hpp"

// JSON readers and writers. Numbers are written in shortest round-trip form,
// so write -> read -> write reproduces the same text.

namespace momdp::io {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path);
    out << text;
}

inline json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw StructuralError(std::string("malformed JSON: ") + e.what());
    }
}

namespace detail {

template <class T>
T field(const json& j, const char* name) {
    if (!j.contains(name)) throw StructuralError(std::string("missing field '") + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw StructuralError(std::string("field '") + name + "': " + e.what());
    }
}

// Flatten a nested array of the given shape, checking every extent.
inline void flatten(const json& j, const std::vector<std::size_t>& shape, std::size_t depth, const char* name,
                    std::vector<double>& out) {
    if (depth == shape.size()) {
        if (!j.is_number()) throw StructuralError(std::string("table ") + name + ": non-numeric entry");
        out.push_back(j.get<double>());
        return;
    }
    if (!j.is_array() || j.size() != shape[depth]) {
        std::ostringstream os;
        os << "table " << name << ": dimension " << depth << " has extent "
           << (j.is_array() ? std::to_string(j.size()) : std::string("<not an array>")) << ", expected "
           << shape[depth];
        throw StructuralError(os.str());
    }
    for (const auto& x : j) flatten(x, shape, depth + 1, name, out);
}

inline json nest(std::span<const double> flat, const std::vector<std::size_t>& shape, std::size_t depth,
                 std::size_t& pos) {
    json arr = json::array();
    for (std::size_t i = 0; i < shape[depth]; ++i) {
        if (depth + 1 == shape.size()) arr.push_back(flat[pos++]);
        else arr.push_back(nest(flat, shape, depth + 1, pos));
    }
    return arr;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Model

inline json model_to_json(const MomdpModel& m) {
    const std::size_t S = m.num_s(), E = m.num_e(), A = m.num_a(), Z = m.num_z();
    std::size_t p1 = 0, p2 = 0, p3 = 0;
    json j;
    j["num_s"] = S;
    j["num_e"] = E;
    j["num_a"] = A;
    j["num_z"] = Z;
    j["t_s"] = detail::nest(m.t_s_table(), {S, E, A, S}, 0, p1);
    j["t_e"] = detail::nest(m.t_e_table(), {S, E, A, S, E}, 0, p2);
    j["obs"] = detail::nest(m.obs_table(), {S, E, A, Z}, 0, p3);
    j["target"] = m.target();
    j["horizon"] = m.horizon();
    return j;
}

/// Throws StructuralError on shape mismatches. Stochasticity is not checked here.
inline MomdpModel model_from_json(const json& j) {
    auto S = detail::field<std::size_t>(j, "num_s");
    auto E = detail::field<std::size_t>(j, "num_e");
    auto A = detail::field<std::size_t>(j, "num_a");
    auto Z = detail::field<std::size_t>(j, "num_z");
    if (!j.contains("t_s") || !j.contains("t_e") || !j.contains("obs"))
        throw StructuralError("model needs t_s, t_e and obs tables");
    std::vector<double> ts, te, ob;
    detail::flatten(j["t_s"], {S, E, A, S}, 0, "t_s", ts);
    detail::flatten(j["t_e"], {S, E, A, S, E}, 0, "t_e", te);
    detail::flatten(j["obs"], {S, E, A, Z}, 0, "obs", ob);
    auto target = detail::field<std::vector<std::size_t>>(j, "target");
    auto horizon = detail::field<std::size_t>(j, "horizon");
    return MomdpModel::from_tables(S, E, A, Z, std::move(ts), std::move(te), std::move(ob), target, horizon);
}

inline std::string write_model(const MomdpModel& m) { return model_to_json(m).dump() + "\n"; }
inline MomdpModel read_model(const std::string& text) { return model_from_json(parse(text)); }

// ---------------------------------------------------------------------------
// Gamma stacks

inline json stack_to_json(const GammaStack& st) {
    json j;
    j["flavor"] = to_string(st.flavor);
    j["variant"] = to_string(st.variant);
    j["tie_tol"] = st.tie_tol;
    j["horizon"] = st.horizon();
    json stages = json::array();
    for (std::size_t k = 0; k < st.stages.size(); ++k) {
        for (std::size_t s = 0; s < st.stages[k].size(); ++s) {
            json pairs = json::array();
            for (const auto& p : st.stages[k][s]) {
                json pj;
                pj["alpha"] = p.alpha;
                pj["beta"] = p.beta;
                pj["action"] = p.action ? json(static_cast<long long>(*p.action)) : json(-1);
                pairs.push_back(std::move(pj));
            }
            stages.push_back({{"k", k}, {"s", s}, {"pairs", std::move(pairs)}});
        }
    }
    j["num_s"] = st.stages.empty() ? 0 : st.stages[0].size();
    j["sets"] = std::move(stages);
    return j;
}

inline GammaStack stack_from_json(const json& j) {
    GammaStack st;
    st.flavor = parse_flavor(detail::field<std::string>(j, "flavor"));
    st.variant = parse_variant(detail::field<std::string>(j, "variant"));
    st.tie_tol = detail::field<double>(j, "tie_tol");
    auto N = detail::field<std::size_t>(j, "horizon");
    auto S = detail::field<std::size_t>(j, "num_s");
    st.stages.assign(N + 1, StageSets(S));
    if (!j.contains("sets") || !j["sets"].is_array()) throw StructuralError("stack needs a 'sets' array");
    for (const auto& entry : j["sets"]) {
        auto k = detail::field<std::size_t>(entry, "k");
        auto s = detail::field<std::size_t>(entry, "s");
        if (k > N || s >= S) throw StructuralError("stack entry (k, s) out of range");
        for (const auto& pj : entry.at("pairs")) {
            SupportPair p;
            p.alpha = detail::field<std::vector<double>>(pj, "alpha");
            p.beta = detail::field<std::vector<double>>(pj, "beta");
            if (p.alpha.size() != p.beta.size()) throw StructuralError("alpha and beta lengths differ");
            long long a = pj.value("action", -1LL);
            if (a >= 0) p.action = static_cast<std::size_t>(a);
            st.stages[k][s].push_back(std::move(p));
        }
    }
    for (std::size_t k = 0; k <= N; ++k)
        for (std::size_t s = 0; s < S; ++s)
            if (st.stages[k][s].empty())
                throw StructuralError("stack has an empty set at k=" + std::to_string(k) + ", s=" + std::to_string(s));
    return st;
}

inline std::string write_stack(const GammaStack& st) { return stack_to_json(st).dump() + "\n"; }
inline GammaStack read_stack(const std::string& text) { return stack_from_json(parse(text)); }

// ---------------------------------------------------------------------------
// Belief point sets

inline std::string to_string(PointOrigin o) {
    switch (o) {
        case PointOrigin::Vertex: return "vertex";
        case PointOrigin::UniformRandom: return "uniform_random";
        case PointOrigin::ReachableRollout: return "reachable_rollout";
    }
    return "?";
}

inline PointOrigin parse_origin(const std::string& s) {
    if (s == "vertex") return PointOrigin::Vertex;
    if (s == "uniform_random") return PointOrigin::UniformRandom;
    if (s == "reachable_rollout") return PointOrigin::ReachableRollout;
    throw StructuralError("unknown point provenance '" + s + "'");
}

inline json points_to_json(const BeliefPointSet& ps) {
    json j;
    j["seed"] = ps.seed;
    json pts = json::array();
    for (std::size_t i = 0; i < ps.points.size(); ++i)
        pts.push_back({{"belief", ps.points[i].vec()}, {"provenance", to_string(ps.provenance[i])}});
    j["points"] = std::move(pts);
    return j;
}

inline BeliefPointSet points_from_json(const json& j) {
    BeliefPointSet ps;
    ps.seed = detail::field<std::uint64_t>(j, "seed");
    for (const auto& pj : j.at("points")) {
        ps.points.emplace_back(detail::field<std::vector<double>>(pj, "belief"));
        ps.provenance.push_back(parse_origin(detail::field<std::string>(pj, "provenance")));
    }
    return ps;
}

// ---------------------------------------------------------------------------
// Grid specs

inline json cells_to_json(const std::vector<grid::Cell>& cells) {
    json arr = json::array();
    for (auto c : cells) arr.push_back({c.row, c.col});
    return arr;
}

inline grid::Cell cell_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw StructuralError("cell must be a [row, col] pair");
    return {j[0].get<int>(), j[1].get<int>()};
}

inline std::vector<grid::Cell> cells_from_json(const json& j) {
    if (!j.is_array()) throw StructuralError("cell list must be an array");
    std::vector<grid::Cell> out;
    for (const auto& c : j) out.push_back(cell_from_json(c));
    return out;
}

inline json grid_to_json(const grid::GridSpec& g) {
    json j;
    j["width"] = g.width;
    j["height"] = g.height;
    j["obstacles"] = cells_to_json(g.obstacles);
    json goals = json::array();
    for (const auto& goal : g.goals) goals.push_back({{"cells", cells_to_json(goal.cells)}, {"prior", goal.prior}});
    j["goals"] = std::move(goals);
    json regions = json::array();
    for (const auto& r : g.regions)
        regions.push_back({{"cells", cells_to_json(r.cells)}, {"traversable_prior", r.traversable_prior}});
    j["regions"] = std::move(regions);
    j["obs_model"] = g.obs_model == grid::ObservationModel::Adjacency ? "adjacency" : "decay";
    j["horizon"] = g.horizon;
    j["start"] = {g.start.row, g.start.col};
    return j;
}

inline grid::ObservationModel parse_obs_model(const std::string& s) {
    if (s == "adjacency") return grid::ObservationModel::Adjacency;
    if (s == "decay") return grid::ObservationModel::Decay;
    throw StructuralError("unknown obs_model '" + s + "' (expected adjacency or decay)");
}

inline grid::GridSpec grid_from_json(const json& j) {
    grid::GridSpec g;
    g.width = detail::field<int>(j, "width");
    g.height = detail::field<int>(j, "height");
    if (j.contains("obstacles")) g.obstacles = cells_from_json(j["obstacles"]);
    for (const auto& gj : j.at("goals"))
        g.goals.push_back({cells_from_json(gj.at("cells")), gj.value("prior", 1.0)});
    if (j.contains("regions"))
        for (const auto& rj : j["regions"])
            g.regions.push_back({cells_from_json(rj.at("cells")), detail::field<double>(rj, "traversable_prior")});
    g.obs_model = parse_obs_model(j.value("obs_model", std::string("adjacency")));
    g.horizon = detail::field<std::size_t>(j, "horizon");
    g.start = cell_from_json(j.at("start"));
    return g;
}

inline std::string write_grid(const grid::GridSpec& g) { return grid_to_json(g).dump(2) + "\n"; }

/**
 * ASCII map: '.' free, '#' obstacle, 'G' goal, 'S' start (free), '1'-'9'
 * uncertain regions. The sidecar JSON supplies
 *   {"priors": {"1": 0.9, ...}, "horizon": N, "obs_model": "...",
 *    "goal_prior": p (optional), "start": [r, c] (if no 'S')}.
 */
inline grid::GridSpec grid_from_ascii(const std::string& map, const json& sidecar) {
    grid::GridSpec g;
    std::vector<std::string> rows;
    std::istringstream in(map);
    for (std::string line; std::getline(in, line);) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw StructuralError("ASCII map is empty");
    g.height = static_cast<int>(rows.size());
    g.width = static_cast<int>(rows[0].size());
    std::map<int, std::vector<grid::Cell>> regions;
    grid::GoalRegion goal;
    goal.prior = sidecar.value("goal_prior", 1.0);
    bool have_start = false;
    for (int r = 0; r < g.height; ++r) {
        if (static_cast<int>(rows[r].size()) != g.width) throw StructuralError("ASCII map rows differ in length");
        for (int c = 0; c < g.width; ++c) {
            char ch = rows[r][c];
            if (ch == '.') continue;
            if (ch == '#') g.obstacles.push_back({r, c});
            else if (ch == 'G') goal.cells.push_back({r, c});
            else if (ch == 'S') g.start = {r, c}, have_start = true;
            else if (ch >= '1' && ch <= '9') regions[ch - '0'].push_back({r, c});
            else throw StructuralError(std::string("unknown map character '") + ch + "'");
        }
    }
    if (!goal.cells.empty()) g.goals.push_back(goal);
    const json priors = sidecar.value("priors", json::object());
    int expected = 1;
    for (auto& [id, cells] : regions) {
        if (id != expected++) throw StructuralError("uncertain region ids must be 1..n without gaps");
        std::string key = std::to_string(id);
        if (!priors.contains(key)) throw StructuralError("no prior for uncertain region " + key);
        g.regions.push_back({cells, priors[key].get<double>()});
    }
    g.horizon = detail::field<std::size_t>(sidecar, "horizon");
    g.obs_model = parse_obs_model(sidecar.value("obs_model", std::string("adjacency")));
    if (!have_start) {
        if (!sidecar.contains("start")) throw StructuralError("no start: add 'S' to the map or 'start' to the sidecar");
        g.start = cell_from_json(sidecar["start"]);
    }
    return g;
}

/// Inverse of grid_from_ascii for specs with at most one goal region and nine regions.
inline std::pair<std::string, json> grid_to_ascii(const grid::GridSpec& g) {
    if (g.goals.size() > 1) throw UsageError("ASCII maps hold a single goal region");
    if (g.regions.size() > 9) throw UsageError("ASCII maps hold at most nine uncertain regions");
    std::vector<std::string> rows(static_cast<std::size_t>(g.height), std::string(static_cast<std::size_t>(g.width), '.'));
    for (auto c : g.obstacles) rows[c.row][c.col] = '#';
    for (const auto& goal : g.goals)
        for (auto c : goal.cells) rows[c.row][c.col] = 'G';
    for (std::size_t i = 0; i < g.regions.size(); ++i)
        for (auto c : g.regions[i].cells) rows[c.row][c.col] = static_cast<char>('1' + i);
    rows[g.start.row][g.start.col] = 'S';
    std::string map;
    for (const auto& r : rows) map += r + "\n";
    json side;
    json priors = json::object();
    for (std::size_t i = 0; i < g.regions.size(); ++i) priors[std::to_string(i + 1)] = g.regions[i].traversable_prior;
    side["priors"] = priors;
    side["horizon"] = g.horizon;
    side["obs_model"] = g.obs_model == grid::ObservationModel::Adjacency ? "adjacency" : "decay";
    if (!g.goals.empty() && g.goals[0].prior != 1.0) side["goal_prior"] = g.goals[0].prior;
    return {map, side};
}

/// Load a grid from JSON, or from an ASCII map when a sidecar path is given.
inline grid::GridSpec load_grid(const std::string& path, const std::string& sidecar_path = "") {
    if (!sidecar_path.empty()) return grid_from_ascii(read_file(path), parse(read_file(sidecar_path)));
    return grid_from_json(parse(read_file(path)));
}

}  // namespace momdp::io
