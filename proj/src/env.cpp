#include "shieldc/env.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "shieldc/error.hpp"

namespace shieldc {

namespace {

constexpr std::array<const char*, kNumActions> kGlyphs = {"←", "→", "↑", "↓", "·"};
constexpr std::array<const char*, kNumActions> kNames = {"left", "right", "up", "down", "stay"};

Cell step(Cell c, Action a) {
  switch (a) {
    case Action::Left: return {c.col - 1, c.row};
    case Action::Right: return {c.col + 1, c.row};
    case Action::Up: return {c.col, c.row + 1};
    case Action::Down: return {c.col, c.row - 1};
    case Action::Stay: return c;
  }
  return c;
}

int sign(int v) { return (v > 0) - (v < 0); }

Cell cell_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
    throw Error(ErrorKind::InvalidEnvironment, "cell must be an integer pair [col,row]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

const char* action_glyph(Action a) { return kGlyphs[static_cast<int>(a)]; }
const char* action_name(Action a) { return kNames[static_cast<int>(a)]; }

int ActionSet::size() const { return std::popcount(static_cast<unsigned>(bits_)); }

std::vector<Action> ActionSet::actions() const {
  std::vector<Action> out;
  for (int a = 0; a < kNumActions; ++a)
    if (contains(a)) out.push_back(static_cast<Action>(a));
  return out;
}

std::string ActionSet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (Action a : actions()) {
    if (!first) out += ",";
    out += action_glyph(a);
    first = false;
  }
  return out + "}";
}

bool action_list_less(ActionSet a, ActionSet b) {
  auto la = a.actions();
  auto lb = b.actions();
  return std::lexicographical_compare(la.begin(), la.end(), lb.begin(), lb.end());
}

std::string Observation::to_string(int radius) const {
  const int side = 2 * radius + 1;
  std::string out;
  for (int r = 0; r < side; ++r) {
    if (r > 0) out += '/';
    for (int c = 0; c < side; ++c) {
      switch (patch[static_cast<std::size_t>(r * side + c)]) {
        case CellClass::Blocked: out += '#'; break;
        case CellClass::Free: out += '.'; break;
        case CellClass::Agent: out += 'A'; break;
      }
    }
  }
  out += '@' + std::to_string(dx) + ',' + std::to_string(dy);
  return out;
}

std::optional<Observation> Observation::parse(std::string_view text, int radius) {
  const int side = 2 * radius + 1;
  auto at = text.find('@');
  if (at == std::string_view::npos) return std::nullopt;
  Observation o;
  int col = 0;
  int rows = 1;
  for (char ch : text.substr(0, at)) {
    if (ch == '/') {
      if (col != side) return std::nullopt;
      col = 0;
      ++rows;
      continue;
    }
    if (ch == '#') o.patch.push_back(CellClass::Blocked);
    else if (ch == '.') o.patch.push_back(CellClass::Free);
    else if (ch == 'A') o.patch.push_back(CellClass::Agent);
    else return std::nullopt;
    ++col;
  }
  if (col != side || rows != side) return std::nullopt;
  std::string dir(text.substr(at + 1));
  auto comma = dir.find(',');
  if (comma == std::string::npos) return std::nullopt;
  try {
    std::size_t used = 0;
    o.dx = std::stoi(dir.substr(0, comma), &used);
    if (used != comma) return std::nullopt;
    std::string rest = dir.substr(comma + 1);
    o.dy = std::stoi(rest, &used);
    if (used != rest.size()) return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (o.dx < -1 || o.dx > 1 || o.dy < -1 || o.dy > 1) return std::nullopt;
  return o;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Environment::Environment(int width, int height, std::vector<Cell> obstacles,
                         std::vector<AgentSpec> agents, int radius)
    : width_(width), height_(height), radius_(radius), obstacles_(std::move(obstacles)),
      agents_(std::move(agents)) {
  if (width_ <= 0 || height_ <= 0) throw Error(ErrorKind::InvalidEnvironment, "grid must be non-empty");
  if (radius_ < 0) throw Error(ErrorKind::InvalidEnvironment, "radius must be non-negative");
  if (agents_.empty()) throw Error(ErrorKind::InvalidEnvironment, "at least one agent required");
  std::sort(obstacles_.begin(), obstacles_.end());
  obstacles_.erase(std::unique(obstacles_.begin(), obstacles_.end()), obstacles_.end());
  for (Cell c : obstacles_)
    if (!in_grid(c)) throw Error(ErrorKind::InvalidEnvironment, "obstacle outside grid");

  cell_index_.assign(static_cast<std::size_t>(width_ * height_), -1);
  for (int row = 0; row < height_; ++row) {
    for (int col = 0; col < width_; ++col) {
      Cell c{col, row};
      if (std::binary_search(obstacles_.begin(), obstacles_.end(), c)) continue;
      cell_index_[static_cast<std::size_t>(row * width_ + col)] = static_cast<int>(free_cells_.size());
      free_cells_.push_back(c);
    }
  }
  const int n = num_agents();
  std::set<Cell> starts;
  for (const auto& ag : agents_) {
    if (cell_index(ag.start) < 0 || cell_index(ag.target) < 0)
      throw Error(ErrorKind::InvalidEnvironment, "agent start/target must be free cells");
    if (!starts.insert(ag.start).second)
      throw Error(ErrorKind::InvalidEnvironment, "agent starts must be pairwise distinct");
  }

  const std::size_t F = free_cells_.size();
  num_states_ = 1;
  num_joint_actions_ = 1;
  for (int i = 0; i < n; ++i) {
    num_states_ *= F;
    num_joint_actions_ *= kNumActions;
    if (num_states_ > kMaxStates)
      throw Error(ErrorKind::StateSpaceTooLarge, "state space exceeds " + std::to_string(kMaxStates));
  }
  state_radix_.assign(static_cast<std::size_t>(n), 1);
  action_radix_.assign(static_cast<std::size_t>(n), 1);
  for (int i = n - 2; i >= 0; --i) {
    state_radix_[static_cast<std::size_t>(i)] = state_radix_[static_cast<std::size_t>(i) + 1] * F;
    action_radix_[static_cast<std::size_t>(i)] = action_radix_[static_cast<std::size_t>(i) + 1] * kNumActions;
  }

  moves_.resize(F * kNumActions);
  for (std::size_t k = 0; k < F; ++k) {
    for (int a = 0; a < kNumActions; ++a) {
      Cell nxt = step(free_cells_[k], static_cast<Action>(a));
      int idx = cell_index(nxt);
      moves_[k * kNumActions + static_cast<std::size_t>(a)] = idx < 0 ? static_cast<int>(k) : idx;
    }
  }

  if (num_states_ * num_joint_actions_ <= (std::size_t{1} << 22)) {
    successors_.resize(num_states_ * num_joint_actions_);
    std::vector<int> cells(static_cast<std::size_t>(n));
    for (StateId s = 0; s < num_states_; ++s) {
      cells = decode(s);
      for (JointAction a = 0; a < num_joint_actions_; ++a) {
        StateId t = 0;
        for (int i = 0; i < n; ++i)
          t += static_cast<StateId>(state_radix_[static_cast<std::size_t>(i)]) *
               static_cast<StateId>(move(cells[static_cast<std::size_t>(i)], agent_action(a, i)));
        successors_[static_cast<std::size_t>(s) * num_joint_actions_ + a] = t;
      }
    }
  }

  safe_ = StateSet(num_states_);
  for (StateId s = 0; s < num_states_; ++s) {
    auto cells = decode(s);
    std::sort(cells.begin(), cells.end());
    if (std::adjacent_find(cells.begin(), cells.end()) == cells.end()) safe_.set(s);
  }
  std::vector<int> start_cells;
  for (const auto& ag : agents_) start_cells.push_back(cell_index(ag.start));
  initial_state_ = encode(start_cells);
  initial_ = StateSet::singleton(num_states_, initial_state_);

  alphabets_.resize(static_cast<std::size_t>(n));
  obs_of_state_.resize(static_cast<std::size_t>(n));
  obs_sets_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::map<Observation, std::vector<StateId>> groups;
    for (StateId s = 0; s < num_states_; ++s) groups[observe(s, i)].push_back(s);
    auto& alpha = alphabets_[static_cast<std::size_t>(i)];
    auto& of_state = obs_of_state_[static_cast<std::size_t>(i)];
    auto& sets = obs_sets_[static_cast<std::size_t>(i)];
    of_state.assign(num_states_, 0);
    for (auto& [obs, members] : groups) {
      ObsId id = static_cast<ObsId>(alpha.size());
      alpha.push_back(obs);
      StateSet set(num_states_);
      for (StateId s : members) {
        of_state[s] = id;
        set.set(s);
      }
      sets.push_back(std::move(set));
    }
  }
  fingerprint_ = fnv1a64(to_json_text());
}

bool Environment::is_obstacle(Cell c) const {
  return in_grid(c) && cell_index(c) < 0;
}

int Environment::cell_index(Cell c) const {
  if (!in_grid(c)) return -1;
  return cell_index_[static_cast<std::size_t>(c.row * width_ + c.col)];
}

StateId Environment::encode(const std::vector<int>& cell_indices) const {
  StateId s = 0;
  for (std::size_t i = 0; i < cell_indices.size(); ++i)
    s += static_cast<StateId>(state_radix_[i]) * static_cast<StateId>(cell_indices[i]);
  return s;
}

std::vector<int> Environment::decode(StateId s) const {
  std::vector<int> cells(agents_.size());
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = agent_cell(s, static_cast<int>(i));
  return cells;
}

int Environment::agent_cell(StateId s, int agent) const {
  return static_cast<int>((s / state_radix_[static_cast<std::size_t>(agent)]) % free_cells_.size());
}

std::vector<Cell> Environment::positions(StateId s) const {
  std::vector<Cell> out;
  for (int c : decode(s)) out.push_back(free_cells_[static_cast<std::size_t>(c)]);
  return out;
}

std::optional<StateId> Environment::state_of(const std::vector<Cell>& cells) const {
  if (static_cast<int>(cells.size()) != num_agents()) return std::nullopt;
  std::vector<int> idx;
  for (Cell c : cells) {
    int k = cell_index(c);
    if (k < 0) return std::nullopt;
    idx.push_back(k);
  }
  return encode(idx);
}

JointAction Environment::encode_action(const std::vector<Action>& acts) const {
  JointAction a = 0;
  for (std::size_t i = 0; i < acts.size(); ++i)
    a += static_cast<JointAction>(action_radix_[i]) * static_cast<JointAction>(acts[i]);
  return a;
}

std::vector<Action> Environment::decode_action(JointAction a) const {
  std::vector<Action> acts(agents_.size());
  for (std::size_t i = 0; i < acts.size(); ++i) acts[i] = agent_action(a, static_cast<int>(i));
  return acts;
}

Action Environment::agent_action(JointAction a, int agent) const {
  return static_cast<Action>((a / action_radix_[static_cast<std::size_t>(agent)]) % kNumActions);
}

StateId Environment::apply_joint(StateId s, JointAction a) const {
  if (!successors_.empty()) return successors_[static_cast<std::size_t>(s) * num_joint_actions_ + a];
  StateId t = 0;
  for (int i = 0; i < num_agents(); ++i)
    t += static_cast<StateId>(state_radix_[static_cast<std::size_t>(i)]) *
         static_cast<StateId>(move(agent_cell(s, i), agent_action(a, i)));
  return t;
}

JointActionSet Environment::sas(StateId s, StateId s_next) const {
  JointActionSet out(num_joint_actions_);
  for (JointAction a = 0; a < num_joint_actions_; ++a)
    if (apply_joint(s, a) == s_next) out.set(a);
  return out;
}

Observation Environment::observe(StateId s, int agent) const {
  auto cells = positions(s);
  const Cell me = cells[static_cast<std::size_t>(agent)];
  const int side = 2 * radius_ + 1;
  Observation o;
  o.patch.reserve(static_cast<std::size_t>(side * side));
  for (int dr = radius_; dr >= -radius_; --dr) {
    for (int dc = -radius_; dc <= radius_; ++dc) {
      Cell c{me.col + dc, me.row + dr};
      if (cell_index(c) < 0) {
        o.patch.push_back(CellClass::Blocked);
      } else if (std::find(cells.begin(), cells.end(), c) != cells.end()) {
        o.patch.push_back(CellClass::Agent);
      } else {
        o.patch.push_back(CellClass::Free);
      }
    }
  }
  const Cell target = agents_[static_cast<std::size_t>(agent)].target;
  o.dx = sign(target.col - me.col);
  o.dy = sign(target.row - me.row);
  return o;
}

std::optional<ObsId> Environment::find_obs(int agent, const Observation& o) const {
  const auto& alpha = alphabets_[static_cast<std::size_t>(agent)];
  auto it = std::lower_bound(alpha.begin(), alpha.end(), o);
  if (it == alpha.end() || *it != o) return std::nullopt;
  return static_cast<ObsId>(it - alpha.begin());
}

bool Environment::all_reached(StateId s) const {
  for (int i = 0; i < num_agents(); ++i)
    if (agent_cell(s, i) != cell_index(agents_[static_cast<std::size_t>(i)].target)) return false;
  return true;
}

std::string Environment::state_literal(StateId s) const {
  std::string out = "(";
  bool first = true;
  for (Cell c : positions(s)) {
    if (!first) out += ",";
    out += "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")";
    first = false;
  }
  return out + ")";
}

Environment Environment::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidEnvironment, std::string("environment JSON: ") + e.what());
  }
  try {
    std::vector<Cell> obstacles;
    for (const auto& c : j.value("obstacles", nlohmann::json::array())) obstacles.push_back(cell_from_json(c));
    std::vector<AgentSpec> agents;
    for (const auto& a : j.at("agents"))
      agents.push_back({cell_from_json(a.at("start")), cell_from_json(a.at("target"))});
    return Environment(j.at("width").get<int>(), j.at("height").get<int>(), std::move(obstacles),
                       std::move(agents), j.value("radius", 0));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidEnvironment, std::string("environment JSON: ") + e.what());
  }
}

Environment Environment::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string Environment::to_json_text() const {
  nlohmann::ordered_json j;
  j["width"] = width_;
  j["height"] = height_;
  auto obs = nlohmann::ordered_json::array();
  for (Cell c : obstacles_) obs.push_back({c.col, c.row});
  j["obstacles"] = obs;
  auto ags = nlohmann::ordered_json::array();
  for (const auto& a : agents_) {
    nlohmann::ordered_json aj;
    aj["start"] = {a.start.col, a.start.row};
    aj["target"] = {a.target.col, a.target.row};
    ags.push_back(aj);
  }
  j["agents"] = ags;
  j["radius"] = radius_;
  return j.dump();
}

}  // namespace shieldc
