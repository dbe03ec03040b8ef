#include "shieldc/prism.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "shieldc/error.hpp"

namespace shieldc {

std::size_t ExplicitMdp::num_transitions() const {
  std::size_t n = 0;
  for (const auto& cs : choices) n += cs.size();
  return n;
}

std::vector<std::int64_t> ExplicitMdp::flatten(const StateKey& key) {
  std::vector<std::int64_t> v;
  v.reserve(key.shield.size() + 2);
  v.push_back(key.failed ? 1 : 0);
  v.push_back(key.failed ? 0 : key.env_state);
  if (!key.failed) v.insert(v.end(), key.shield.begin(), key.shield.end());
  return v;
}

int ExplicitMdp::find(const StateKey& key) const {
  auto it = index.find(flatten(key));
  return it == index.end() ? -1 : it->second;
}

namespace {

using Key = ExplicitMdp::StateKey;

// What a live, safe state does next: either fail, or move to one of the
// successors (already deduplicated by the caller).
struct Expansion {
  bool failure = false;
  std::vector<Key> successors;
};

template <class Expand>
ExplicitMdp explore(const Environment& env, Key init, std::size_t cap, Expand expand) {
  ExplicitMdp mdp;
  std::deque<int> queue;
  auto intern = [&](const Key& k) {
    auto [it, inserted] = mdp.index.emplace(ExplicitMdp::flatten(k), static_cast<int>(mdp.keys.size()));
    if (inserted) {
      if (mdp.keys.size() >= cap) {
        throw Error(ErrorKind::StateSpaceTooLarge,
                    "product model exceeds the cap of " + std::to_string(cap) + " states");
      }
      mdp.keys.push_back(k.failed ? Key{0, {}, true} : k);
      mdp.choices.emplace_back();
      mdp.unsafe.push_back(!k.failed && !env.is_safe(k.env_state));
      mdp.shield_failure.push_back(k.failed);
      queue.push_back(it->second);
    }
    return it->second;
  };
  mdp.initial = intern(init);
  while (!queue.empty()) {
    const int x = queue.front();
    queue.pop_front();
    const Key key = mdp.keys[static_cast<std::size_t>(x)];
    std::vector<ExplicitMdp::Choice> cs;
    if (key.failed || mdp.unsafe[static_cast<std::size_t>(x)]) {
      cs.push_back({{{x, 1.0}}});
    } else {
      Expansion e = expand(key);
      if (e.failure) {
        cs.push_back({{{intern(Key{0, {}, true}), 1.0}}});
      } else {
        for (const Key& k : e.successors) cs.push_back({{{intern(k), 1.0}}});
      }
    }
    mdp.choices[static_cast<std::size_t>(x)] = std::move(cs);
  }
  return mdp;
}

// Successor keys of s under every joint action in the product of `masks`,
// with `shield` as the (fixed) next shield-state vector.
std::vector<Key> product_successors(const Environment& env, StateId s, const std::vector<ActionSet>& masks,
                                    const std::vector<int>& shield) {
  const int n = env.num_agents();
  std::vector<std::vector<Action>> lists;
  for (const auto& m : masks) lists.push_back(m.actions());
  std::vector<StateId> seen;
  std::vector<Action> acts(static_cast<std::size_t>(n));
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    for (int i = 0; i < n; ++i) acts[static_cast<std::size_t>(i)] = lists[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    seen.push_back(env.apply_joint(s, env.encode_action(acts)));
    int i = n - 1;
    while (i >= 0 && ++idx[static_cast<std::size_t>(i)] == lists[static_cast<std::size_t>(i)].size()) {
      idx[static_cast<std::size_t>(i)] = 0;
      --i;
    }
    if (i < 0) break;
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
  std::vector<Key> out;
  for (StateId t : seen) out.push_back(Key{t, shield, false});
  return out;
}

std::string unsafe_formula(int n) {
  std::string f;
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      if (!f.empty()) f += " | ";
      f += "p" + std::to_string(i) + "=p" + std::to_string(j);
    }
  }
  return f.empty() ? "false" : f;
}

// Emits the monolithic PRISM module for an explored product.
std::string render_model(const Environment& env, const ExplicitMdp& mdp, ShieldMode mode,
                         const std::vector<std::size_t>& shield_sizes) {
  const int n = env.num_agents();
  std::ostringstream os;
  os << "// Product of the MAPF instance with ";
  os << (mode == ShieldMode::Local ? "the local shields" : mode == ShieldMode::Global ? "the global shield" : "no shield");
  os << ".\n// Agent policies are left nondeterministic.\n\nmdp\n\nmodule system\n";
  const std::vector<int> start = env.decode(env.initial_state());
  for (int i = 0; i < n; ++i) {
    os << "  p" << i + 1 << " : [0.." << env.num_free_cells() - 1 << "] init " << start[static_cast<std::size_t>(i)]
       << ";\n";
  }
  const std::string shield_var = mode == ShieldMode::Global ? "g" : "l";
  for (std::size_t k = 0; k < shield_sizes.size(); ++k) {
    os << "  " << shield_var << (mode == ShieldMode::Global ? "" : std::to_string(k + 1)) << " : [0.."
       << shield_sizes[k] - 1 << "] init 0;\n";
  }
  os << "  failed : [0..1] init 0;\n\n";
  os << "  [] failed=1 -> true;\n";

  auto guard = [&](const Key& k) {
    std::string g = "failed=0";
    const std::vector<int> cells = env.decode(k.env_state);
    for (int i = 0; i < n; ++i) g += " & p" + std::to_string(i + 1) + "=" + std::to_string(cells[static_cast<std::size_t>(i)]);
    for (std::size_t j = 0; j < k.shield.size(); ++j) {
      g += " & " + shield_var + (mode == ShieldMode::Global ? "" : std::to_string(j + 1)) + "=" +
           std::to_string(k.shield[j]);
    }
    return g;
  };
  auto update = [&](const Key& from, const Key& to) {
    std::string u;
    const std::vector<int> a = env.decode(from.env_state);
    const std::vector<int> b = env.decode(to.env_state);
    for (int i = 0; i < n; ++i) {
      if (a[static_cast<std::size_t>(i)] == b[static_cast<std::size_t>(i)]) continue;
      if (!u.empty()) u += " & ";
      u += "(p" + std::to_string(i + 1) + "'=" + std::to_string(b[static_cast<std::size_t>(i)]) + ")";
    }
    for (std::size_t j = 0; j < to.shield.size(); ++j) {
      if (from.shield[j] == to.shield[j]) continue;
      if (!u.empty()) u += " & ";
      u += "(" + shield_var + (mode == ShieldMode::Global ? "" : std::to_string(j + 1)) + "'=" +
           std::to_string(to.shield[j]) + ")";
    }
    return u.empty() ? std::string("true") : u;
  };

  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    const Key& k = mdp.keys[x];
    if (k.failed) continue;
    const std::string g = guard(k);
    if (mdp.unsafe[x]) {
      os << "  [] " << g << " -> true;\n";
      continue;
    }
    for (const auto& c : mdp.choices[x]) {
      const Key& to = mdp.keys[static_cast<std::size_t>(c.successors.front().first)];
      os << "  [] " << g << " -> " << (to.failed ? std::string("(failed'=1)") : update(k, to)) << ";\n";
    }
  }
  os << "endmodule\n\n";
  os << "label \"unsafe\" = failed=0 & (" << unsafe_formula(n) << ");\n";
  os << "label \"shield_failure\" = failed=1;\n";
  return os.str();
}

const char* kProperties =
    "Pmin=? [ F \"shield_failure\" ]\n"
    "Pmax=? [ F \"shield_failure\" ]\n"
    "Pmin=? [ F \"unsafe\" ]\n"
    "Pmax=? [ F \"unsafe\" ]\n";

PrismModel finish(const Environment& env, ExplicitMdp mdp, ShieldMode mode, const std::vector<std::size_t>& sizes) {
  PrismModel m;
  m.mode = mode;
  m.model_text = render_model(env, mdp, mode, sizes);
  m.property_text = kProperties;
  m.label_map["unsafe"] = "failed=0 & (" + unsafe_formula(env.num_agents()) + ")";
  m.label_map["shield_failure"] = "failed=1";
  m.mdp = std::move(mdp);
  return m;
}

}  // namespace

PrismModel export_model(const Environment& env, const std::vector<LocalMealy>& shields, std::size_t cap) {
  if (static_cast<int>(shields.size()) != env.num_agents()) {
    throw Error(ErrorKind::MismatchedShield, "expected one local shield per agent");
  }
  for (const auto& lm : shields) {
    if (lm.env_fingerprint() != env.fingerprint()) {
      throw Error(ErrorKind::MismatchedShield, "local shield was built for another environment");
    }
  }
  const int n = env.num_agents();
  Key init{env.initial_state(), std::vector<int>(static_cast<std::size_t>(n), 0), false};
  ExplicitMdp mdp = explore(env, init, cap, [&](const Key& k) {
    Expansion e;
    std::vector<ActionSet> masks;
    std::vector<int> next(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const LocalTransition& t = shields[u].step(k.shield[u], env.obs_id(i, k.env_state));
      if (t.output.bot) {
        e.failure = true;
        return e;
      }
      masks.push_back(t.output.actions);
      next[u] = t.target;
    }
    e.successors = product_successors(env, k.env_state, masks, next);
    return e;
  });
  std::vector<std::size_t> sizes;
  for (const auto& lm : shields) sizes.push_back(lm.num_states());
  return finish(env, std::move(mdp), ShieldMode::Local, sizes);
}

PrismModel export_model(const Environment& env, const GlobalMealy& global, std::size_t cap) {
  if (global.env_fingerprint() != env.fingerprint()) {
    throw Error(ErrorKind::MismatchedShield, "global shield was built for another environment");
  }
  Key init{env.initial_state(), {GlobalMealy::kInitial}, false};
  ExplicitMdp mdp = explore(env, init, cap, [&](const Key& k) {
    Expansion e;
    const GlobalEdge& edge = global.edge_for(k.shield[0], k.env_state);
    if (edge.output.bot) {
      e.failure = true;
      return e;
    }
    e.successors = product_successors(env, k.env_state, edge.output.sets, {edge.target});
    return e;
  });
  return finish(env, std::move(mdp), ShieldMode::Global, {global.num_states()});
}

PrismModel export_model(const Environment& env, std::size_t cap) {
  const std::vector<ActionSet> all(static_cast<std::size_t>(env.num_agents()), ActionSet::all());
  ExplicitMdp mdp = explore(env, Key{env.initial_state(), {}, false}, cap, [&](const Key& k) {
    return Expansion{false, product_successors(env, k.env_state, all, {})};
  });
  return finish(env, std::move(mdp), ShieldMode::None, {});
}

std::vector<double> reach_probability(const ExplicitMdp& mdp, const std::vector<bool>& target, bool maximize) {
  const std::size_t n = mdp.num_states();
  // zero[x]: the optimum is exactly 0 at x.
  std::vector<bool> zero(n, false);
  if (maximize) {
    // States that cannot reach the target under any choices.
    std::vector<std::vector<int>> pred(n);
    for (std::size_t x = 0; x < n; ++x) {
      for (const auto& c : mdp.choices[x]) {
        for (const auto& [y, p] : c.successors) {
          if (p > 0.0) pred[static_cast<std::size_t>(y)].push_back(static_cast<int>(x));
        }
      }
    }
    std::vector<bool> reach(target);
    std::deque<int> q;
    for (std::size_t x = 0; x < n; ++x) {
      if (target[x]) q.push_back(static_cast<int>(x));
    }
    while (!q.empty()) {
      const int y = q.front();
      q.pop_front();
      for (int x : pred[static_cast<std::size_t>(y)]) {
        if (!reach[static_cast<std::size_t>(x)]) {
          reach[static_cast<std::size_t>(x)] = true;
          q.push_back(x);
        }
      }
    }
    for (std::size_t x = 0; x < n; ++x) zero[x] = !reach[x];
  } else {
    // Greatest set of non-target states with a choice staying inside it.
    std::vector<bool> avoid(n);
    for (std::size_t x = 0; x < n; ++x) avoid[x] = !target[x];
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t x = 0; x < n; ++x) {
        if (!avoid[x]) continue;
        bool keep = false;
        for (const auto& c : mdp.choices[x]) {
          bool inside = true;
          for (const auto& [y, p] : c.successors) {
            if (p > 0.0 && !avoid[static_cast<std::size_t>(y)]) inside = false;
          }
          if (inside) {
            keep = true;
            break;
          }
        }
        if (!keep) {
          avoid[x] = false;
          changed = true;
        }
      }
    }
    zero = avoid;
  }

  std::vector<double> v(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) v[x] = target[x] ? 1.0 : 0.0;
  const std::size_t max_iters = 1'000'000;
  for (std::size_t it = 0; it < max_iters; ++it) {
    double delta = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      if (target[x] || zero[x]) continue;
      double best = maximize ? 0.0 : 1.0;
      for (const auto& c : mdp.choices[x]) {
        double sum = 0.0;
        for (const auto& [y, p] : c.successors) sum += p * v[static_cast<std::size_t>(y)];
        best = maximize ? std::max(best, sum) : std::min(best, sum);
      }
      delta = std::max(delta, std::abs(best - v[x]));
      v[x] = best;
    }
    if (delta < 1e-12) break;
  }
  return v;
}

ReachBounds solve_internal(const ExplicitMdp& mdp) {
  const auto at = static_cast<std::size_t>(mdp.initial);
  ReachBounds b;
  b.pmin_fail = reach_probability(mdp, mdp.shield_failure, false)[at];
  b.pmax_fail = reach_probability(mdp, mdp.shield_failure, true)[at];
  b.pmin_unsafe = reach_probability(mdp, mdp.unsafe, false)[at];
  b.pmax_unsafe = reach_probability(mdp, mdp.unsafe, true)[at];
  return b;
}

std::string format_bounds(const ReachBounds& b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f", b.pmin_fail, b.pmax_fail, b.pmin_unsafe, b.pmax_unsafe);
  return buf;
}

void write_files(const PrismModel& model, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + (std::filesystem::path(dir) / name).string());
    f << text;
  };
  put("model.nm", model.model_text);
  put("props.pctl", model.property_text);
}

std::optional<double> parse_result_line(const std::string& output) {
  const auto pos = output.find("Result:");
  if (pos == std::string::npos) return std::nullopt;
  const char* begin = output.c_str() + pos + 7;
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || errno == ERANGE) return std::nullopt;
  return v;
}

namespace {

bool is_executable(const std::filesystem::path& p) { return ::access(p.c_str(), X_OK) == 0; }

std::optional<std::string> locate(const std::string& binary) {
  if (binary.find('/') != std::string::npos) {
    if (is_executable(binary)) return binary;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  if (path == nullptr) return std::nullopt;
  std::stringstream ss(path);
  std::string entry;
  while (std::getline(ss, entry, ':')) {
    if (entry.empty()) continue;
    const auto candidate = std::filesystem::path(entry) / binary;
    if (is_executable(candidate)) return candidate.string();
  }
  return std::nullopt;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Runs argv in `dir` with stdout and stderr sent to `log`.
std::string run_with_timeout(const std::vector<std::string>& argv, const std::filesystem::path& dir,
                             const std::filesystem::path& log, std::chrono::milliseconds timeout) {
  const pid_t pid = ::fork();
  if (pid < 0) throw ExternalToolError(ErrorKind::Io, "fork failed");
  if (pid == 0) {
    if (::chdir(dir.c_str()) != 0) _exit(126);
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) _exit(126);
    ::dup2(fd, STDOUT_FILENO);
    ::dup2(fd, STDERR_FILENO);
    ::close(fd);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execv(args[0], args.data());
    _exit(127);
  }
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  while (true) {
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw ExternalToolError(ErrorKind::Timeout, argv[0] + " exceeded " + std::to_string(timeout.count()) + " ms",
                              slurp(log));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return slurp(log);
}

}  // namespace

ReachBounds run_external(const PrismModel& model, const std::string& binary, const std::string& dir,
                         std::chrono::milliseconds timeout) {
  write_files(model, dir);
  const auto exe = locate(binary);
  if (!exe) throw ExternalToolError(ErrorKind::BinaryNotFound, "model checker not found: " + binary);
  const auto abs_dir = std::filesystem::absolute(dir);
  double values[4] = {};
  for (int k = 1; k <= 4; ++k) {
    const auto log = abs_dir / ("prism_prop" + std::to_string(k) + ".log");
    const std::string out =
        run_with_timeout({*exe, "model.nm", "props.pctl", "-prop", std::to_string(k)}, abs_dir, log, timeout);
    const auto v = parse_result_line(out);
    if (!v) throw ExternalToolError(ErrorKind::ParseFailure, "no Result line for property " + std::to_string(k), out);
    values[k - 1] = *v;
  }
  return {values[0], values[1], values[2], values[3]};
}

}  // namespace shieldc
