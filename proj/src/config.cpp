#include "simboot/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "simboot/prompt.hpp"

namespace simboot {

namespace {

using json = nlohmann::json;

struct KeyError {
  std::string message;
};

void check_keys(const json& doc, const std::set<std::string>& allowed, const std::string& where) {
  if (!doc.is_object()) throw KeyError{where + " must be an object"};
  for (const auto& item : doc.items()) {
    if (!allowed.count(item.key())) throw KeyError{"unknown key '" + where + item.key() + "'"};
  }
}

template <typename T>
void read(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

NoiseModel noise_from(const json& doc, PerceptionSettings& p) {
  check_keys(doc,
             {"sigma_pos", "sigma_dim", "sigma_yaw", "outlier_probability", "outlier_offset_range", "views"},
             "noise.");
  NoiseModel m = p.model;
  read(doc, "sigma_pos", m.sigma_pos);
  read(doc, "sigma_dim", m.sigma_dim);
  read(doc, "sigma_yaw", m.sigma_yaw);
  read(doc, "outlier_probability", m.outlier_probability);
  read(doc, "outlier_offset_range", m.outlier_offset_range);
  read(doc, "views", p.views);
  return m;
}

SimConfig sim_from(const json& doc, SimConfig sim) {
  check_keys(doc,
             {"max_aperture", "jaw_depth", "grasp_xy_tolerance", "contact_tolerance", "placement_overlap_tolerance",
              "workspace", "max_commands_per_episode"},
             "sim.");
  read(doc, "max_aperture", sim.max_aperture);
  read(doc, "jaw_depth", sim.jaw_depth);
  read(doc, "grasp_xy_tolerance", sim.grasp_xy_tolerance);
  read(doc, "contact_tolerance", sim.contact_tolerance);
  read(doc, "placement_overlap_tolerance", sim.placement_overlap_tolerance);
  read(doc, "max_commands_per_episode", sim.max_commands_per_episode);
  if (doc.contains("workspace")) {
    const json& w = doc.at("workspace");
    check_keys(w, {"min", "max"}, "sim.workspace.");
    read(w, "min", sim.workspace.min);
    read(w, "max", sim.workspace.max);
  }
  return sim;
}

void planner_from(const json& doc, PlannerConfig& p) {
  check_keys(doc,
             {"kind", "failure_rate", "endpoint", "model", "temperature", "max_tokens", "timeout_s", "max_attempts",
              "backoff_base_s", "max_in_flight", "api_key_env", "verbose"},
             "planner.");
  if (doc.contains("kind")) {
    const auto kind = doc.at("kind").get<std::string>();
    if (kind == "oracle-degraded") {
      p.kind = PlannerKind::OracleDegraded;
    } else if (!apply_planner_spec(kind, p)) {
      throw KeyError{"planner.kind must be remote, oracle, oracle-degraded or oracle-degraded:<rate>"};
    }
  }
  read(doc, "failure_rate", p.failure_rate);
  read(doc, "endpoint", p.endpoint);
  read(doc, "model", p.model);
  read(doc, "temperature", p.temperature);
  read(doc, "max_tokens", p.max_tokens);
  read(doc, "timeout_s", p.timeout_s);
  read(doc, "max_attempts", p.retry.max_attempts);
  read(doc, "backoff_base_s", p.retry.backoff_base_s);
  read(doc, "max_in_flight", p.max_in_flight);
  read(doc, "api_key_env", p.api_key_env);
  read(doc, "verbose", p.verbose);
}

}  // namespace

void RunConfig::validate() const {
  if (tasks.empty()) throw ModelError("at least one task is required");
  if (std::set<TaskId>(tasks.begin(), tasks.end()).size() != tasks.size()) throw ModelError("duplicate task ids");
  if (n_per_task < 1) throw ModelError("n_per_task must be >= 1");
  if (attempt_budget() < n_per_task) throw ModelError("max_attempts_per_task must be >= n_per_task");
  if (parallelism < 1) throw ModelError("parallel must be >= 1");
  if (perception.views < 1) throw ModelError("noise.views must be >= 1");
  if (max_consecutive_planner_errors < 1) throw ModelError("max_consecutive_planner_errors must be >= 1");
  planner.validate();
  sim.validate();
  perception.model.validate();
  if (!template_text.empty()) PromptTemplate tmpl(template_text);
}

ordered_json sim_to_json(const SimConfig& s) {
  return {
      {"max_aperture", s.max_aperture},
      {"jaw_depth", s.jaw_depth},
      {"grasp_xy_tolerance", s.grasp_xy_tolerance},
      {"contact_tolerance", s.contact_tolerance},
      {"placement_overlap_tolerance", s.placement_overlap_tolerance},
      {"workspace", {{"min", s.workspace.min}, {"max", s.workspace.max}}},
      {"max_commands_per_episode", s.max_commands_per_episode},
  };
}

ordered_json to_json(const RunConfig& c) {
  ordered_json tasks = ordered_json::array();
  for (auto t : c.tasks) tasks.push_back(to_string(t));
  const PlannerConfig& p = c.planner;
  const NoiseModel& n = c.perception.model;
  const std::string text = c.template_text.empty() ? std::string(default_template_text()) : c.template_text;
  return {
      {"tasks", tasks},
      {"n_per_task", c.n_per_task},
      {"max_attempts_per_task", c.attempt_budget()},
      {"episodes_per_task", c.episodes_per_task},
      {"seed", c.master_seed},
      {"parallel", c.parallelism},
      {"output_dir", c.output_dir},
      {"template_path", c.template_path},
      {"template_sha256", sha256(text).hex()},
      {"state", c.noisy_state ? "noisy" : "truth"},
      {"max_consecutive_planner_errors", c.max_consecutive_planner_errors},
      {"planner",
       {{"kind", to_string(p.kind)},
        {"failure_rate", p.failure_rate},
        {"endpoint", p.endpoint},
        {"model", p.model},
        {"temperature", p.temperature},
        {"max_tokens", p.max_tokens},
        {"timeout_s", p.timeout_s},
        {"max_attempts", p.retry.max_attempts},
        {"backoff_base_s", p.retry.backoff_base_s},
        {"max_in_flight", p.max_in_flight},
        {"api_key_env", p.api_key_env},
        {"verbose", p.verbose}}},
      {"sim", sim_to_json(c.sim)},
      {"noise",
       {{"sigma_pos", n.sigma_pos},
        {"sigma_dim", n.sigma_dim},
        {"sigma_yaw", n.sigma_yaw},
        {"outlier_probability", n.outlier_probability},
        {"outlier_offset_range", n.outlier_offset_range},
        {"views", c.perception.views}}},
  };
}

Result<SimConfig, ConfigError> sim_from_json(const nlohmann::json& doc) {
  try {
    SimConfig sim = sim_from(doc, SimConfig{});
    sim.validate();
    return sim;
  } catch (const KeyError& e) {
    return unexpected(ConfigError{e.message});
  } catch (const std::exception& e) {
    return unexpected(ConfigError{std::string("sim: ") + e.what()});
  }
}

Result<RunConfig, ConfigError> config_from_json(const nlohmann::json& doc, RunConfig c) {
  try {
    check_keys(doc,
               {"tasks", "n_per_task", "max_attempts_per_task", "episodes_per_task", "seed", "parallel", "output_dir",
                "template_path", "template_sha256", "state", "max_consecutive_planner_errors", "planner", "sim",
                "noise"},
               "");
    if (doc.contains("tasks")) {
      const json& t = doc.at("tasks");
      if (t.is_string() && t.get<std::string>() == "all") {
        c.tasks.assign(kAllTasks.begin(), kAllTasks.end());
      } else {
        c.tasks.clear();
        for (const auto& name : t) {
          const auto id = task_from_string(name.get<std::string>());
          if (!id) throw KeyError{"unknown task '" + name.get<std::string>() + "'"};
          c.tasks.push_back(*id);
        }
      }
    }
    read(doc, "n_per_task", c.n_per_task);
    if (doc.contains("max_attempts_per_task")) {
      const json& m = doc.at("max_attempts_per_task");
      c.max_attempts_per_task = m.is_null() ? std::nullopt : std::optional<std::size_t>(m.get<std::size_t>());
    }
    read(doc, "episodes_per_task", c.episodes_per_task);
    read(doc, "seed", c.master_seed);
    read(doc, "parallel", c.parallelism);
    read(doc, "output_dir", c.output_dir);
    read(doc, "template_path", c.template_path);
    read(doc, "max_consecutive_planner_errors", c.max_consecutive_planner_errors);
    if (doc.contains("state")) {
      const auto state = doc.at("state").get<std::string>();
      if (state != "truth" && state != "noisy") throw KeyError{"state must be 'truth' or 'noisy'"};
      c.noisy_state = state == "noisy";
    }
    if (doc.contains("planner")) planner_from(doc.at("planner"), c.planner);
    if (doc.contains("sim")) c.sim = sim_from(doc.at("sim"), c.sim);
    if (doc.contains("noise")) c.perception.model = noise_from(doc.at("noise"), c.perception);
    return c;
  } catch (const KeyError& e) {
    return unexpected(ConfigError{e.message});
  } catch (const nlohmann::json::exception& e) {
    return unexpected(ConfigError{std::string("config value has the wrong type: ") + e.what()});
  }
}

Result<RunConfig, ConfigError> load_config_file(const std::string& path, bool* seed_given) {
  std::ifstream in(path);
  if (!in) return unexpected(ConfigError{"cannot read config file '" + path + "'"});
  auto doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) return unexpected(ConfigError{"config file '" + path + "' is not valid JSON"});
  auto config = config_from_json(doc);
  if (!config) return config;
  if (seed_given != nullptr) *seed_given = doc.is_object() && doc.contains("seed");
  if (!config->template_path.empty()) {
    namespace fs = std::filesystem;
    fs::path tpath(config->template_path);
    if (tpath.is_relative() && !fs::exists(tpath)) tpath = fs::path(path).parent_path() / tpath;
    std::ifstream t(tpath);
    if (!t) return unexpected(ConfigError{"cannot read template file '" + config->template_path + "'"});
    std::ostringstream text;
    text << t.rdbuf();
    config->template_text = text.str();
  }
  return config;
}

}  // namespace simboot
