#include "leap/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "config_json.hpp"
#include "leap/error.hpp"

namespace leap {

namespace {

// A TOML table that remembers which keys were read, so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const toml::table* table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

  bool present() const { return table_ != nullptr; }
  bool has(const std::string& key) const { return table_ && table_->contains(key); }
  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  double number(const std::string& key, double fallback) {
    auto v = optional_number(key);
    return v ? *v : fallback;
  }

  std::optional<double> optional_number(const std::string& key) {
    const toml::node* node = take(key);
    if (!node) return std::nullopt;
    if (auto f = node->value_exact<double>()) return *f;
    if (auto i = node->value_exact<std::int64_t>()) return static_cast<double>(*i);
    throw ConfigError(field(key), "expected a number");
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const toml::node* node = take(key);
    if (!node) return fallback;
    if (auto i = node->value_exact<std::int64_t>()) return *i;
    throw ConfigError(field(key), "expected an integer");
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(field(key), "must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    const auto v = integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ConfigError(field(key), "seeds must be >= 0");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean(const std::string& key, bool fallback) {
    const toml::node* node = take(key);
    if (!node) return fallback;
    if (auto b = node->value_exact<bool>()) return *b;
    throw ConfigError(field(key), "expected true or false");
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const toml::node* node = take(key);
    if (!node) return fallback;
    if (auto s = node->value_exact<std::string>()) return *s;
    throw ConfigError(field(key), "expected a string");
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    const toml::array* arr = array(key);
    if (!arr) return std::nullopt;
    std::vector<double> out;
    for (const auto& el : *arr) {
      if (auto f = el.value_exact<double>()) out.push_back(*f);
      else if (auto i = el.value_exact<std::int64_t>()) out.push_back(static_cast<double>(*i));
      else throw ConfigError(field(key), "expected an array of numbers");
    }
    return out;
  }

  std::optional<std::vector<std::int64_t>> integers(const std::string& key) {
    const toml::array* arr = array(key);
    if (!arr) return std::nullopt;
    std::vector<std::int64_t> out;
    for (const auto& el : *arr) {
      auto i = el.value_exact<std::int64_t>();
      if (!i) throw ConfigError(field(key), "expected an array of integers");
      out.push_back(*i);
    }
    return out;
  }

  const toml::array* array(const std::string& key) {
    const toml::node* node = take(key);
    if (!node) return nullptr;
    if (!node->is_array()) throw ConfigError(field(key), "expected an array");
    return node->as_array();
  }

  Section subsection(const std::string& key) {
    const toml::node* node = take(key);
    if (!node) return Section(nullptr, field(key));
    if (!node->is_table()) throw ConfigError(field(key), "expected a table");
    return Section(node->as_table(), field(key));
  }

  void finish() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      (void)node;
      const std::string k(key.str());
      if (!used_.count(k)) throw ConfigError(field(k), "unknown key");
    }
  }

 private:
  const toml::node* take(const std::string& key) {
    if (!table_) return nullptr;
    used_.insert(key);
    return table_->get(key);
  }

  const toml::table* table_;
  std::string prefix_;
  std::set<std::string> used_;
};

int to_int(std::int64_t v, const std::string& field) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(field, "out of range");
  return static_cast<int>(v);
}

ScheduleKind schedule_kind_from(const std::string& s, const std::string& field) {
  if (s == "constant") return ScheduleKind::Constant;
  if (s == "step_decay") return ScheduleKind::StepDecay;
  if (s == "cosine_warm_restart") return ScheduleKind::CosineWarmRestart;
  throw ConfigError(field, "expected constant, step_decay or cosine_warm_restart; got '" + s + "'");
}

void parse_model(Section s, ExperimentConfig& cfg) {
  if (!s.present()) return;
  const bool has_preset = s.has("preset");
  const bool has_dims = s.has("layer_dims");
  if (has_preset == has_dims) throw ConfigError(s.field("layer_dims"), "give exactly one of model.preset or model.layer_dims");
  MlpSpec spec;
  if (has_preset) {
    cfg.model_preset = s.string("preset", "");
    spec = mlp_preset(cfg.model_preset);
  } else {
    const auto dims = s.integers("layer_dims");
    for (auto d : *dims) spec.layer_dims.push_back(to_int(d, s.field("layer_dims")));
  }
  spec.init_gain = s.number("init_gain", spec.init_gain);
  const auto act = s.string("activation", "relu");
  if (act != "relu") throw ConfigError(s.field("activation"), "only relu is supported");
  const auto loss = s.string("loss", "softmax_cross_entropy");
  if (loss != "softmax_cross_entropy") throw ConfigError(s.field("loss"), "only softmax_cross_entropy is supported");
  s.finish();
  validate(spec);
  cfg.model = spec;
}

void parse_data(Section s, DataConfig& d) {
  d.kind = s.string("kind", d.kind);
  if (d.kind != "mnist" && d.kind != "blobs") throw ConfigError(s.field("kind"), "expected mnist or blobs; got '" + d.kind + "'");
  d.path = s.string("path", d.path);
  d.split_seed = s.seed("split_seed", d.split_seed);
  d.batch_size = s.count("batch_size", d.batch_size);
  d.train_n = s.count("train_n", d.train_n);
  d.val_n = s.count("val_n", d.val_n);
  d.standardize = s.boolean("standardize", d.standardize);
  d.n_per_class = s.count("n_per_class", d.n_per_class);
  d.test_per_class = s.count("test_per_class", d.test_per_class);
  d.num_classes = to_int(s.integer("num_classes", d.num_classes), s.field("num_classes"));
  d.dim = to_int(s.integer("dim", d.dim), s.field("dim"));
  d.separation = s.number("separation", d.separation);
  d.blobs_seed = s.seed("blobs_seed", d.blobs_seed);
  s.finish();
  if (d.batch_size < 1) throw ConfigError("data.batch_size", "must be >= 1");
  if (d.kind == "blobs") {
    if (d.n_per_class < 1) throw ConfigError("data.n_per_class", "must be >= 1");
    if (d.test_per_class < 1) throw ConfigError("data.test_per_class", "must be >= 1");
    if (d.num_classes < 1) throw ConfigError("data.num_classes", "must be >= 1");
    if (d.dim < d.num_classes) throw ConfigError("data.dim", "must be >= data.num_classes");
    if (!(d.separation > 0.0)) throw ConfigError("data.separation", "must be > 0");
    if (d.train_n + d.val_n > d.n_per_class * static_cast<std::size_t>(d.num_classes))
      throw ConfigError("data.train_n", "train_n + val_n exceeds n_per_class * num_classes");
  }
}

void parse_schedule(Section s, ScheduleSpec& spec) {
  if (!s.present()) throw ConfigError("schedule", "missing [schedule] table");
  spec.kind = schedule_kind_from(s.string("kind", "constant"), s.field("kind"));
  spec.eta0 = s.number("eta0", spec.eta0);
  switch (spec.kind) {
    case ScheduleKind::Constant:
      break;
    case ScheduleKind::StepDecay:
      // The defaults exist, but an experiment must state them.
      if (!s.has("gamma")) throw ConfigError(s.field("gamma"), "step_decay needs an explicit gamma");
      if (!s.has("step_size")) throw ConfigError(s.field("step_size"), "step_decay needs an explicit step_size");
      spec.gamma = s.number("gamma", spec.gamma);
      spec.step_size = to_int(s.integer("step_size", spec.step_size), s.field("step_size"));
      break;
    case ScheduleKind::CosineWarmRestart:
      spec.eta_min = s.number("eta_min", spec.eta_min);
      spec.t0 = to_int(s.integer("t0", spec.t0), s.field("t0"));
      spec.t_mult = to_int(s.integer("t_mult", spec.t_mult), s.field("t_mult"));
      break;
  }
  s.finish();
  validate(spec);
}

void parse_optimizer(Section s, OptimizerConfig& o) {
  const auto kind = s.string("kind", "sgd");
  if (kind == "sgd") o.kind = OptimizerKind::Sgd;
  else if (kind == "adam") o.kind = OptimizerKind::Adam;
  else throw ConfigError(s.field("kind"), "expected sgd or adam; got '" + kind + "'");
  o.momentum_beta = s.number("momentum", o.momentum_beta);
  o.beta1 = s.number("beta1", o.beta1);
  o.beta2 = s.number("beta2", o.beta2);
  o.epsilon = s.number("epsilon", o.epsilon);
  o.weight_decay = s.number("weight_decay", o.weight_decay);
  const auto mode = s.string("adam_mode", "scale_final_step");
  if (mode == "scale_final_step") o.adam_mode = LeapAdamMode::ScaleFinalStep;
  else if (mode == "scale_gradient") o.adam_mode = LeapAdamMode::ScaleGradient;
  else throw ConfigError(s.field("adam_mode"), "expected scale_final_step or scale_gradient");
  s.finish();
  validate(o);
}

void parse_leap(Section s, LeapConfig& l) {
  l.enabled = s.boolean("enabled", l.enabled);
  l.sigma = s.number("sigma", l.sigma);
  s.finish();
  validate(l);
}

void parse_landscape(Section s, LandscapeConfig& l) {
  l.kind = s.string("kind", l.kind);
  Section p = s.subsection("params");
  if (l.kind == "quartic") {
    if (auto k = p.optional_number("kappa_transverse")) l.quartic.kappa_transverse = *k;
    l.quartic.tilt = p.number("tilt", l.quartic.tilt);
    l.quartic.barrier_scale = p.number("barrier_scale", l.quartic.barrier_scale);
  } else if (l.kind == "curvature_family") {
    l.k_flat = p.number("k_flat", l.k_flat);
    l.k_sharp = p.number("k_sharp", l.k_sharp);
    l.delta_L = p.number("delta_L", l.delta_L);
    if (auto c = p.optional_number("saddle_curvature")) l.saddle_curvature = *c;
  } else if (l.kind == "quadratic_bowl") {
    if (auto d = p.numbers("diag")) l.diag = *d;
  } else {
    throw ConfigError(s.field("kind"), "expected quartic, curvature_family or quadratic_bowl; got '" + l.kind + "'");
  }
  p.finish();
  s.finish();
}

void parse_escape(Section s, EscapeConfig& e) {
  e.mode = s.string("mode", e.mode);
  if (e.mode != "trials" && e.mode != "theorem1" && e.mode != "selection")
    throw ConfigError(s.field("mode"), "expected trials, theorem1 or selection; got '" + e.mode + "'");
  e.minimum = s.string("minimum", e.minimum);
  e.noise = gradient_noise_from_string(s.string("gradient_noise", std::string(to_string(e.noise))));
  e.eta = s.number("eta", e.eta);
  e.sigma = s.number("sigma", e.sigma);
  e.trials = s.count("trials", e.trials);
  e.max_steps = s.integer("max_steps", e.max_steps);
  e.selection_runs = s.count("selection_runs", e.selection_runs);
  e.selection_steps = s.integer("selection_steps", e.selection_steps);
  if (const toml::array* grid = s.array("grid")) {
    for (const auto& el : *grid) {
      const toml::table* t = el.as_table();
      if (!t) throw ConfigError(s.field("grid"), "expected an array of {eta, sigma} tables");
      Section g(t, s.field("grid"));
      GridPoint p;
      p.eta = g.number("eta", 0.0);
      p.sigma = g.number("sigma", 0.0);
      g.finish();
      if (!(p.eta > 0.0) || !(p.sigma > 0.0)) throw ConfigError(s.field("grid"), "every point needs eta > 0 and sigma > 0");
      e.grid.push_back(p);
    }
  }
  s.finish();
  if (!(e.eta > 0.0)) throw ConfigError("escape.eta", "must be > 0");
  if (!(e.sigma >= 0.0)) throw ConfigError("escape.sigma", "must be >= 0");
  if (e.max_steps < 1) throw ConfigError("escape.max_steps", "must be >= 1");
  if (e.selection_steps < 1) throw ConfigError("escape.selection_steps", "must be >= 1");
}

void parse_flatness(Section s, FlatnessConfig& f) {
  f.options.max_iters = s.count("max_iters", f.options.max_iters);
  f.options.tol = s.number("tol", f.options.tol);
  f.options.fd_epsilon = s.number("fd_epsilon", f.options.fd_epsilon);
  f.options.probe_points = s.count("probe_points", f.options.probe_points);
  f.examples = s.count("examples", f.examples);
  f.vanilla_run = s.string("vanilla_run", f.vanilla_run);
  f.leap_run = s.string("leap_run", f.leap_run);
  s.finish();
  if (f.options.max_iters < 1) throw ConfigError("flatness.max_iters", "must be >= 1");
  if (!(f.options.tol > 0.0)) throw ConfigError("flatness.tol", "must be > 0");
  if (!(f.options.fd_epsilon > 0.0)) throw ConfigError("flatness.fd_epsilon", "must be > 0");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError("toml", msg.str());
  }

  ExperimentConfig cfg;
  cfg.source = source;
  Section top(&root, "");
  cfg.name = top.string("name", cfg.name);
  if (cfg.name.empty() || cfg.name.find('/') != std::string::npos || cfg.name == "." || cfg.name == "..")
    throw ConfigError("name", "must be a non-empty single path component");
  cfg.output_dir = top.string("output_dir", cfg.output_dir);
  cfg.epochs = to_int(top.integer("epochs", cfg.epochs), "epochs");
  if (cfg.epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (auto seeds = top.integers("seeds")) {
    if (seeds->empty()) throw ConfigError("seeds", "must not be empty");
    cfg.seeds.clear();
    for (auto s : *seeds) {
      if (s < 0) throw ConfigError("seeds", "seeds must be >= 0");
      cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  cfg.max_wall_time_s = top.number("max_wall_time_s", cfg.max_wall_time_s);
  if (!(cfg.max_wall_time_s >= 0.0)) throw ConfigError("max_wall_time_s", "must be >= 0");

  parse_model(top.subsection("model"), cfg);
  if (Section s = top.subsection("data"); s.present()) parse_data(std::move(s), cfg.data);
  if (Section s = top.subsection("schedule"); s.present()) parse_schedule(std::move(s), cfg.schedule);
  if (Section s = top.subsection("optimizer"); s.present()) parse_optimizer(std::move(s), cfg.optimizer);
  if (Section s = top.subsection("leap"); s.present()) parse_leap(std::move(s), cfg.leap);
  if (Section s = top.subsection("sweep"); s.present()) {
    SweepConfig sw;
    if (auto sigmas = s.numbers("sigmas")) sw.sigmas = *sigmas;
    s.finish();
    if (sw.sigmas.empty()) throw ConfigError("sweep.sigmas", "grid must not be empty");
    for (double v : sw.sigmas)
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("sweep.sigmas", "every sigma must be finite and >= 0");
    cfg.sweep = sw;
  }
  if (Section s = top.subsection("landscape"); s.present()) {
    LandscapeConfig l;
    parse_landscape(std::move(s), l);
    cfg.landscape = l;
  }
  if (Section s = top.subsection("escape"); s.present()) {
    EscapeConfig e;
    parse_escape(std::move(s), e);
    cfg.escape = e;
  }
  if (Section s = top.subsection("flatness"); s.present()) {
    FlatnessConfig f;
    parse_flatness(std::move(s), f);
    cfg.flatness = f;
  }
  top.finish();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config", "cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

void validate_training(const ExperimentConfig& cfg) {
  if (!cfg.model) throw ConfigError("model", "missing [model] table");
  validate(*cfg.model);
  validate(cfg.schedule);
  validate(cfg.optimizer);
  validate(cfg.leap);
  if (cfg.epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (cfg.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  const auto& d = cfg.data;
  if (d.kind == "blobs") {
    if (cfg.model->input_dim() != d.dim) throw ConfigError("model.layer_dims", "input width must equal data.dim");
    if (cfg.model->num_classes() != d.num_classes)
      throw ConfigError("model.layer_dims", "output width must equal data.num_classes");
  } else {
    if (cfg.model->input_dim() != 784) throw ConfigError("model.layer_dims", "MNIST needs an input width of 784");
    if (cfg.model->num_classes() != 10) throw ConfigError("model.layer_dims", "MNIST needs an output width of 10");
  }
}

void validate_escape(const ExperimentConfig& cfg) {
  if (!cfg.landscape) throw ConfigError("landscape", "missing [landscape] table");
  if (!cfg.escape) throw ConfigError("escape", "missing [escape] table");
  const auto& e = *cfg.escape;
  if (cfg.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  if (e.mode == "theorem1" && e.grid.size() < kMinFitPoints)
    throw ConfigError("escape.grid", "theorem1 mode needs at least 4 grid points");
  if (e.mode != "selection" && e.trials < kMinRecordsForEstimate)
    throw ConfigError("escape.trials", "needs at least 100 trials per point");
  if (e.mode == "selection") {
    if (cfg.landscape->kind == "quadratic_bowl") throw ConfigError("landscape.kind", "selection needs a two-basin landscape");
    if (e.selection_runs < 500) throw ConfigError("escape.selection_runs", "must be >= 500");
  } else if (cfg.landscape->kind == "quadratic_bowl") {
    throw ConfigError("landscape.kind", "quadratic_bowl has no catalog to escape from");
  }
}

CatalogedLandscape build_landscape(const LandscapeConfig& cfg) {
  if (cfg.kind == "quartic") return quartic_double_well(cfg.quartic);
  if (cfg.kind == "curvature_family") return curvature_family(cfg.k_flat, cfg.k_sharp, cfg.delta_L, cfg.saddle_curvature);
  if (cfg.kind == "quadratic_bowl") return CatalogedLandscape{quadratic_bowl(cfg.diag), {}};
  throw ConfigError("landscape.kind", "unknown landscape '" + cfg.kind + "'");
}

namespace detail {

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  json j;
  j["name"] = cfg.name;
  // output_dir is left out so artifacts do not depend on where they were written.
  j["epochs"] = cfg.epochs;
  j["seeds"] = cfg.seeds;
  j["max_wall_time_s"] = cfg.max_wall_time_s;
  if (cfg.model) {
    j["model"] = {{"layer_dims", cfg.model->layer_dims},
                  {"init_gain", cfg.model->init_gain},
                  {"activation", "relu"},
                  {"loss", "softmax_cross_entropy"},
                  {"preset", cfg.model_preset}};
  }
  const auto& d = cfg.data;
  j["data"] = {{"kind", d.kind},           {"path", d.path},
               {"split_seed", d.split_seed}, {"batch_size", d.batch_size},
               {"train_n", d.train_n},       {"val_n", d.val_n},
               {"standardize", d.standardize}};
  if (d.kind == "blobs") {
    j["data"]["n_per_class"] = d.n_per_class;
    j["data"]["test_per_class"] = d.test_per_class;
    j["data"]["num_classes"] = d.num_classes;
    j["data"]["dim"] = d.dim;
    j["data"]["separation"] = d.separation;
    j["data"]["blobs_seed"] = d.blobs_seed;
  }
  const auto& s = cfg.schedule;
  j["schedule"] = {{"kind", std::string(to_string(s.kind))}, {"eta0", s.eta0}};
  if (s.kind == ScheduleKind::StepDecay) {
    j["schedule"]["gamma"] = s.gamma;
    j["schedule"]["step_size"] = s.step_size;
  } else if (s.kind == ScheduleKind::CosineWarmRestart) {
    j["schedule"]["eta_min"] = s.eta_min;
    j["schedule"]["t0"] = s.t0;
    j["schedule"]["t_mult"] = s.t_mult;
  }
  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"kind", std::string(to_string(o.kind))},
                    {"momentum", o.momentum_beta},
                    {"beta1", o.beta1},
                    {"beta2", o.beta2},
                    {"epsilon", o.epsilon},
                    {"weight_decay", o.weight_decay},
                    {"adam_mode", std::string(to_string(o.adam_mode))}};
  j["leap"] = {{"enabled", cfg.leap.enabled}, {"sigma", cfg.leap.sigma}};
  if (cfg.sweep) j["sweep"] = {{"sigmas", cfg.sweep->sigmas}};
  if (cfg.landscape) {
    const auto& l = *cfg.landscape;
    json p;
    if (l.kind == "quartic") {
      p["tilt"] = l.quartic.tilt;
      p["barrier_scale"] = l.quartic.barrier_scale;
      if (l.quartic.kappa_transverse) p["kappa_transverse"] = *l.quartic.kappa_transverse;
    } else if (l.kind == "curvature_family") {
      p["k_flat"] = l.k_flat;
      p["k_sharp"] = l.k_sharp;
      p["delta_L"] = l.delta_L;
      if (l.saddle_curvature) p["saddle_curvature"] = *l.saddle_curvature;
    } else {
      p["diag"] = l.diag;
    }
    j["landscape"] = {{"kind", l.kind}, {"params", p}};
  }
  if (cfg.escape) {
    const auto& e = *cfg.escape;
    json grid = json::array();
    for (const auto& g : e.grid) grid.push_back({{"eta", g.eta}, {"sigma", g.sigma}});
    j["escape"] = {{"mode", e.mode},
                   {"minimum", e.minimum},
                   {"gradient_noise", std::string(to_string(e.noise))},
                   {"eta", e.eta},
                   {"sigma", e.sigma},
                   {"trials", e.trials},
                   {"max_steps", e.max_steps},
                   {"selection_runs", e.selection_runs},
                   {"selection_steps", e.selection_steps},
                   {"grid", grid}};
  }
  if (cfg.flatness) {
    const auto& f = *cfg.flatness;
    j["flatness"] = {{"max_iters", f.options.max_iters},
                     {"tol", f.options.tol},
                     {"fd_epsilon", f.options.fd_epsilon},
                     {"probe_points", f.options.probe_points},
                     {"examples", f.examples},
                     {"vanilla_run", f.vanilla_run},
                     {"leap_run", f.leap_run}};
  }
  return j;
}

}  // namespace detail

std::string resolved_config_json(const ExperimentConfig& cfg) { return detail::config_to_json(cfg).dump(2); }

}  // namespace leap
