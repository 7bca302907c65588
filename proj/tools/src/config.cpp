#include "enot/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "enot/data/rng.hpp"

namespace enot::cli {

namespace pt = boost::property_tree;

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::gaussian: return "gaussian";
    case TaskKind::translation: return "translation";
    case TaskKind::identity: return "identity";
    case TaskKind::mix: return "mix";
    case TaskKind::pair2d: return "pair2d";
    case TaskKind::sphere: return "sphere";
  }
  return "?";
}

std::optional<TaskKind> parse_task_kind(std::string_view name) {
  for (auto k : {TaskKind::gaussian, TaskKind::translation, TaskKind::identity, TaskKind::mix, TaskKind::pair2d,
                 TaskKind::sphere})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

void RunConfig::normalize() {
  const ad::Activation smooth = enot.uses_potential_maps() ? ad::Activation::smooth_elu : ad::Activation::elu;
  if (f_activation_auto) enot.f_arch.activation = smooth;
  if (g_activation_auto) enot.g_arch.activation = enot.bidirectional ? ad::Activation::smooth_elu : ad::Activation::elu;
}

std::vector<std::string> preset_names() { return {"high_dim", "synthetic2d", "celeba"}; }

RunConfig preset(std::string_view name) {
  RunConfig c;
  c.preset = std::string(name);
  ot::EnotConfig& e = c.enot;
  if (name == "high_dim") {
    // EnotConfig's own defaults are this table.
  } else if (name == "synthetic2d") {
    e.tau = 0.99;
    e.lambda = 0.3;
    e.batch_size = 10000;
    e.train_steps = 100000;
    e.f_arch.hidden = e.g_arch.hidden = {64, 64, 64, 64};
    e.f_opt = e.g_opt = {5e-4, 1e-4, 0.9, 0.999, 1e-8};
    c.task.kind = TaskKind::pair2d;
  } else if (name == "celeba") {
    // Optimizer and regularizer settings only; the convolutional potentials
    // and image data are not part of this project.
    e.tau = 0.99;
    e.lambda = 1.0;
    e.batch_size = 64;
    e.train_steps = 80000;
    e.f_opt = e.g_opt = {3e-4, 1e-4, 0.5, 0.5, 1e-8};
  } else {
    throw Error(ErrorKind::BadConfig, "unknown preset '" + std::string(name) + "'");
  }
  c.normalize();
  return c;
}

namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += fmt(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* what) {
  throw Error(ErrorKind::BadConfig, key + " = '" + value + "': " + what);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const std::string t = trim(v);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size() || !std::isfinite(out))
    bad(key, v, "expected a finite number");
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& v) {
  Int out{};
  const std::string t = trim(v);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || r.ec != std::errc{} || r.ptr != t.data() + t.size()) bad(key, v, "expected an integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  bad(key, v, "expected true or false");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, const std::string& v, F parse_one) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_one(key, item));
  if (out.empty()) bad(key, v, "expected a comma-separated list");
  return out;
}

using Setter = void (*)(RunConfig&, const std::string& key, const std::string& value);
using Getter = std::string (*)(const RunConfig&);

struct Field {
  const char* key;
  Getter get;
  Setter set;
};

void set_activation(nn::ArchitectureSpec& arch, bool& is_auto, const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "auto") {
    is_auto = true;
    return;
  }
  const auto a = ad::parse_activation(t);
  if (!a) bad(key, v, "expected auto, elu, smooth_elu or leaky_relu");
  is_auto = false;
  arch.activation = *a;
}

data::SamplerKind to_pair_sampler(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  for (auto k : {data::SamplerKind::gaussian, data::SamplerKind::circles2d, data::SamplerKind::moons2d})
    if (t == data::to_string(k)) return k;
  bad(key, v, "expected gaussian, circles2d or moons2d");
}

#define ENOT_FIELD(KEY, GET, SET) \
  Field { KEY, [](const RunConfig& c) -> std::string { return GET; }, [](RunConfig& c, const std::string& k, const std::string& v) { (void)k; SET; } }

#define ENOT_NET_FIELDS(NET, OPT, AUTO)                                                                          \
  ENOT_FIELD(#NET ".hidden", join(c.enot.NET.hidden), c.enot.NET.hidden = to_list<int>(k, v, to_int<int>)),    \
      ENOT_FIELD(#NET ".activation",                                                                           \
                 c.AUTO ? std::string("auto") : std::string(ad::to_string(c.enot.NET.activation)),            \
                 set_activation(c.enot.NET, c.AUTO, k, v)),                                                    \
      ENOT_FIELD(#NET ".init_seed", std::to_string(c.enot.NET.init_seed),                                      \
                 c.enot.NET.init_seed = to_int<std::uint64_t>(k, v)),                                          \
      ENOT_FIELD(#OPT ".lr0", fmt(c.enot.OPT.lr0), c.enot.OPT.lr0 = to_double(k, v)),                          \
      ENOT_FIELD(#OPT ".lr_final", fmt(c.enot.OPT.lr_final), c.enot.OPT.lr_final = to_double(k, v)),           \
      ENOT_FIELD(#OPT ".beta1", fmt(c.enot.OPT.beta1), c.enot.OPT.beta1 = to_double(k, v)),                    \
      ENOT_FIELD(#OPT ".beta2", fmt(c.enot.OPT.beta2), c.enot.OPT.beta2 = to_double(k, v)),                    \
      ENOT_FIELD(#OPT ".eps", fmt(c.enot.OPT.eps), c.enot.OPT.eps = to_double(k, v))

// Order here is the order of the written file. run.preset is handled apart.
const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      ENOT_FIELD("run.seed", std::to_string(c.enot.seed), c.enot.seed = to_int<std::uint64_t>(k, v)),
      ENOT_FIELD("run.out_dir", c.out_dir, c.out_dir = trim(v)),

      ENOT_FIELD("task.kind", std::string(to_string(c.task.kind)), {
        const auto t = parse_task_kind(trim(v));
        if (!t) bad(k, v, "expected gaussian, translation, identity, mix, pair2d or sphere");
        c.task.kind = *t;
      }),
      ENOT_FIELD("task.dim", std::to_string(c.task.dim), c.task.dim = to_int<int>(k, v)),
      ENOT_FIELD("task.seed", std::to_string(c.task.seed), c.task.seed = to_int<std::uint64_t>(k, v)),
      ENOT_FIELD("task.shift", join(c.task.shift), c.task.shift = to_list<double>(k, v, to_double)),
      ENOT_FIELD("task.k_source", std::to_string(c.task.k_source), c.task.k_source = to_int<int>(k, v)),
      ENOT_FIELD("task.k_target", std::to_string(c.task.k_target), c.task.k_target = to_int<int>(k, v)),
      ENOT_FIELD("task.source", std::string(data::to_string(c.task.source)), c.task.source = to_pair_sampler(k, v)),
      ENOT_FIELD("task.target", std::string(data::to_string(c.task.target)), c.task.target = to_pair_sampler(k, v)),
      ENOT_FIELD("task.noise", fmt(c.task.noise), c.task.noise = to_double(k, v)),
      ENOT_FIELD("task.angle", fmt(c.task.angle), c.task.angle = to_double(k, v)),
      ENOT_FIELD("task.spread", fmt(c.task.spread), c.task.spread = to_double(k, v)),

      ENOT_FIELD("enot.tau", fmt(c.enot.tau), c.enot.tau = to_double(k, v)),
      ENOT_FIELD("enot.lambda", fmt(c.enot.lambda), c.enot.lambda = to_double(k, v)),
      ENOT_FIELD("enot.bidirectional", c.enot.bidirectional ? "true" : "false",
                 c.enot.bidirectional = to_bool(k, v)),
      ENOT_FIELD("enot.map", std::string(ot::to_string(c.enot.map_parametrization)), {
        const auto m = ot::parse_map_parametrization(trim(v));
        if (!m) bad(k, v, "expected residual_mlp or potential_gradient");
        c.enot.map_parametrization = *m;
      }),
      ENOT_FIELD("enot.batch_size", std::to_string(c.enot.batch_size), c.enot.batch_size = to_int<int>(k, v)),
      ENOT_FIELD("enot.train_steps", std::to_string(c.enot.train_steps),
                 c.enot.train_steps = to_int<std::int64_t>(k, v)),
      ENOT_FIELD("enot.cost", std::string(ot::to_string(c.enot.cost.kind)), {
        const auto kind = ot::parse_cost(trim(v));
        if (!kind) bad(k, v, "expected half_sq_euclidean, sq_euclidean, euclidean or sphere_geodesic");
        c.enot.cost.kind = *kind;
      }),

      ENOT_NET_FIELDS(f_arch, f_opt, f_activation_auto),
      ENOT_NET_FIELDS(g_arch, g_opt, g_activation_auto),

      ENOT_FIELD("eval.n_eval", std::to_string(c.eval.n_eval), c.eval.n_eval = to_int<int>(k, v)),
      ENOT_FIELD("eval.uvp_samples", std::to_string(c.eval.uvp_samples), c.eval.uvp_samples = to_int<int>(k, v)),
      ENOT_FIELD("eval.sinkhorn_epsilon", c.eval.sinkhorn_epsilon ? fmt(*c.eval.sinkhorn_epsilon) : "auto", {
        if (trim(v) == "auto")
          c.eval.sinkhorn_epsilon.reset();
        else
          c.eval.sinkhorn_epsilon = to_double(k, v);
      }),
  };
  return all;
}

#undef ENOT_NET_FIELDS
#undef ENOT_FIELD

// Config sections use f_net/g_net names on disk; the table keys name the
// EnotConfig members.
std::string disk_key(std::string key) {
  for (auto [from, to] : {std::pair{"f_arch.", "f_net."}, std::pair{"g_arch.", "g_net."}})
    if (key.rfind(from, 0) == 0) key = to + key.substr(std::string(from).size());
  return key;
}

void apply_override(pt::ptree& tree, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::BadConfig, "override '" + assignment + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const auto dot = key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos)
    throw Error(ErrorKind::BadConfig, "override key '" + key + "' must look like section.key");
  tree.put(pt::ptree::path_type(key, '.'), trim(assignment.substr(eq + 1)));
}

RunConfig from_tree(const pt::ptree& tree) {
  std::string preset_name = "high_dim";
  if (auto run = tree.get_child_optional("run"))
    if (auto p = run->get_optional<std::string>("preset")) preset_name = trim(*p);
  RunConfig c = preset(preset_name);

  std::set<std::string> known = {"run.preset"};
  for (const Field& f : fields()) known.insert(disk_key(f.key));
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw Error(ErrorKind::BadConfig, "key '" + section + "' is outside any section");
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      if (!known.count(key)) throw Error(ErrorKind::BadConfig, "unknown key '" + key + "'");
    }
  }
  for (const Field& f : fields()) {
    const std::string key = disk_key(f.key);
    const auto dot = key.find('.');
    const auto sec = tree.get_child_optional(key.substr(0, dot));
    if (!sec) continue;
    if (auto v = sec->get_optional<std::string>(key.substr(dot + 1))) f.set(c, key, *v);
  }
  c.normalize();
  return c;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed config: ") + e.message() + " at line " +
                                          std::to_string(e.line()));
  }
  for (const auto& o : overrides) apply_override(tree, o);
  return from_tree(tree);
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string serialize(const RunConfig& config) {
  std::ostringstream out;
  out << "; ENOT run configuration\n\n[run]\npreset = " << config.preset << '\n';
  std::string section = "run";
  for (const Field& f : fields()) {
    const std::string key = disk_key(f.key);
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out << "\n[" << section << "]\n";
    }
    out << key.substr(dot + 1) << " = " << f.get(config) << '\n';
  }
  return out.str();
}

std::vector<std::string> validate(RunConfig& config) {
  config.normalize();
  const TaskSpec& t = config.task;
  require(t.dim >= 1, ErrorKind::BadConfig, "task.dim must be >= 1");
  require(t.noise >= 0.0, ErrorKind::BadConfig, "task.noise must be >= 0");
  switch (t.kind) {
    case TaskKind::translation:
      require(t.shift.size() == 1 || static_cast<int>(t.shift.size()) == t.dim, ErrorKind::BadConfig,
              "task.shift needs one value or task.dim values");
      break;
    case TaskKind::mix:
      require(t.k_source >= 1 && t.k_target >= 1, ErrorKind::BadConfig, "mixtures need k >= 1");
      break;
    case TaskKind::pair2d:
      require(t.dim == 2, ErrorKind::BadConfig, "pair2d tasks are two-dimensional");
      break;
    case TaskKind::sphere:
      require(t.dim >= 2, ErrorKind::BadConfig, "sphere tasks need dim >= 2");
      require(t.spread > 0.0, ErrorKind::BadConfig, "task.spread must be positive");
      break;
    default: break;
  }
  const bool geodesic = config.enot.cost.kind == ot::CostKind::sphere_geodesic;
  require(geodesic == (t.kind == TaskKind::sphere), ErrorKind::BadConfig,
          "the sphere_geodesic cost and sphere tasks go together");
  require(config.eval.n_eval >= 1 && config.eval.uvp_samples >= 1000, ErrorKind::BadConfig,
          "eval.n_eval must be >= 1 and eval.uvp_samples >= 1000");
  require(!config.eval.sinkhorn_epsilon || *config.eval.sinkhorn_epsilon > 0.0, ErrorKind::BadConfig,
          "eval.sinkhorn_epsilon must be positive");
  require(!config.out_dir.empty(), ErrorKind::BadConfig, "run.out_dir is empty");
  return ot::validate(config.enot);
}

data::GroundTruthTask build_task(const TaskSpec& t) {
  switch (t.kind) {
    case TaskKind::gaussian: return data::make_gaussian_task(t.dim, t.seed);
    case TaskKind::translation: {
      const Vector shift = t.shift.size() == 1 ? Vector(Vector::Constant(t.dim, t.shift[0]))
                                               : Vector(Eigen::Map<const Vector>(t.shift.data(), t.dim));
      return data::make_translation_task(shift, t.seed);
    }
    case TaskKind::identity: return data::make_identity_task(t.dim, t.seed);
    case TaskKind::mix: return data::make_mix_task(t.k_source, t.k_target, t.dim, t.seed);
    case TaskKind::sphere: return data::make_sphere_task(t.dim, t.angle, t.spread, t.seed);
    case TaskKind::pair2d: {
      auto make = [&](data::SamplerKind k, std::uint64_t side) {
        const std::uint64_t s = data::derive_seed(t.seed, side);
        switch (k) {
          case data::SamplerKind::circles2d: return data::MeasureSampler::circles2d(s, t.noise);
          case data::SamplerKind::moons2d: return data::MeasureSampler::moons2d(s, t.noise);
          default: return data::MeasureSampler::gaussian(Vector::Zero(2), Matrix::Identity(2, 2), s);
        }
      };
      return {"pair2d:" + std::string(data::to_string(t.source)) + "->" + std::string(data::to_string(t.target)),
              make(t.source, 1), make(t.target, 2), std::nullopt, std::nullopt};
    }
  }
  throw Error(ErrorKind::BadConfig, "unknown task kind");
}

}  // namespace enot::cli
