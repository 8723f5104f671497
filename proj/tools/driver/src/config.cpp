#include "gmsfem/driver/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gmsfem::driver {

namespace {

using boost::property_tree::ptree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const auto item = trim(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (!item.empty()) out.push_back(item);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

int parse_int(std::string_view text, std::string_view key) {
  const auto t = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw ConfigError(std::string(key) + ": not an integer: '" + t + "'");
  return v;
}

std::uint64_t parse_seed(std::string_view text, std::string_view key) {
  const auto t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) throw ConfigError(std::string(key) + ": not a seed: '" + t + "'");
  return v;
}

bool parse_bool(std::string_view text, std::string_view key) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(std::string(key) + ": not a boolean: '" + t + "'");
}

void apply_profile(ExperimentConfig& c, std::string_view name) {
  if (name == "desk") {
    c.n_coarse = 8;
    c.refine = 4;
  } else if (name == "paper") {
    c.n_coarse = 10;
    c.refine = 10;
  } else {
    throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk or paper)");
  }
  c.profile = std::string(name);
}

const std::set<std::string>& allowed_keys(const std::string& section) {
  static const std::map<std::string, std::set<std::string>> keys{
      {"", {"profile"}},
      {"mesh", {"n_coarse", "refine"}},
      {"field", {"preset", "file", "contrast", "background", "feature"}},
      {"bc", {"gx", "gy"}},
      {"source", {"kind"}},
      {"selection", {"policy", "lambda_off", "m_off", "full_snapshot_run"}},
      {"spectral", {"variant", "snapshot_tol"}},
      {"output", {"dir"}},
      {"check", {"seed", "trials", "contrasts", "skip_divergence_correction"}},
  };
  static const std::set<std::string> none;
  const auto it = keys.find(section);
  return it == keys.end() ? none : it->second;
}

}  // namespace

double parse_number(std::string_view text) {
  const auto t = trim(text);
  auto one = [&](std::string_view s) {
    const auto u = trim(s);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(u.data(), u.data() + u.size(), v);
    if (ec != std::errc() || ptr != u.data() + u.size() || u.empty()) throw ConfigError("not a number: '" + t + "'");
    return v;
  };
  const auto slash = t.find('/');
  if (slash == std::string::npos) return one(t);
  const double den = one(std::string_view(t).substr(slash + 1));
  if (den == 0) throw ConfigError("zero denominator in '" + t + "'");
  return one(std::string_view(t).substr(0, slash)) / den;
}

SelectionPolicy parse_policy(std::string_view text) {
  if (text == "threshold-ge") return SelectionPolicy::ThresholdGe;
  if (text == "smallest") return SelectionPolicy::Smallest;
  if (text == "all") return SelectionPolicy::All;
  throw ConfigError("unknown selection policy '" + std::string(text) + "' (threshold-ge, smallest, all)");
}

std::string policy_name(SelectionPolicy policy) {
  switch (policy) {
    case SelectionPolicy::ThresholdGe: return "threshold-ge";
    case SelectionPolicy::Smallest: return "smallest";
    case SelectionPolicy::All: return "all";
  }
  return "?";
}

SpectralVariant parse_variant(std::string_view text) {
  if (text == "numerics") return SpectralVariant::Numerics;
  if (text == "analysis") return SpectralVariant::Analysis;
  throw ConfigError("unknown spectral variant '" + std::string(text) + "' (numerics, analysis)");
}

std::string variant_name(SpectralVariant variant) {
  return variant == SpectralVariant::Numerics ? "numerics" : "analysis";
}

ExperimentConfig parse_config(std::string_view ini_text) {
  ptree tree;
  try {
    std::istringstream in{std::string(ini_text)};
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ExperimentConfig c;
  // profile first so explicit keys win
  if (const auto p = tree.get_optional<std::string>("profile")) apply_profile(c, trim(*p));

  bool has_preset = false, has_file = false;
  for (const auto& [name, node] : tree) {
    const bool is_section = !node.empty() || (node.data().empty() && !allowed_keys(name).empty());
    const std::string section = is_section ? name : "";
    const auto& keys = allowed_keys(section);
    if (is_section && keys.empty()) throw ConfigError("config: unknown section [" + name + "]");
    auto entries = is_section ? node : ptree{};
    if (!is_section) entries.put(name, node.data());
    for (const auto& [key, value] : entries) {
      const std::string full = section.empty() ? key : section + "." + key;
      if (!keys.count(key)) throw ConfigError("config: unknown key '" + full + "'");
      const std::string v = trim(value.data());
      if (full == "profile") continue;
      if (full == "mesh.n_coarse") c.n_coarse = parse_int(v, full);
      else if (full == "mesh.refine") c.refine = parse_int(v, full);
      else if (full == "field.preset") { c.preset = v; has_preset = true; }
      else if (full == "field.file") { c.field_file = v; has_file = true; }
      else if (full == "field.contrast") c.contrast = parse_number(v);
      else if (full == "field.background") c.background = parse_number(v);
      else if (full == "field.feature") c.feature = parse_number(v);
      else if (full == "bc.gx") c.g[0] = parse_number(v);
      else if (full == "bc.gy") c.g[1] = parse_number(v);
      else if (full == "source.kind") {
        if (v == "zero") c.source = SourceKind::Zero;
        else if (v == "manufactured") c.source = SourceKind::Manufactured;
        else throw ConfigError("source.kind: expected zero or manufactured, got '" + v + "'");
      } else if (full == "selection.policy") c.policy = parse_policy(v);
      else if (full == "selection.lambda_off") {
        c.lambda_off.clear();
        for (const auto& item : split_list(v)) c.lambda_off.push_back(parse_number(item));
      } else if (full == "selection.m_off") {
        c.m_off.clear();
        for (const auto& item : split_list(v)) c.m_off.push_back(parse_int(item, full));
      } else if (full == "selection.full_snapshot_run") c.full_snapshot_run = parse_bool(v, full);
      else if (full == "spectral.variant") c.variant = parse_variant(v);
      else if (full == "spectral.snapshot_tol") c.snapshot_tol = parse_number(v);
      else if (full == "output.dir") c.out_dir = v;
      else if (full == "check.seed") c.seed = parse_seed(v, full);
      else if (full == "check.trials") c.stability_trials = parse_int(v, full);
      else if (full == "check.contrasts") {
        c.sweep_contrasts.clear();
        for (const auto& item : split_list(v)) c.sweep_contrasts.push_back(parse_number(item));
      } else if (full == "check.skip_divergence_correction") c.skip_divergence_correction = parse_bool(v, full);
    }
  }
  if (has_preset && has_file) throw ConfigError("config: field.preset and field.file are both set; choose one");
  if (has_file) c.preset.clear();
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

ExperimentConfig apply_overrides(ExperimentConfig c, const ConfigOverrides& o) {
  if (o.profile) apply_profile(c, *o.profile);
  if (o.n_coarse) c.n_coarse = *o.n_coarse;
  if (o.refine) c.refine = *o.refine;
  if (o.preset && o.field_file) throw ConfigError("--preset and --field-file are exclusive");
  if (o.preset) {
    c.preset = *o.preset;
    c.field_file.clear();
  }
  if (o.field_file) {
    c.field_file = *o.field_file;
    c.preset.clear();
  }
  if (o.contrast) c.contrast = *o.contrast;
  if (o.policy) c.policy = parse_policy(*o.policy);
  if (!o.lambda_off.empty()) c.lambda_off = o.lambda_off;
  if (!o.m_off.empty()) c.m_off = o.m_off;
  if (o.variant) c.variant = parse_variant(*o.variant);
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.seed) c.seed = *o.seed;
  if (o.skip_divergence_correction) c.skip_divergence_correction = true;
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.n_coarse < 1 || c.refine < 1) throw ConfigError("mesh: n_coarse and refine must be at least 1");
  if (static_cast<long long>(c.n_coarse) * c.refine > NestedMesh::kMaxFineCells) throw ConfigError("mesh: too many fine cells");
  if (c.preset.empty() == c.field_file.empty()) throw ConfigError("field: exactly one of preset and file must be set");
  if (!c.preset.empty() && !is_preset(c.preset)) throw ConfigError("field: unknown preset '" + c.preset + "'");
  if (!(c.contrast >= 1.0) || !std::isfinite(c.contrast)) throw ConfigError("field: contrast must be finite and >= 1");
  if (c.background.has_value() != c.feature.has_value()) throw ConfigError("field: set both background and feature, or neither");
  if (c.background && !(*c.background > 0 && *c.feature > 0)) throw ConfigError("field: values must be positive");
  if (c.lambda_off.empty() && c.policy == SelectionPolicy::ThresholdGe) throw ConfigError("selection: empty lambda_off list");
  for (double l : c.lambda_off) {
    if (!(l > 0) || !std::isfinite(l)) throw ConfigError("selection: lambda_off values must be positive");
  }
  if (c.m_off.empty() && c.policy == SelectionPolicy::Smallest) throw ConfigError("selection: empty m_off list");
  for (int m : c.m_off) {
    if (m < 1) throw ConfigError("selection: m_off values must be at least 1");
  }
  if (!(c.snapshot_tol > 0 && c.snapshot_tol < 1)) throw ConfigError("spectral: snapshot_tol must lie in (0, 1)");
  if (c.stability_trials < 1) throw ConfigError("check: trials must be at least 1");
  for (double v : c.sweep_contrasts) {
    if (!(v >= 1.0) || !std::isfinite(v)) throw ConfigError("check: sweep contrasts must be finite and >= 1");
  }
  if (c.out_dir.empty()) throw ConfigError("output: empty directory");
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["profile"] = c.profile;
  j["mesh"] = {{"n_coarse", c.n_coarse}, {"refine", c.refine}, {"H", 1.0 / c.n_coarse}, {"h", 1.0 / (c.n_coarse * c.refine)}};
  nlohmann::json field;
  if (!c.preset.empty()) field["preset"] = c.preset;
  if (!c.field_file.empty()) field["file"] = c.field_file;
  field["contrast"] = c.contrast;
  if (c.background) {
    field["background"] = *c.background;
    field["feature"] = *c.feature;
  }
  j["field"] = field;
  j["bc"] = {c.g[0], c.g[1]};
  j["source"] = c.source == SourceKind::Zero ? "zero" : "manufactured";
  j["selection"] = {{"policy", policy_name(c.policy)},
                    {"lambda_off", c.lambda_off},
                    {"m_off", c.m_off},
                    {"full_snapshot_run", c.full_snapshot_run}};
  j["spectral"] = {{"variant", variant_name(c.variant)}, {"snapshot_tol", c.snapshot_tol}};
  j["output"] = c.out_dir.string();
  j["check"] = {{"seed", c.seed},
                {"trials", c.stability_trials},
                {"contrasts", c.sweep_contrasts},
                {"skip_divergence_correction", c.skip_divergence_correction}};
  return j;
}

NestedMesh build_mesh(const ExperimentConfig& c) { return NestedMesh::build(c.n_coarse, c.refine); }

PermeabilityField build_field(const ExperimentConfig& c, const NestedMesh& mesh, std::optional<double> contrast) {
  if (!c.field_file.empty()) {
    auto field = load_field(c.field_file);
    field.check_matches(mesh);
    return field;
  }
  if (c.background && !contrast) return generate_field(preset(c.preset, *c.background, *c.feature), mesh);
  return generate_field(preset_with_contrast(c.preset, contrast.value_or(c.contrast)), mesh);
}

std::vector<Selection> selections(const ExperimentConfig& c) {
  std::vector<Selection> out;
  switch (c.policy) {
    case SelectionPolicy::ThresholdGe:
      for (double l : c.lambda_off) out.push_back(Selection{SelectionPolicy::ThresholdGe, l, 0});
      break;
    case SelectionPolicy::Smallest:
      for (int m : c.m_off) out.push_back(Selection{SelectionPolicy::Smallest, 0, m});
      break;
    case SelectionPolicy::All:
      out.push_back(Selection{SelectionPolicy::All});
      break;
  }
  return out;
}

std::string selection_label(const Selection& s) {
  std::ostringstream os;
  switch (s.policy) {
    case SelectionPolicy::ThresholdGe: {
      const double inv = 1.0 / s.lambda_off;
      if (std::abs(inv - std::round(inv)) < 1e-9) os << "lambda_off=1/" << std::llround(inv);
      else os << "lambda_off=" << s.lambda_off;
      break;
    }
    case SelectionPolicy::Smallest: os << "m_off=" << s.m_off; break;
    case SelectionPolicy::All: os << "all"; break;
  }
  return os.str();
}

}  // namespace gmsfem::driver
