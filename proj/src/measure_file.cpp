#include "sflow/measure_file.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sflow/error.hpp"

namespace sflow {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 18 || s.rfind("0x", 0) != 0) throw Error(ErrorKind::CorruptFile, "bad hex field");
  return std::stoull(s.substr(2), nullptr, 16);
}

json frame_to_json(const Subspace& W) {
  json cols = json::array();
  for (int j = 0; j < W.dim(); ++j) {
    json col = json::array();
    for (int i = 0; i < W.ambient(); ++i) col.push_back(W.frame()(i, j));
    cols.push_back(col);
  }
  return cols;
}

Subspace frame_from_json(const json& j, int d) {
  std::vector<std::vector<double>> cols;
  for (const auto& c : j) cols.push_back(c.get<std::vector<double>>());
  return Subspace::from_vectors(d, cols);
}

}  // namespace

std::string measure_checksum(const json& doc) {
  json copy = doc;
  copy.erase("checksum");
  return hex64(fnv1a64(copy.dump()));
}

json rule_to_json(const CascadeRule& rule, const CellContext& root) {
  json j;
  j["type"] = rule_name(rule);
  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SubsetRule>) {
          j["children"] = r.children;
        } else if constexpr (std::is_same_v<T, FixedWeightsRule>) {
          j["weights"] = r.weights;
        } else if constexpr (std::is_same_v<T, PlaneRule>) {
          j["frame"] = frame_to_json(r.W);
        } else if constexpr (std::is_same_v<T, RandomWeightsRule>) {
          j["law"] = r.law == WeightLaw::Dirichlet ? "dirichlet" : "lognormal";
          j["param"] = r.param;
        } else if constexpr (std::is_same_v<T, SplicedRule>) {
          j["theta"] = r.theta;
          j["growth"] = r.growth;
          j["frame"] = frame_to_json(r.W);
        }
      },
      rule);
  json rj;
  rj["level"] = root.level;
  rj["hash"] = hex64(root.hash);
  rj["anchored"] = root.anchored;
  int d = 0;
  if (const auto* p = std::get_if<PlaneRule>(&rule)) d = p->W.ambient();
  if (const auto* s = std::get_if<SplicedRule>(&rule)) d = s->W.ambient();
  rj["anchor"] = std::vector<double>(root.anchor.begin(), root.anchor.begin() + d);
  j["root"] = rj;
  return j;
}

CascadeRule rule_from_json(const json& j, int d, CellContext& root) {
  std::string type = j.at("type").get<std::string>();
  CascadeRule rule;
  if (type == "uniform") {
    rule = UniformRule{};
  } else if (type == "subset") {
    rule = SubsetRule{j.at("children").get<std::vector<int>>()};
  } else if (type == "fixed-weights") {
    rule = FixedWeightsRule{j.at("weights").get<std::vector<double>>()};
  } else if (type == "plane") {
    rule = PlaneRule{frame_from_json(j.at("frame"), d)};
  } else if (type == "random-weights") {
    std::string law = j.at("law").get<std::string>();
    if (law != "dirichlet" && law != "lognormal") throw Error(ErrorKind::CorruptFile, "unknown law");
    rule = RandomWeightsRule{law == "dirichlet" ? WeightLaw::Dirichlet : WeightLaw::LogNormal,
                             j.at("param").get<double>()};
  } else if (type == "spliced") {
    rule = SplicedRule{j.at("theta").get<double>(), j.at("growth").get<int>(),
                       frame_from_json(j.at("frame"), d)};
  } else {
    throw Error(ErrorKind::CorruptFile, "unknown rule type '" + type + "'");
  }
  validate_rule(rule, d);
  const json& rj = j.at("root");
  root = CellContext{};
  root.level = rj.at("level").get<int>();
  root.hash = parse_hex64(rj.at("hash").get<std::string>());
  root.anchored = rj.at("anchored").get<bool>();
  auto anchor = rj.at("anchor").get<std::vector<double>>();
  if (anchor.size() > static_cast<size_t>(d)) throw Error(ErrorKind::CorruptFile, "anchor too long");
  for (size_t i = 0; i < anchor.size(); ++i) root.anchor[i] = anchor[i];
  return rule;
}

json measure_to_json(const DyadicMeasure& mu) {
  if (std::abs(mu.total_mass() - 1.0) > 1e-9)
    throw Error(ErrorKind::InvalidArgument,
                "only probability measures can be persisted (total " +
                    std::to_string(mu.total_mass()) + ")");
  json doc;
  doc["version"] = kMeasureFileVersion;
  doc["d"] = mu.dim();
  doc["kind"] = mu.kind();
  doc["rule"] = mu.rule() ? rule_to_json(*mu.rule(), mu.root_context()) : json(nullptr);
  doc["seed"] = mu.seed() ? json(*mu.seed()) : json(nullptr);
  json leaves = json::array();
  for (const auto& l : mu.leaves()) leaves.push_back({{"path", l.path}, {"mass", l.mass}});
  doc["leaves"] = leaves;
  doc["checksum"] = measure_checksum(doc);
  return doc;
}

DyadicMeasure measure_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw Error(ErrorKind::CorruptFile, "not a JSON object");
    if (doc.value("version", -1) != kMeasureFileVersion)
      throw Error(ErrorKind::CorruptFile, "unsupported version");
    if (!doc.contains("checksum") || !doc["checksum"].is_string())
      throw Error(ErrorKind::CorruptFile, "missing checksum");
    if (doc["checksum"].get<std::string>() != measure_checksum(doc))
      throw Error(ErrorKind::CorruptFile, "checksum mismatch");
    int d = doc.at("d").get<int>();
    if (d < 1 || d > kMaxDim) throw Error(ErrorKind::CorruptFile, "bad dimension");
    std::optional<CascadeRule> rule;
    std::optional<CellContext> root;
    if (!doc.at("rule").is_null()) {
      CellContext r;
      rule = rule_from_json(doc["rule"], d, r);
      root = r;
    }
    std::optional<std::uint64_t> seed;
    if (!doc.at("seed").is_null()) seed = doc["seed"].get<std::uint64_t>();
    std::vector<Leaf> leaves;
    double sum = 0;
    for (const auto& lj : doc.at("leaves")) {
      Leaf l{lj.at("path").get<std::vector<int>>(), lj.at("mass").get<double>()};
      if (!(l.mass >= 0) || !std::isfinite(l.mass))
        throw Error(ErrorKind::CorruptFile, "negative or non-finite mass");
      if (!leaves.empty() && !(leaves.back().path < l.path))
        throw Error(ErrorKind::CorruptFile, "leaves not sorted lexicographically");
      sum += l.mass;
      leaves.push_back(std::move(l));
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(ErrorKind::CorruptFile, "leaf masses sum to " + std::to_string(sum));
    return DyadicMeasure::from_leaves(d, leaves, doc.at("kind").get<std::string>(), rule, seed,
                                      root);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CorruptFile) throw;
    throw Error(ErrorKind::CorruptFile, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::CorruptFile, e.what());
  }
}

std::string persist_string(const DyadicMeasure& mu) { return measure_to_json(mu).dump(1) + "\n"; }

DyadicMeasure restore_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::CorruptFile, e.what());
  }
  return measure_from_json(doc);
}

void persist(const DyadicMeasure& mu, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  out << persist_string(mu);
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + path + "'");
}

DyadicMeasure restore(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::CorruptFile, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return restore_string(ss.str());
}

}  // namespace sflow
