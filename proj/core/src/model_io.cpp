#include "phasornet/model_io.hpp"

#include <fmt/format.h>

#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"
#include "phasornet/error.hpp"

namespace phasornet {

namespace {

using nlohmann::json;

template <typename Range>
void append_reals(std::string& out, const Range& values) {
  out += '[';
  bool first = true;
  for (double v : values) {
    if (!first) out += ',';
    first = false;
    fmt::format_to(std::back_inserter(out), "{:.17g}", v);
  }
  out += ']';
}

std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

// Field access that names the offending path on failure.
const json& field(const json& obj, const std::string& parent,
                  const std::string& key) {
  const std::string path = parent.empty() ? key : parent + "." + key;
  PHASORNET_CHECK(obj.is_object(), "model file: '" + parent + "' is not an object");
  auto it = obj.find(key);
  PHASORNET_CHECK(it != obj.end(), "model file: missing field '" + path + "'");
  return *it;
}

template <typename T>
T get_as(const json& obj, const std::string& parent, const std::string& key) {
  const json& v = field(obj, parent, key);
  const std::string path = parent.empty() ? key : parent + "." + key;
  try {
    if constexpr (std::is_unsigned_v<T>) {
      PHASORNET_CHECK(v.is_number_unsigned(),
                      "model file: field '" + path + "' must be a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      PHASORNET_CHECK(v.is_number(), "model file: field '" + path + "' must be a number");
    }
    return v.get<T>();
  } catch (const json::exception&) {
    throw Error("model file: field '" + path + "' has the wrong type");
  }
}

std::vector<double> get_reals(const json& obj, const std::string& parent,
                              const std::string& key, std::size_t expected) {
  const json& v = field(obj, parent, key);
  const std::string path = parent + "." + key;
  PHASORNET_CHECK(v.is_array(), "model file: field '" + path + "' must be an array");
  PHASORNET_CHECK(v.size() == expected,
                  "model file: field '" + path + "' has " +
                      std::to_string(v.size()) + " values, expected " +
                      std::to_string(expected));
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < v.size(); ++i) {
    PHASORNET_CHECK(v[i].is_number(), "model file: field '" + path + "[" +
                                          std::to_string(i) + "]' is not a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

}  // namespace

std::string model_to_json(const Model& model) {
  model.validate();
  const auto& p = model.projection;
  std::string out;
  out += "{\"format\":";
  out += json(kModelFormat).dump();
  out += ",\"projection\":{";
  out += fmt::format("\"kind\":\"{}\",\"seed\":{},\"dimension\":{},", to_string(p.kind),
                     p.seed, p.dimension);
  out += "\"density\":";
  fmt::format_to(std::back_inserter(out), "{:.17g}", p.density);
  out += ",\"momentum\":";
  fmt::format_to(std::back_inserter(out), "{:.17g}", p.momentum);
  if (p.kind == ProjectionKind::kNrp) {
    out += ",\"matrix\":";
    append_reals(out, row_major(p.matrix));
    out += ",\"moments\":{\"mean\":";
    append_reals(out, p.moments.mean);
    out += ",\"std\":";
    append_reals(out, p.moments.stddev);
    out += '}';
  } else if (p.kind == ProjectionKind::kRpp) {
    out += ",\"mask\":";
    out += json(p.mask).dump();
  }
  out += "},\"layers\":[";
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    if (l > 0) out += ',';
    out += fmt::format("{{\"in\":{},\"out\":{},\"dropout\":", layer.in_dim(),
                       layer.out_dim());
    fmt::format_to(std::back_inserter(out), "{:.17g}", layer.dropout_rate);
    out += ",\"weights\":";
    append_reals(out, row_major(layer.weights));
    out += '}';
  }
  out += fmt::format("],\"n_classes\":{},\"meta\":", model.n_classes);
  out += json(model.meta).dump();
  out += "}\n";
  return out;
}

Model model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("model file: malformed JSON: ") + e.what());
  }
  PHASORNET_CHECK(doc.is_object(), "model file: top level must be an object");
  const auto format = get_as<std::string>(doc, "", "format");
  PHASORNET_CHECK(format == kModelFormat,
                  "model file: field 'format' is '" + format + "', expected '" +
                      kModelFormat + "'");

  Model model;
  const json& pj = field(doc, "", "projection");
  auto& p = model.projection;
  try {
    p.kind = parse_projection_kind(get_as<std::string>(pj, "projection", "kind"));
  } catch (const Error&) {
    throw Error("model file: field 'projection.kind' is not none|nrp|rpp");
  }
  p.seed = get_as<std::uint64_t>(pj, "projection", "seed");
  p.dimension = get_as<std::size_t>(pj, "projection", "dimension");
  PHASORNET_CHECK(p.dimension > 0, "model file: field 'projection.dimension' is zero");
  p.density = get_as<double>(pj, "projection", "density");
  p.momentum = get_as<double>(pj, "projection", "momentum");
  const auto n = static_cast<Eigen::Index>(p.dimension);
  if (p.kind == ProjectionKind::kNrp) {
    const auto flat = get_reals(pj, "projection", "matrix", p.dimension * p.dimension);
    p.matrix = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(flat.data(), n, n);
    const json& mj = field(pj, "projection", "moments");
    const auto mean = get_reals(mj, "projection.moments", "mean", p.dimension);
    const auto stddev = get_reals(mj, "projection.moments", "std", p.dimension);
    p.moments.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
    p.moments.stddev = Eigen::Map<const Eigen::VectorXd>(stddev.data(), n);
    for (double s : stddev) {
      PHASORNET_CHECK(s > 0.0, "model file: field 'projection.moments.std' must be positive");
    }
  } else if (p.kind == ProjectionKind::kRpp) {
    const auto mask = get_reals(pj, "projection", "mask", p.dimension);
    for (double m : mask) {
      PHASORNET_CHECK(m == 1.0 || m == -1.0,
                      "model file: field 'projection.mask' entries must be +1 or -1");
      p.mask.push_back(static_cast<int>(m));
    }
  }

  const json& lj = field(doc, "", "layers");
  PHASORNET_CHECK(lj.is_array() && !lj.empty(),
                  "model file: field 'layers' must be a non-empty array");
  for (std::size_t l = 0; l < lj.size(); ++l) {
    const std::string name = "layers[" + std::to_string(l) + "]";
    const auto in = get_as<std::size_t>(lj[l], name, "in");
    const auto out = get_as<std::size_t>(lj[l], name, "out");
    DenseLayer layer;
    layer.dropout_rate = get_as<double>(lj[l], name, "dropout");
    const auto flat = get_reals(lj[l], name, "weights", in * out);
    layer.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    model.layers.push_back(std::move(layer));
  }
  model.n_classes = get_as<std::size_t>(doc, "", "n_classes");
  if (auto it = doc.find("meta"); it != doc.end()) {
    PHASORNET_CHECK(it->is_object(), "model file: field 'meta' must be an object");
    for (const auto& [k, v] : it->items()) {
      model.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }
  model.validate();
  return model;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string text = model_to_json(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  PHASORNET_CHECK(out.good(), "cannot write " + path.string());
  out << text;
  PHASORNET_CHECK(out.good(), "error writing " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  PHASORNET_CHECK(in.good(), "cannot open model file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace phasornet
