#include "geninv/network_io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace geninv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_matrix_f64le(const Mat& m, const fs::path& path) {
  static_assert(std::endian::native == std::endian::little,
                "f64le writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(double));
    }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Mat read_matrix_f64le(const fs::path& path, Index rows, Index cols) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open weight binary: " + path.string());
  const auto bytes = static_cast<std::uint64_t>(in.tellg());
  const auto expected = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols) *
                        sizeof(double);
  if (bytes != expected)
    throw std::runtime_error("shape error: " + path.string() + " holds " +
                             std::to_string(bytes / sizeof(double)) + " entries, manifest says " +
                             std::to_string(rows) + "x" + std::to_string(cols));
  in.seekg(0);
  Mat m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(double));
      m(i, j) = v;
    }
  if (!in) throw std::runtime_error("short read: " + path.string());
  return m;
}

}  // namespace

GeneratorNetwork load_network(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest parse error in " + manifest_path.string() + ": " + e.what());
  }
  for (const char* field : {"dims", "activation", "activation_params", "layers", "endianness", "dtype"})
    if (!doc.contains(field))
      throw std::runtime_error("manifest missing field '" + std::string(field) + "'");
  if (doc["dtype"].get<std::string>() != "f64le")
    throw std::runtime_error("unsupported dtype: " + doc["dtype"].get<std::string>());
  if (doc["endianness"].get<std::string>() != "little")
    throw std::runtime_error("unsupported endianness: " + doc["endianness"].get<std::string>());

  ActivationSpec act;
  act.kind = activation_kind_from_string(doc["activation"].get<std::string>());
  const auto& params = doc["activation_params"];
  if (params.contains("alpha")) act.alpha = params["alpha"].get<double>();
  if (params.contains("knee")) act.knee = params["knee"].get<double>();
  act.validate();

  const auto dims = doc["dims"].get<std::vector<Index>>();
  const auto layer_files = doc["layers"].get<std::vector<std::string>>();
  if (dims.size() < 3)
    throw std::runtime_error("manifest dims must list at least [n0, n1, n]");
  if (layer_files.size() != dims.size() - 1)
    throw std::runtime_error("manifest layer count does not match dims");

  const fs::path base = manifest_path.parent_path();
  std::vector<Mat> weights;
  weights.reserve(layer_files.size());
  for (std::size_t i = 0; i < layer_files.size(); ++i)
    weights.push_back(read_matrix_f64le(base / layer_files[i], dims[i + 1], dims[i]));
  return GeneratorNetwork(std::move(weights), act);
}

void save_network(const GeneratorNetwork& net, const fs::path& manifest_path, bool force) {
  if (!force && fs::exists(manifest_path))
    throw std::runtime_error("refusing to overwrite " + manifest_path.string() +
                             " (pass force)");
  const fs::path base = manifest_path.parent_path();
  if (!base.empty()) fs::create_directories(base);

  const std::string stem = manifest_path.stem().string();
  json doc;
  doc["dims"] = net.dims();
  doc["activation"] = to_string(net.activation().kind);
  doc["activation_params"] = {{"alpha", net.activation().alpha}, {"knee", net.activation().knee}};
  doc["endianness"] = "little";
  doc["dtype"] = "f64le";
  std::vector<std::string> layer_files;
  for (std::size_t i = 0; i < net.weights().size(); ++i) {
    std::string name = stem + "_w" + std::to_string(i) + ".bin";
    if (!force && fs::exists(base / name))
      throw std::runtime_error("refusing to overwrite " + (base / name).string() + " (pass force)");
    write_matrix_f64le(net.weights()[i], base / name);
    layer_files.push_back(std::move(name));
  }
  doc["layers"] = layer_files;

  std::ofstream out(manifest_path);
  if (!out) throw std::runtime_error("cannot open for writing: " + manifest_path.string());
  out << doc.dump(2) << "\n";
}

GeneratorNetwork random_network(const std::vector<Index>& dims, const ActivationSpec& activation,
                                Rng& rng) {
  if (dims.size() < 3) throw std::invalid_argument("random_network: dims must be [n0, n1, ..., n]");
  std::vector<Mat> weights;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const Index rows = dims[i + 1], cols = dims[i];
    weights.push_back(rng.gaussian_matrix(rows, cols, 1.0 / std::sqrt(double(rows))));
  }
  return GeneratorNetwork(std::move(weights), activation);
}

Vec load_vector(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vector file: " + path.string());
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double v;
    while (ls >> v) vals.push_back(v);
  }
  Vec out(static_cast<Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Index>(i)] = vals[i];
  return out;
}

void save_vector(const Vec& v, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  char buf[32];
  for (Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    out << buf << "\n";
  }
}

IndexSet load_index_set(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open index file: " + path.string());
  IndexSet s;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long v;
    while (ls >> v) {
      if (v < 0) throw std::runtime_error("negative index in " + path.string());
      s.push_back(static_cast<Index>(v));
    }
  }
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

void save_index_set(const IndexSet& s, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const auto i : s) out << i << "\n";
}

}  // namespace geninv
