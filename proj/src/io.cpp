#include "locality_lab/io.hpp"

#include <charconv>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "locality_lab/score_matching.hpp"

namespace locality_lab {

namespace {

constexpr char kMagic[4] = {'L', 'L', 'A', 'B'};

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  std::size_t b = s.find_first_not_of(" \t\r");
  std::size_t e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return false;
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  auto [p, ec] = std::from_chars(first, last, v);
  return ec == std::errc() && p == last;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

template <class T>
T require(const Json& j, const char* key) {
  if (!j.contains(key)) throw std::invalid_argument(std::string("missing config field '") + key + "'");
  return j.at(key).get<T>();
}

template <class T>
T optional_field(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix a(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw std::invalid_argument("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = j[r][c].get<double>();
  }
  return a;
}

Vector vector_from_json(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

BlockStructure blocks_from_json(const Json& j, Index b) {
  if (j.contains("block_sizes")) {
    const auto sizes = j.at("block_sizes").get<std::vector<Index>>();
    return BlockStructure::make(sizes);
  }
  return BlockStructure::uniform(b, optional_field<Index>(j, "block_size", 1));
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_number(Index v) { return std::to_string(v); }

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto out = open_out(path);
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  if (!header.empty()) line(header);
  for (const auto& r : rows) line(r);
  if (!out) throw IoError("write failed for '" + path + "'");
}

void write_matrix_csv(const std::string& path, const Matrix& a, const std::vector<std::string>& header) {
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) rows[static_cast<std::size_t>(r)].push_back(format_number(a(r, c)));
  write_csv(path, header, rows);
}

Matrix read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split(line, ',');
    std::vector<double> vals(fields.size());
    bool ok = true;
    for (std::size_t i = 0; i < fields.size() && ok; ++i) ok = parse_double(fields[i], vals[i]);
    if (!ok) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw IoError(path + ":" + std::to_string(lineno) + ": non-numeric field");
    }
    if (!rows.empty() && vals.size() != rows.front().size())
      throw IoError(path + ":" + std::to_string(lineno) + ": inconsistent column count");
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw IoError("'" + path + "' holds no numeric rows");
  Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return a;
}

void write_matrix_binary(const std::string& path, const Matrix& a) {
  if (a.rows() > 0xffffffffL || a.cols() > 0xffffffffL) throw IoError("matrix too large for the binary format");
  auto out = open_out(path, true);
  out.write(kMagic, 4);
  put_u32(out, 0);
  put_u32(out, static_cast<std::uint32_t>(a.rows()));
  put_u32(out, static_cast<std::uint32_t>(a.cols()));
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      std::uint64_t bits;
      const double v = a(r, c);
      std::memcpy(&bits, &v, 8);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xffu);
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Matrix read_matrix_binary(const std::string& path) {
  auto in = open_in(path, true);
  unsigned char head[16];
  if (!in.read(reinterpret_cast<char*>(head), 16)) throw IoError("'" + path + "' is shorter than its header");
  if (std::memcmp(head, kMagic, 4) != 0) throw IoError("'" + path + "' has a bad magic number");
  const std::uint32_t rows = get_u32(head + 8);
  const std::uint32_t cols = get_u32(head + 12);
  Matrix a(rows, cols);
  unsigned char b[8];
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("'" + path + "' is truncated");
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
      double v;
      std::memcpy(&v, &bits, 8);
      a(r, c) = v;
    }
  return a;
}

Matrix read_matrix(const std::string& path) {
  const bool bin = path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0;
  return bin ? read_matrix_binary(path) : read_matrix_csv(path);
}

Json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

void write_json(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

Json graph_to_json(const DependencyGraph& g) { return Json(g.adjacency()); }

DependencyGraph graph_from_json(const Json& j) {
  const Json& adj = j.is_object() ? j.at("adjacency") : j;
  return DependencyGraph::from_adjacency(adj.get<std::vector<std::vector<Index>>>());
}

std::shared_ptr<const BlockedDensityModel> model_from_json(const Json& j) {
  const auto type = require<std::string>(j, "type");
  if (type == "gl_chain") {
    return std::make_shared<GinzburgLandauChain>(
        gl_chain(require<Index>(j, "n"), require<double>(j, "lambda"), optional_field<double>(j, "m_param", 0.0),
                 require<double>(j, "beta"), optional_field<double>(j, "pinning", 0.0)));
  }
  if (type == "gaussian_banded") {
    const auto b = require<Index>(j, "b");
    return std::make_shared<GaussianModel>(gaussian_from_banded_precision(
        blocks_from_json(j, b), optional_field<Index>(j, "bandwidth", 1), require<double>(j, "m"),
        require<double>(j, "M"), optional_field<std::uint64_t>(j, "seed", 0)));
  }
  if (type == "gaussian") {
    const Matrix prec = matrix_from_json(j.at("precision"));
    const Vector mean = j.contains("mean") ? vector_from_json(j.at("mean")) : Vector::Zero(prec.rows());
    const auto blocks = j.contains("block_sizes") ? blocks_from_json(j, 0)
                                                  : BlockStructure::uniform(static_cast<Index>(prec.rows()), 1);
    std::optional<DependencyGraph> g;
    if (j.contains("graph")) g = graph_from_json(j.at("graph"));
    return std::make_shared<GaussianModel>(blocks, prec, mean, g);
  }
  if (type == "clique") {
    const ScoreHypothesis hyp(graph_from_json(j.at("graph")),
                              dictionary_from_string(optional_field<std::string>(j, "dict", "quad")),
                              optional_field<double>(j, "R", 1e3));
    return hyp.to_model(vector_from_json(j.at("theta")));
  }
  throw std::invalid_argument("unknown model type '" + type + "'");
}

PosteriorProblem problem_from_json(const Json& j) {
  const auto type = require<std::string>(j, "type");
  if (type != "linear_gaussian") throw std::invalid_argument("unknown problem type '" + type + "'");
  return linear_gaussian_problem(require<Index>(j, "b"), optional_field<Index>(j, "block_size", 1),
                                 optional_field<Index>(j, "bandwidth", 1), optional_field<Index>(j, "obs_per_block", 1),
                                 optional_field<double>(j, "prior_m", 1.0), optional_field<double>(j, "prior_M", 2.0),
                                 optional_field<double>(j, "tau", 1.0), optional_field<std::uint64_t>(j, "seed", 0));
}

Json basis_to_json(const LLISBasis& basis, const Json& problem_config) {
  Json blocks = Json::array();
  for (Index k = 0; k < basis.U.size(); ++k) {
    const Matrix& U = basis.U[k];
    std::vector<double> col_major(U.data(), U.data() + U.size());
    const Vector& ev = basis.eigenvalues[k];
    blocks.push_back({{"rows", U.rows()},
                      {"cols", U.cols()},
                      {"U", col_major},
                      {"eigenvalues", std::vector<double>(ev.data(), ev.data() + ev.size())}});
  }
  return {{"epsilon", basis.epsilon},
          {"block_sizes", basis.blocks.sizes()},
          {"ranks", basis.ranks},
          {"blocks", blocks},
          {"problem", problem_config}};
}

LLISBasis basis_from_json(const Json& j) {
  const auto sizes = require<std::vector<Index>>(j, "block_sizes");
  LLISBasis basis{BlockStructure::make(sizes), 0.0, {}, {}, {}};
  basis.epsilon = optional_field<double>(j, "epsilon", 0.0);
  const Json& blocks = j.at("blocks");
  if (blocks.size() != sizes.size()) throw std::invalid_argument("basis block count mismatch");
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const auto rows = blocks[k].at("rows").get<Eigen::Index>();
    const auto cols = blocks[k].at("cols").get<Eigen::Index>();
    const auto data = blocks[k].at("U").get<std::vector<double>>();
    if (static_cast<Index>(rows) != sizes[k] || static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw std::invalid_argument("basis block " + std::to_string(k) + " has inconsistent shape");
    basis.U.emplace_back(Eigen::Map<const Matrix>(data.data(), rows, cols));
    basis.ranks.push_back(static_cast<Index>(cols));
    basis.eigenvalues.push_back(blocks[k].contains("eigenvalues") ? vector_from_json(blocks[k].at("eigenvalues"))
                                                                  : Vector());
  }
  return basis;
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string library_version() { return LOCALITY_LAB_VERSION; }

void write_manifest(const std::string& path, const Manifest& m) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  write_json(path, {{"command", m.command},
                    {"config", m.config},
                    {"config_hash", config_hash(m.config)},
                    {"seed", m.seed},
                    {"version", library_version()},
                    {"wall_seconds", m.wall_seconds},
                    {"outputs", m.outputs},
                    {"timestamp", stamp}});
}

}  // namespace locality_lab
