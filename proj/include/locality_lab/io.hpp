#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "locality_lab/llis.hpp"
#include "locality_lab/locality_graph.hpp"
#include "locality_lab/models.hpp"
#include "locality_lab/types.hpp"

namespace locality_lab {

using Json = nlohmann::json;

class IoError : public Error {
 public:
  using Error::Error;
};

// Round-trip safe decimal form (17 significant digits).
std::string format_number(double v);
std::string format_number(Index v);

// Rows of already-formatted fields; fields are written verbatim.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Numeric matrix with an optional header line.
void write_matrix_csv(const std::string& path, const Matrix& a, const std::vector<std::string>& header = {});
// Skips a leading non-numeric header line.
Matrix read_matrix_csv(const std::string& path);

// 16-byte header: magic "LLAB", 4 reserved bytes, rows and cols as
// little-endian u32; then rows * cols little-endian f64 in row-major order.
void write_matrix_binary(const std::string& path, const Matrix& a);
Matrix read_matrix_binary(const std::string& path);

// Dispatches on the ".bin" extension.
Matrix read_matrix(const std::string& path);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

Json graph_to_json(const DependencyGraph& g);
DependencyGraph graph_from_json(const Json& j);

// {"type": "gl_chain" | "gaussian_banded" | "gaussian" | "clique", ...}
std::shared_ptr<const BlockedDensityModel> model_from_json(const Json& j);

// {"type": "linear_gaussian", ...}
PosteriorProblem problem_from_json(const Json& j);

// Per-block column-major U arrays, with the problem config echoed so the
// basis can be certified later.
Json basis_to_json(const LLISBasis& basis, const Json& problem_config);
LLISBasis basis_from_json(const Json& j);

// FNV-1a of the compact dump.
std::string config_hash(const Json& config);

struct Manifest {
  std::string command;
  Json config;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> outputs;
};

// Writes <path> with config echo, version, wall time and a timestamp.
void write_manifest(const std::string& path, const Manifest& m);

std::string library_version();

}  // namespace locality_lab
