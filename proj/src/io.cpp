#include "htsysid/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "htsysid/errors.hpp"

namespace htsysid {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

// Parses `key=value` tokens; returns false if the token has no '='.
bool parse_kv_token(const std::string& tok, std::string* key,
                    std::string* value) {
  const auto eq = tok.find('=');
  if (eq == std::string::npos) return false;
  *key = tok.substr(0, eq);
  *value = tok.substr(eq + 1);
  return true;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw IoError("malformed number '" + s + "' in " + where);
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0')
    throw IoError("malformed integer '" + s + "' in " + where);
  return static_cast<int>(v);
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void write_rows(std::ostream& os, const Eigen::MatrixXd& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ' ';
      os << format_double(M(i, j));
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_rows(std::istream& is, int rows, int cols,
                          const std::string& where) {
  Eigen::MatrixXd M(rows, cols);
  std::string line;
  for (int i = 0; i < rows; ++i) {
    if (!std::getline(is, line))
      throw IoError("unexpected end of file in " + where);
    const auto toks = split_ws(line);
    if (static_cast<int>(toks.size()) != cols)
      throw IoError("expected " + std::to_string(cols) + " values per row in " +
                    where + ", got " + std::to_string(toks.size()));
    for (int j = 0; j < cols; ++j) M(i, j) = parse_double(toks[j], where);
  }
  return M;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
    if (std::strtod(buf, nullptr) == value) return buf;
  }
  return buf;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void save_dataset(const std::string& path, const std::vector<Rollout>& rollouts,
                  int state_dim) {
  if (rollouts.empty()) throw ConfigError("save_dataset: empty dataset");
  const int m = rollouts.front().input_dim();
  const int p = rollouts.front().output_dim();
  const int T = rollouts.front().horizon();
  auto f = open_out(path);
  f << "n=" << state_dim << " m=" << m << " p=" << p << " T=" << T
    << " N=" << rollouts.size() << '\n';
  for (const Rollout& r : rollouts) {
    if (r.input_dim() != m || r.output_dim() != p || r.horizon() != T)
      throw ConfigError("save_dataset: inconsistent rollout dimensions");
    write_rows(f, r.inputs);
    write_rows(f, r.outputs);
  }
  if (!f) throw IoError("failed writing '" + path + "'");
}

DatasetFile load_dataset(const std::string& path) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty dataset file '" + path + "'");
  std::map<std::string, std::string> hdr;
  for (const auto& tok : split_ws(line)) {
    std::string k, v;
    if (!parse_kv_token(tok, &k, &v))
      throw IoError("malformed dataset header token '" + tok + "' in '" + path +
                    "'");
    hdr[k] = v;
  }
  for (const char* key : {"n", "m", "p", "T", "N"})
    if (!hdr.count(key))
      throw IoError("dataset header in '" + path + "' is missing '" +
                    std::string(key) + "='");
  DatasetFile out;
  out.n = parse_int(hdr["n"], path);
  const int m = parse_int(hdr["m"], path);
  const int p = parse_int(hdr["p"], path);
  const int T = parse_int(hdr["T"], path);
  const int N = parse_int(hdr["N"], path);
  if (out.n < 1 || m < 1 || p < 1 || T < 1 || N < 1)
    throw IoError("dataset header in '" + path + "' has non-positive dims");
  out.rollouts.reserve(N);
  for (int i = 0; i < N; ++i) {
    Rollout r;
    r.inputs = read_rows(f, m, T, "rollout " + std::to_string(i) + " of '" +
                                      path + "'");
    r.outputs = read_rows(f, p, T, "rollout " + std::to_string(i) + " of '" +
                                       path + "'");
    out.rollouts.push_back(std::move(r));
  }
  return out;
}

void save_matrix(
    const std::string& path, const Eigen::MatrixXd& M,
    const std::vector<std::pair<std::string, std::string>>& extra_header) {
  auto f = open_out(path);
  f << "rows=" << M.rows() << " cols=" << M.cols();
  for (const auto& [k, v] : extra_header) f << ' ' << k << '=' << v;
  f << '\n';
  write_rows(f, M);
  if (!f) throw IoError("failed writing '" + path + "'");
}

Eigen::MatrixXd load_matrix(const std::string& path,
                            std::map<std::string, std::string>* header) {
  auto f = open_in(path);
  std::string line;
  if (!std::getline(f, line)) throw IoError("empty matrix file '" + path + "'");
  std::map<std::string, std::string> hdr;
  for (const auto& tok : split_ws(line)) {
    std::string k, v;
    if (!parse_kv_token(tok, &k, &v))
      throw IoError("malformed matrix header token '" + tok + "' in '" + path +
                    "'");
    hdr[k] = v;
  }
  if (!hdr.count("rows") || !hdr.count("cols"))
    throw IoError("matrix header in '" + path + "' needs rows= and cols=");
  const int rows = parse_int(hdr["rows"], path);
  const int cols = parse_int(hdr["cols"], path);
  if (rows < 1 || cols < 1)
    throw IoError("matrix header in '" + path + "' has non-positive dims");
  if (header) *header = hdr;
  return read_rows(f, rows, cols, "'" + path + "'");
}

void save_markov(const std::string& path, const MarkovMatrix& g) {
  save_matrix(path, g.entries, {{"m", std::to_string(g.block_width)}});
}

MarkovMatrix load_markov(const std::string& path, int block_width) {
  std::map<std::string, std::string> hdr;
  MarkovMatrix g;
  g.entries = load_matrix(path, &hdr);
  g.block_width = block_width;
  if (g.block_width <= 0) {
    if (!hdr.count("m"))
      throw IoError("matrix file '" + path +
                    "' has no m= header field; pass the block width explicitly");
    g.block_width = parse_int(hdr["m"], path);
  }
  if (g.block_width < 1 || g.entries.cols() % g.block_width != 0)
    throw IoError("matrix in '" + path +
                  "' is not a whole number of Markov blocks wide");
  return g;
}

void save_sections(
    const std::string& path,
    const std::vector<std::pair<std::string, Eigen::MatrixXd>>& sections) {
  auto f = open_out(path);
  for (const auto& [name, M] : sections) {
    f << "section=" << name << " rows=" << M.rows() << " cols=" << M.cols()
      << '\n';
    write_rows(f, M);
  }
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::map<std::string, Eigen::MatrixXd> load_sections(const std::string& path) {
  auto f = open_in(path);
  std::map<std::string, Eigen::MatrixXd> out;
  std::string line;
  while (std::getline(f, line)) {
    if (split_ws(line).empty()) continue;
    std::map<std::string, std::string> hdr;
    for (const auto& tok : split_ws(line)) {
      std::string k, v;
      if (!parse_kv_token(tok, &k, &v))
        throw IoError("malformed section header token '" + tok + "' in '" +
                      path + "'");
      hdr[k] = v;
    }
    if (!hdr.count("section") || !hdr.count("rows") || !hdr.count("cols"))
      throw IoError("section header in '" + path +
                    "' needs section=, rows=, cols=");
    const int rows = parse_int(hdr["rows"], path);
    const int cols = parse_int(hdr["cols"], path);
    if (rows < 1 || cols < 1)
      throw IoError("section in '" + path + "' has non-positive dims");
    out[hdr["section"]] =
        read_rows(f, rows, cols, "section " + hdr["section"] + " of '" + path +
                                     "'");
  }
  if (out.empty()) throw IoError("no sections found in '" + path + "'");
  return out;
}

LtiSystem load_system(const std::string& path) {
  auto sections = load_sections(path);
  for (const char* name : {"A", "B", "C", "D"})
    if (!sections.count(name))
      throw IoError("system file '" + path + "' is missing section " +
                    std::string(name));
  return LtiSystem(sections["A"], sections["B"], sections["C"], sections["D"]);
}

void save_system(const std::string& path, const LtiSystem& sys) {
  save_sections(path,
                {{"A", sys.A}, {"B", sys.B}, {"C", sys.C}, {"D", sys.D}});
}

std::string render_kv(
    const std::vector<std::pair<std::string, std::string>>& items) {
  std::string out;
  for (const auto& [k, v] : items) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void save_kv(const std::string& path,
             const std::vector<std::pair<std::string, std::string>>& items) {
  auto f = open_out(path);
  f << render_kv(items);
  if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace htsysid
