#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "htsysid/lti.hpp"

namespace htsysid {

/// Shortest decimal representation that round-trips a double exactly.
std::string format_double(double value);

/// FNV-1a 64-bit hash of a string, as 16 lowercase hex digits. Used to stamp
/// result files with the configuration that produced them.
std::string fnv1a_hex(const std::string& text);

/// Dataset text format: one header line `n=.. m=.. p=.. T=.. N=..`, then per
/// rollout its m input rows followed by its p output rows, each row holding
/// T space-separated values. Noise records are not serialized.
struct DatasetFile {
  int n = 0;  // state dimension as recorded in the header
  std::vector<Rollout> rollouts;
};

void save_dataset(const std::string& path, const std::vector<Rollout>& rollouts,
                  int state_dim);
DatasetFile load_dataset(const std::string& path);

/// Single-matrix text format: header `rows=.. cols=..` (plus optional extra
/// `key=value` fields such as the Markov block width `m`), then the rows.
void save_matrix(const std::string& path, const Eigen::MatrixXd& M,
                 const std::vector<std::pair<std::string, std::string>>&
                     extra_header = {});
Eigen::MatrixXd load_matrix(const std::string& path,
                            std::map<std::string, std::string>* header = nullptr);

void save_markov(const std::string& path, const MarkovMatrix& g);
/// `block_width` <= 0 means "take m from the file header".
MarkovMatrix load_markov(const std::string& path, int block_width = 0);

/// Multi-section format: repeated `section=NAME rows=.. cols=..` headers,
/// each followed by its rows. Used for system matrices (sections A, B, C, D)
/// and realization output.
void save_sections(
    const std::string& path,
    const std::vector<std::pair<std::string, Eigen::MatrixXd>>& sections);
std::map<std::string, Eigen::MatrixXd> load_sections(const std::string& path);

LtiSystem load_system(const std::string& path);
void save_system(const std::string& path, const LtiSystem& sys);

/// Flat `key = value` diagnostics record.
void save_kv(const std::string& path,
             const std::vector<std::pair<std::string, std::string>>& items);
std::string render_kv(
    const std::vector<std::pair<std::string, std::string>>& items);

}  // namespace htsysid
