#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "grainrisk/connectedness.hpp"
#include "grainrisk/emd.hpp"
#include "grainrisk/forest.hpp"
#include "grainrisk/reconstruct.hpp"
#include "grainrisk/time_series.hpp"

namespace grainrisk {

/// Declarative run configuration. Parsed from a `key = value` text file;
/// every stage command takes one of these.
struct RunConfig {
  std::string prices_path;
  struct PairSpec {
    std::string group;    // e.g. "wheat"
    std::string futures;  // price column name
    std::string spot;
  };
  std::vector<PairSpec> pairs;
  struct FactorFile {
    std::string path;
    Frequency frequency = Frequency::daily;
  };
  std::vector<FactorFile> factors;

  std::string out_dir = "out";
  std::uint64_t seed = 42;
  int threads = 0;

  // decomposition
  EnsembleConfig ensemble;  // I=100, epsilon=0.2
  SiftConfig sift;

  // reconstruction
  ClassifyConfig classify;

  // connectedness
  ConnectednessOptions connect;
  int window = 252;
  int step = 1;

  // drivers
  std::vector<int> grid_trees{100, 300, 500};
  std::vector<int> grid_depths{4, 8, 16, 0};
  std::vector<std::string> grid_features{"third", "sqrt", "all"};
  int min_leaf = 2;
  double split_ratio = 0.8;
  SplitMode split_mode = SplitMode::random;
  bool permutation_importance = false;

  void validate() const;  // file existence, window >= 30, ratio in (0,1)
};

RunConfig parse_run_config(const std::string& path);

/// FNV-1a 64 of a file's bytes, hex-encoded. Used for manifest digests.
std::string file_digest(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Stage commands. Each writes its artifacts plus a manifest
// (config echo, input digests, output digests, seed) under
// <out_dir>/<stage>/ and throws with an actionable message when a required
// prior stage has not run.
void cmd_stats(const RunConfig& cfg);
void cmd_decompose(const RunConfig& cfg);
void cmd_reconstruct(const RunConfig& cfg);
void cmd_connect(const RunConfig& cfg);
void cmd_network(const RunConfig& cfg);
void cmd_drivers(const RunConfig& cfg);
void cmd_all(const RunConfig& cfg);

/// Reads a labeled square matrix CSV (first column = row labels) and renders
/// the heatmap SVG.
void render_heatmap_file(const std::string& matrix_csv_path,
                         const std::string& svg_path);

// Helpers shared with the test suites.
ConnectednessTable table_from_json_file(const std::string& path);
std::string component_label(const std::string& series, const RunConfig& cfg,
                            ComponentKind kind);

}  // namespace grainrisk
