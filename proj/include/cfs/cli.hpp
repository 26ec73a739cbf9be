#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cfs/corpus.hpp"
#include "cfs/error.hpp"
#include "cfs/synth.hpp"

namespace cfs {

inline constexpr const char* kVersion = "0.1.0";

/// 0 success, 1 unexpected failure, 2 usage, 3 unreadable or unwritable
/// file, 4 invalid configuration, 5 data that cannot be processed.
int exit_code_for(ErrorKind kind);

/// Runs one command line (without the program name). Errors are reported as
/// a JSON object on `err`; the return value is the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

nlohmann::json to_json(const SynthConfig& c);
SynthConfig synth_config_from_json(const nlohmann::json& j);

/// Sidecar metadata written next to a synthetic dataset CSV.
nlohmann::json synth_metadata(const SyntheticDataset& ds, const SynthConfig& config);
GroundTruth ground_truth_from_json(const nlohmann::json& meta);

/// A ".jsonl" path is read as a corpus (TF*IDF features plus counts); any
/// other path as a dense CSV dataset. `meta_path` attaches ground truth.
LabeledDataset load_dataset(const std::string& path, const std::string& meta_path = "",
                            std::size_t min_doc_freq = 1);

}  // namespace cfs
