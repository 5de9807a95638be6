#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rgenima/genome.hpp"

namespace rgenima {

enum class DatasetMode { GeneOnly, ImageGene, Mixture };
const char* dataset_mode_name(DatasetMode m);
DatasetMode parse_dataset_mode(std::string_view s);

struct DatasetConfig {
    DatasetMode mode = DatasetMode::Mixture;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
    std::uint64_t seed = 0;
};

struct DatasetRecord {
    std::string subject_id;
    Stage stage = Stage::NC;
    PromptRecord prompt;
    bool anchored = false;
    std::string patch_set;  // empty when unanchored
};

struct Dataset {
    std::vector<DatasetRecord> train;
    std::vector<DatasetRecord> test;
};

/// Subject-level stratified split, then permutation-augmented prompts. Every
/// subject in `m` needs a known stage; anchored records need an entry in
/// `patch_sets` (subject id -> patch-set path).
Dataset build_dataset(const GenotypeMatrix& m, const GenePanel& panel,
                      const std::map<std::string, std::string>& patch_sets, const DatasetConfig& cfg);

/// One JSON object per line.
void write_records(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);
std::vector<DatasetRecord> read_records(const std::filesystem::path& path);

}  // namespace rgenima
