#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hybrid/problems/static_problems.hpp"

namespace hybrid::problems {

enum class RealMode { kInt, kExt };

RealMode parse_real_mode(const std::string& s);
std::string to_string(RealMode mode);

// Header row plus numeric rows of a comma-separated file.
struct CsvTable {
  std::vector<std::string> header;
  Matrix rows;
};

// Quoted fields are supported. Throws DataError on ragged or non-numeric rows.
CsvTable read_csv(const std::filesystem::path& path);

// Loads the CCPP ("ccpp") or concrete strength ("ccs") table and splits it.
// INT: 100 train, 100 val, rest test, at random. EXT: the quarter of rows
// with the lowest target is the test set; 100/100 are drawn from the rest.
// Inputs and target are standardized with training-split statistics. The
// prior is linear in feature 0 (T for CCPP, cement/water for CCS); `truth`
// holds that form with zero parameters and `f_true` is empty.
StaticProblem load_real(const std::filesystem::path& path, const std::string& dataset, RealMode mode,
                        std::uint64_t seed);

}  // namespace hybrid::problems
