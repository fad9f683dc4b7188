#pragma once

#include <string>
#include <vector>

#include "crosspred/data.hpp"

namespace crosspred {

// Generic comma-separated table with a header row. No quoting: the formats
// handled here are purely numeric plus short method tags.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Throws InvalidConfigError for unreadable files, ragged rows (message names
// the 1-based data row), or a missing header.
CsvTable read_csv(const std::string& path);

// Headered numeric datasets: columns x1..xp for features, labeled files add
// a final y column. '.' decimal separator.
LabeledDataset load_labeled_csv(const std::string& path);
UnlabeledDataset load_unlabeled_csv(const std::string& path);

// Shortest round-trip decimal text (17 significant digits), so identical
// doubles always serialize to identical bytes.
std::string format_double(double x);

// strtod/strtol wrappers that reject trailing garbage and name `context`
// in the error message.
double parse_double(const std::string& field, const std::string& context);
long parse_long(const std::string& field, const std::string& context);

}  // namespace crosspred
