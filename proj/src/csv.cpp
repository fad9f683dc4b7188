#include "crosspred/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "crosspred/errors.hpp"

namespace crosspred {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        std::string field = line.substr(start, pos == std::string::npos ? pos : pos - start);
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ' || field.back() == '\t'))
            field.pop_back();
        std::size_t lead = 0;
        while (lead < field.size() && (field[lead] == ' ' || field[lead] == '\t')) ++lead;
        out.push_back(field.substr(lead));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool blank(const std::string& line) {
    for (char c : line) {
        if (c != ' ' && c != '\t' && c != '\r') return false;
    }
    return true;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError("cannot open " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line) || blank(line)) {
        throw InvalidConfigError(path + ": empty file (expected a header row)");
    }
    table.header = split_fields(line);
    int row = 0;
    while (std::getline(in, line)) {
        if (blank(line)) continue;
        ++row;
        auto fields = split_fields(line);
        if (fields.size() != table.header.size()) {
            throw InvalidConfigError(path + ": row " + std::to_string(row) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    return table;
}

double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw InvalidConfigError(context + ": cannot parse '" + field + "' as a number");
    }
    return value;
}

long parse_long(const std::string& field, const std::string& context) {
    long value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw InvalidConfigError(context + ": cannot parse '" + field + "' as an integer");
    }
    return value;
}

namespace {

Eigen::MatrixXd parse_features(const CsvTable& table, const std::string& path, int p) {
    Eigen::MatrixXd X(static_cast<Eigen::Index>(table.rows.size()), p);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (int j = 0; j < p; ++j) {
            X(static_cast<Eigen::Index>(r), j) = parse_double(
                table.rows[r][j], path + " row " + std::to_string(r + 1) + " column x" + std::to_string(j + 1));
        }
    }
    return X;
}

void check_feature_header(const CsvTable& table, const std::string& path, int p) {
    for (int j = 0; j < p; ++j) {
        const std::string want = "x" + std::to_string(j + 1);
        if (table.header[j] != want) {
            throw InvalidConfigError(path + ": expected header column " + std::to_string(j + 1) +
                                     " to be '" + want + "', got '" + table.header[j] + "'");
        }
    }
}

}  // namespace

LabeledDataset load_labeled_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.header.size() < 2 || table.header.back() != "y") {
        throw InvalidConfigError(path + ": labeled files need columns x1..xp,y");
    }
    const int p = static_cast<int>(table.header.size()) - 1;
    check_feature_header(table, path, p);
    if (table.rows.empty()) throw InvalidConfigError(path + ": no data rows");
    LabeledDataset out;
    out.X = parse_features(table, path, p);
    out.y.resize(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out.y(static_cast<Eigen::Index>(r)) =
            parse_double(table.rows[r][p], path + " row " + std::to_string(r + 1) + " column y");
    }
    validate_labeled(out, path);
    return out;
}

UnlabeledDataset load_unlabeled_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    if (table.header.empty() || table.header.back() == "y") {
        throw InvalidConfigError(path + ": unlabeled files need columns x1..xp without y");
    }
    const int p = static_cast<int>(table.header.size());
    check_feature_header(table, path, p);
    if (table.rows.empty()) throw InvalidConfigError(path + ": no data rows");
    UnlabeledDataset out;
    out.X = parse_features(table, path, p);
    validate_unlabeled(out, path);
    return out;
}

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace crosspred
