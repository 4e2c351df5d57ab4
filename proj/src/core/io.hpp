#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hmc.hpp"
#include "mlp.hpp"

namespace epinn::io {

// ---------------------------------------------------------------------------
// CSV files with pinned schemas
// ---------------------------------------------------------------------------

// Every CSV this project emits carries one of these schemas; the column lists
// here are the source of truth and must stay in sync with the checked-in
// manifest (schemas/csv_columns.json).
enum class CsvKind {
    training_log,
    metrics,
    kappa,
    kappa_histogram,
    prediction_1d,
    prediction_2d_y,
    prediction_2d_t,
    bands,
    sweep,
    report,
};

const std::vector<std::string>& csv_columns(CsvKind kind);
const char* csv_kind_name(CsvKind kind);

// Shortest representation that parses back to the same double ("nan" for
// non-finite values); used for every numeric CSV cell so identical values
// always produce identical bytes.
std::string csv_cell(double v);
std::string csv_cell(long v);

// Writes header + rows, validating each row's arity against the schema.
void write_csv(const std::filesystem::path& path, CsvKind kind,
               const std::vector<std::vector<std::string>>& rows);

struct CsvFile {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

CsvFile read_csv(const std::filesystem::path& path);

// Throws ConfigError naming the file when a schema column is absent.
void require_columns(const CsvFile& file, CsvKind kind, const std::filesystem::path& path);

// Column index lookup; throws ConfigError naming the file when missing.
std::size_t column_index(const CsvFile& file, const std::string& name,
                         const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Binary artifacts: length-prefixed payload behind a JSON header
// ---------------------------------------------------------------------------

struct Checkpoint {
    ad::Architecture arch;
    std::vector<double> params;
    std::uint64_t seed = 0;
    long epochs = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ad::Architecture& arch,
                     std::span<const double> params, std::uint64_t seed, long epochs);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_chain(const std::filesystem::path& path, const bayes::Chain& chain,
                const bayes::HmcConfig& cfg);

struct ChainFile {
    bayes::Chain chain;
    bayes::HmcConfig config;
};

ChainFile load_chain(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Small file helpers
// ---------------------------------------------------------------------------

std::string read_text(const std::filesystem::path& path); // IoError on failure
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace epinn::io
