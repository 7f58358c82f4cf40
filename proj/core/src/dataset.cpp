#include "mmfusion/dataset.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"

#include <algorithm>
#include <cmath>

namespace mmfusion {

namespace {

constexpr std::size_t kFixedColumns = 2 + kNumClinicalBlocks;

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string at_line(std::size_t line, const std::string& msg) {
    return "line " + std::to_string(line) + ": " + msg;
}

} // namespace

std::string dataset_header(std::size_t image_dim) {
    std::string out = "id,label";
    for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
        out += ",";
        out += clinical_block_name(b);
    }
    for (std::size_t i = 0; i < image_dim; ++i) out += ",e" + std::to_string(i);
    return out;
}

std::vector<SampleRecord> parse_dataset(std::string_view text, const ClinicalVocabulary& vocab,
                                        const DatasetSchema& schema) {
    std::vector<std::string_view> lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
    }
    if (lines.empty()) throw ParseError(at_line(1, "missing header"));
    if (lines.front() != dataset_header(schema.image_dim)) {
        const std::size_t columns = split(lines.front(), ',').size();
        throw ParseError(at_line(1, "header does not match the schema for image_dim " +
                                        std::to_string(schema.image_dim) + " (" + std::to_string(columns) +
                                        " columns)"));
    }

    std::vector<SampleRecord> records;
    records.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const std::size_t line_no = li + 1;
        const auto cells = split(lines[li], ',');
        if (cells.size() < kFixedColumns) {
            throw ParseError(at_line(line_no, "expected at least " + std::to_string(kFixedColumns) +
                                                  " columns, got " + std::to_string(cells.size())));
        }
        if (cells.size() != kFixedColumns + schema.image_dim) {
            throw DimensionError(at_line(line_no, "expected " + std::to_string(schema.image_dim) +
                                                      " embedding values, got " +
                                                      std::to_string(cells.size() - kFixedColumns)));
        }
        SampleRecord rec;
        rec.id = std::string(cells[0]);
        if (rec.id.empty()) throw ParseError(at_line(line_no, "empty id"));
        rec.label = std::string(cells[1]);
        if (std::find(schema.class_names.begin(), schema.class_names.end(), rec.label) == schema.class_names.end()) {
            throw ParseError(at_line(line_no, "unknown label '" + rec.label + "'"));
        }
        for (std::size_t b = 0; b < kNumClinicalBlocks; ++b) {
            const std::string_view cell = cells[2 + b];
            if (cell.empty()) continue;
            if (cell.find('|') != std::string_view::npos) {
                throw ParseError(at_line(line_no, "multi-label value '" + std::string(cell) + "' in " +
                                                      std::string(clinical_block_name(b))));
            }
            if (!vocab.index_of(b, cell)) {
                throw VocabularyError(at_line(line_no, "unknown category '" + std::string(cell) + "' in block '" +
                                                           std::string(clinical_block_name(b)) + "'"));
            }
            rec.clinical.fields[b] = std::string(cell);
        }
        rec.image_embedding.resize(schema.image_dim);
        for (std::size_t i = 0; i < schema.image_dim; ++i) {
            const auto v = parse_double(cells[kFixedColumns + i]);
            if (!v || !std::isfinite(*v)) {
                throw ParseError(at_line(line_no, "bad embedding value '" + std::string(cells[kFixedColumns + i]) +
                                                      "' in column e" + std::to_string(i)));
            }
            rec.image_embedding[i] = *v;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<SampleRecord> load_dataset(const std::filesystem::path& path, const ClinicalVocabulary& vocab,
                                       const DatasetSchema& schema) {
    auto text = read_file(path);
    if (!text) throw ConfigError("cannot read dataset " + path.string());
    try {
        return parse_dataset(*text, vocab, schema);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const VocabularyError& e) {
        throw VocabularyError(path.string() + ": " + e.what());
    } catch (const DimensionError& e) {
        throw DimensionError(path.string() + ": " + e.what());
    }
}

std::string format_dataset(std::span<const SampleRecord> records, std::size_t image_dim) {
    std::string out = dataset_header(image_dim) + "\n";
    for (const SampleRecord& r : records) {
        if (r.image_embedding.size() != image_dim) {
            throw DimensionError("record '" + r.id + "' has " + std::to_string(r.image_embedding.size()) +
                                 " embedding values, expected " + std::to_string(image_dim));
        }
        out += r.id;
        out += ',';
        out += r.label;
        for (const auto& field : r.clinical.fields) {
            out += ',';
            if (field) out += *field;
        }
        for (double v : r.image_embedding) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void write_dataset(const std::filesystem::path& path, std::span<const SampleRecord> records, std::size_t image_dim) {
    write_file_atomic(path, format_dataset(records, image_dim));
}

std::vector<Example> to_examples(std::span<const SampleRecord> records, const ClinicalVocabulary& vocab,
                                 const std::vector<std::string>& class_names) {
    std::vector<Example> out;
    out.reserve(records.size());
    for (const SampleRecord& r : records) {
        auto it = std::find(class_names.begin(), class_names.end(), r.label);
        if (it == class_names.end()) throw ParseError("record '" + r.id + "' has unknown label '" + r.label + "'");
        out.push_back({r.image_embedding, encode(r.clinical, vocab),
                       static_cast<std::size_t>(it - class_names.begin())});
    }
    return out;
}

} // namespace mmfusion
